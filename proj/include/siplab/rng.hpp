// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "siplab/grid.hpp"

namespace siplab {

/// Deterministic random source. The engine is the standardized mt19937_64;
/// the distributions are hand-rolled so that streams are bit-identical
/// across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Inclusive range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        // Box-Muller; the second variate is discarded to keep the stream simple.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mu + sigma * z;
    }

    Grid uniform_grid(Shape s, double lo, double hi) {
        Grid g = Grid::zeros(std::move(s));
        for (auto& v : g.data) v = uniform(lo, hi);
        return g;
    }

    Grid normal_grid(Shape s, double mu = 0.0, double sigma = 1.0) {
        Grid g = Grid::zeros(std::move(s));
        for (auto& v : g.data) v = normal(mu, sigma);
        return g;
    }

    /// Independent substream, stable under reordering of other draws.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 finalizer over the pair
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace siplab
