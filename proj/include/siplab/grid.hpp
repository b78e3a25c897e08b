// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace siplab {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

/// Dense row-major array of 64-bit reals. The universal value carrier for
/// network activations, physics fields and parameter vectors.
struct Grid {
    Shape shape;
    std::vector<double> data;

    Grid() = default;
    Grid(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
            throw std::invalid_argument("Grid: shape " + shape_str(shape) +
                                        " does not match data length " + std::to_string(data.size()));
    }

    static Grid zeros(Shape s) {
        auto n = shape_numel(s);
        return Grid(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
    }
    static Grid full(Shape s, double v) {
        auto n = shape_numel(s);
        return Grid(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
    }
    static Grid scalar(double v) { return Grid({1}, {v}); }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    std::int64_t dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    double& operator[](std::int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const Grid& o) const { return shape == o.shape; }
};

inline void require_shape(const Grid& g, const Shape& s, const char* what) {
    if (g.shape != s)
        throw std::invalid_argument(std::string(what) + ": expected shape " + shape_str(s) +
                                    ", got " + shape_str(g.shape));
}

inline void require_rank(const Grid& g, int r, const char* what) {
    if (g.rank() != r)
        throw std::invalid_argument(std::string(what) + ": expected rank " + std::to_string(r) +
                                    ", got shape " + shape_str(g.shape));
}

/// NaN/Inf is surfaced as an error, never propagated silently.
inline void check_finite(const Grid& g, const char* what) {
    for (double v : g.data)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite value produced by ") + what);
}

inline double sum(const Grid& g) {
    double s = 0;
    for (double v : g.data) s += v;
    return s;
}

inline double mean(const Grid& g) { return g.numel() ? sum(g) / static_cast<double>(g.numel()) : 0.0; }

inline double norm_l1(const Grid& g) {
    double s = 0;
    for (double v : g.data) s += std::abs(v);
    return s;
}

inline double norm_l2(const Grid& g) {
    double s = 0;
    for (double v : g.data) s += v * v;
    return std::sqrt(s);
}

inline double norm_linf(const Grid& g) {
    double s = 0;
    for (double v : g.data) s = std::max(s, std::abs(v));
    return s;
}

inline double dot(const Grid& a, const Grid& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("dot: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    double s = 0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline Grid operator+(const Grid& a, const Grid& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("Grid+: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Grid r = a;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
    return r;
}

inline Grid operator-(const Grid& a, const Grid& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("Grid-: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Grid r = a;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= b.data[i];
    return r;
}

inline Grid operator*(const Grid& a, double c) {
    Grid r = a;
    for (auto& v : r.data) v *= c;
    return r;
}
inline Grid operator*(double c, const Grid& a) { return a * c; }

inline void axpy(double a, const Grid& x, Grid& y) {
    if (!x.same_shape(y))
        throw std::invalid_argument("axpy: shape mismatch");
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

}  // namespace siplab
