// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "siplab/grid.hpp"
#include "siplab/tape.hpp"

namespace siplab::testing {

/// Scalar objective over a single input grid, rebuilt on a fresh tape per
/// evaluation so it can be probed by finite differences.
using ScalarFn = std::function<Tape::Id(Tape&, Tape::Id)>;

inline double eval_scalar(const ScalarFn& fn, const Grid& x) {
    Tape t;
    auto xi = t.leaf(x, false);
    return t.value(fn(t, xi)).data[0];
}

inline Grid analytic_grad(const ScalarFn& fn, const Grid& x) {
    Tape t;
    auto xi = t.leaf(x, true);
    auto loss = fn(t, xi);
    return t.backward(loss, {xi})[0];
}

inline Grid fd_grad(const ScalarFn& fn, const Grid& x, double eps = 1e-5) {
    Grid g = Grid::zeros(x.shape);
    Grid xp = x;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        xp[i] = x[i] + eps;
        double fp = eval_scalar(fn, xp);
        xp[i] = x[i] - eps;
        double fm = eval_scalar(fn, xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2 * eps);
    }
    return g;
}

/// Largest mixed relative error between two gradients. Components below 1%
/// of the gradient's overall scale are compared against that scale instead,
/// so finite-difference noise on structurally-zero entries does not inflate
/// the result.
inline double max_rel_err(const Grid& a, const Grid& b) {
    double scale = std::max(norm_linf(a), norm_linf(b));
    double floor_abs = 0.01 * scale + 1e-12;
    double worst = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor_abs});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

inline double grad_check(const ScalarFn& fn, const Grid& x, double eps = 1e-5) {
    return max_rel_err(analytic_grad(fn, x), fd_grad(fn, x, eps));
}

}  // namespace siplab::testing
