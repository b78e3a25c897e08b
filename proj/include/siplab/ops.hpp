// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "siplab/tape.hpp"

namespace siplab::ops {

using Id = Tape::Id;

// ---------------------------------------------------------------- arithmetic

inline Id add(Tape& t, Id a, Id b) {
    Grid v = t.value(a) + t.value(b);
    return t.record("add", std::move(v), {a, b}, [a, b](Tape& tp, Id, const Grid& up) {
        tp.add_grad(a, up);
        tp.add_grad(b, up);
    });
}

inline Id sub(Tape& t, Id a, Id b) {
    Grid v = t.value(a) - t.value(b);
    return t.record("sub", std::move(v), {a, b}, [a, b](Tape& tp, Id, const Grid& up) {
        tp.add_grad(a, up);
        if (tp.wants_grad(b)) {
            Grid& gb = tp.grad_buffer(b);
            for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= up.data[i];
        }
    });
}

inline Id mul(Tape& t, Id a, Id b) {
    const Grid& va = t.value(a);
    const Grid& vb = t.value(b);
    if (!va.same_shape(vb))
        throw std::invalid_argument("mul: shape mismatch " + shape_str(va.shape) + " vs " + shape_str(vb.shape));
    Grid v = va;
    for (size_t i = 0; i < v.data.size(); ++i) v.data[i] *= vb.data[i];
    return t.record("mul", std::move(v), {a, b}, [a, b](Tape& tp, Id, const Grid& up) {
        if (tp.wants_grad(a)) {
            Grid& ga = tp.grad_buffer(a);
            const Grid& vb2 = tp.value(b);
            for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += up.data[i] * vb2.data[i];
        }
        if (tp.wants_grad(b)) {
            Grid& gb = tp.grad_buffer(b);
            const Grid& va2 = tp.value(a);
            for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += up.data[i] * va2.data[i];
        }
    });
}

inline Id scale(Tape& t, Id a, double c) {
    Grid v = t.value(a) * c;
    return t.record("scale", std::move(v), {a}, [a, c](Tape& tp, Id, const Grid& up) {
        if (tp.wants_grad(a)) {
            Grid& ga = tp.grad_buffer(a);
            for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += c * up.data[i];
        }
    });
}

inline Id add_const(Tape& t, Id a, double c) {
    Grid v = t.value(a);
    for (auto& x : v.data) x += c;
    return t.record("add_const", std::move(v), {a},
                    [a](Tape& tp, Id, const Grid& up) { tp.add_grad(a, up); });
}

inline Id neg(Tape& t, Id a) { return scale(t, a, -1.0); }

/// Elementwise exp.
inline Id exp(Tape& t, Id a) {
    Grid v = t.value(a);
    for (auto& x : v.data) x = std::exp(x);
    return t.record("exp", std::move(v), {a}, [a](Tape& tp, Id self, const Grid& up) {
        if (!tp.wants_grad(a)) return;
        Grid& ga = tp.grad_buffer(a);
        const Grid& out = tp.value(self);
        for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += up.data[i] * out.data[i];
    });
}

// ---------------------------------------------------------------- reductions

inline Id sum(Tape& t, Id a) {
    Grid v = Grid::scalar(siplab::sum(t.value(a)));
    return t.record("sum", std::move(v), {a}, [a](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(a)) return;
        Grid& ga = tp.grad_buffer(a);
        double u = up.data[0];
        for (auto& x : ga.data) x += u;
    });
}

inline Id mean(Tape& t, Id a) {
    return scale(t, sum(t, a), 1.0 / static_cast<double>(t.value(a).numel()));
}

// ------------------------------------------------------------- scalar algebra

inline Id sqrt_scalar(Tape& t, Id a) {
    const Grid& va = t.value(a);
    if (va.numel() != 1) throw std::invalid_argument("sqrt_scalar: expects scalar node");
    Grid v = Grid::scalar(std::sqrt(va.data[0]));
    return t.record("sqrt", std::move(v), {a}, [a](Tape& tp, Id self, const Grid& up) {
        if (!tp.wants_grad(a)) return;
        double s = tp.value(self).data[0];
        tp.grad_buffer(a).data[0] += up.data[0] * 0.5 / s;
    });
}

inline Id div_scalar(Tape& t, Id a, Id b) {
    const Grid& va = t.value(a);
    const Grid& vb = t.value(b);
    if (va.numel() != 1 || vb.numel() != 1) throw std::invalid_argument("div_scalar: expects scalar nodes");
    Grid v = Grid::scalar(va.data[0] / vb.data[0]);
    return t.record("div_scalar", std::move(v), {a, b}, [a, b](Tape& tp, Id, const Grid& up) {
        double bv = tp.value(b).data[0];
        if (tp.wants_grad(a)) tp.grad_buffer(a).data[0] += up.data[0] / bv;
        if (tp.wants_grad(b)) tp.grad_buffer(b).data[0] -= up.data[0] * tp.value(a).data[0] / (bv * bv);
    });
}

/// field * s where s is a scalar node (broadcast).
inline Id mul_bcast(Tape& t, Id field, Id s) {
    const Grid& vf = t.value(field);
    double sv = t.value(s).data[0];
    Grid v = vf * sv;
    return t.record("mul_bcast", std::move(v), {field, s}, [field, s](Tape& tp, Id, const Grid& up) {
        double sv2 = tp.value(s).data[0];
        if (tp.wants_grad(field)) {
            Grid& gf = tp.grad_buffer(field);
            for (size_t i = 0; i < gf.data.size(); ++i) gf.data[i] += up.data[i] * sv2;
        }
        if (tp.wants_grad(s)) {
            const Grid& vf2 = tp.value(field);
            double acc = 0;
            for (size_t i = 0; i < vf2.data.size(); ++i) acc += up.data[i] * vf2.data[i];
            tp.grad_buffer(s).data[0] += acc;
        }
    });
}

// ------------------------------------------------------------- shape plumbing

inline Id reshape(Tape& t, Id a, Shape s) {
    const Grid& va = t.value(a);
    if (shape_numel(s) != va.numel())
        throw std::invalid_argument("reshape: cannot view " + shape_str(va.shape) + " as " + shape_str(s));
    Grid v(std::move(s), va.data);
    return t.record("reshape", std::move(v), {a}, [a](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(a)) return;
        Grid& ga = tp.grad_buffer(a);
        for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += up.data[i];
    });
}

/// Copies `count` entries of a flat parameter vector into a grid of the
/// given shape; the adjoint scatters back into the flat vector.
inline Id slice_param(Tape& t, Id theta, std::int64_t offset, Shape s) {
    const Grid& vt = t.value(theta);
    std::int64_t count = shape_numel(s);
    if (offset < 0 || offset + count > vt.numel())
        throw std::invalid_argument("slice_param: range out of bounds");
    Grid v = Grid::zeros(std::move(s));
    for (std::int64_t i = 0; i < count; ++i) v[i] = vt[offset + i];
    return t.record("slice_param", std::move(v), {theta}, [theta, offset](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(theta)) return;
        Grid& gt = tp.grad_buffer(theta);
        for (std::int64_t i = 0; i < up.numel(); ++i) gt[offset + i] += up[i];
    });
}

/// Value passes through, backward contributes zero.
inline Id stop_gradient(Tape& t, Id a) {
    return t.constant(t.value(a));
}

// --------------------------------------------------------------- activations

inline Id relu(Tape& t, Id a) {
    Grid v = t.value(a);
    for (auto& x : v.data) x = x > 0 ? x : 0.0;
    return t.record("relu", std::move(v), {a}, [a](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(a)) return;
        Grid& ga = tp.grad_buffer(a);
        const Grid& in = tp.value(a);
        for (size_t i = 0; i < ga.data.size(); ++i)
            if (in.data[i] > 0) ga.data[i] += up.data[i];
    });
}

inline Id sigmoid(Tape& t, Id a) {
    Grid v = t.value(a);
    for (auto& x : v.data) x = 1.0 / (1.0 + std::exp(-x));
    return t.record("sigmoid", std::move(v), {a}, [a](Tape& tp, Id self, const Grid& up) {
        if (!tp.wants_grad(a)) return;
        Grid& ga = tp.grad_buffer(a);
        const Grid& s = tp.value(self);
        for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += up.data[i] * s.data[i] * (1.0 - s.data[i]);
    });
}

// -------------------------------------------------------------- dense layer

/// y[b,o] = sum_i x[b,i] W[i,o] + bias[o]
inline Id linear(Tape& t, Id x, Id w, Id bias) {
    const Grid& vx = t.value(x);
    const Grid& vw = t.value(w);
    const Grid& vb = t.value(bias);
    require_rank(vx, 2, "linear input");
    require_rank(vw, 2, "linear weight");
    if (vx.shape[1] != vw.shape[0])
        throw std::invalid_argument("linear: input feature axis (1) = " + std::to_string(vx.shape[1]) +
                                    " does not match weight rows = " + std::to_string(vw.shape[0]));
    if (vb.numel() != vw.shape[1])
        throw std::invalid_argument("linear: bias length does not match weight cols");
    const std::int64_t B = vx.shape[0], I = vw.shape[0], O = vw.shape[1];
    Grid v = Grid::zeros({B, O});
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t o = 0; o < O; ++o) v[b * O + o] = vb[o];
        for (std::int64_t i = 0; i < I; ++i) {
            double xv = vx[b * I + i];
            const double* wrow = vw.data.data() + i * O;
            double* orow = v.data.data() + b * O;
            for (std::int64_t o = 0; o < O; ++o) orow[o] += xv * wrow[o];
        }
    }
    return t.record("linear", std::move(v), {x, w, bias}, [x, w, bias, B, I, O](Tape& tp, Id, const Grid& up) {
        const Grid& vx2 = tp.value(x);
        const Grid& vw2 = tp.value(w);
        if (tp.wants_grad(x)) {
            Grid& gx = tp.grad_buffer(x);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t i = 0; i < I; ++i) {
                    const double* wrow = vw2.data.data() + i * O;
                    const double* urow = up.data.data() + b * O;
                    double acc = 0;
                    for (std::int64_t o = 0; o < O; ++o) acc += wrow[o] * urow[o];
                    gx[b * I + i] += acc;
                }
        }
        if (tp.wants_grad(w)) {
            Grid& gw = tp.grad_buffer(w);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t i = 0; i < I; ++i) {
                    double xv = vx2[b * I + i];
                    const double* urow = up.data.data() + b * O;
                    double* grow = gw.data.data() + i * O;
                    for (std::int64_t o = 0; o < O; ++o) grow[o] += xv * urow[o];
                }
        }
        if (tp.wants_grad(bias)) {
            Grid& gb = tp.grad_buffer(bias);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t o = 0; o < O; ++o) gb[o] += up[b * O + o];
        }
    });
}

// --------------------------------------------------------------- composites

/// coeff * sum((a-b)^2); the building block of every L2 objective.
inline Id scaled_sq_diff(Tape& t, Id a, Id b, double coeff) {
    Id d = sub(t, a, b);
    return scale(t, sum(t, mul(t, d, d)), coeff);
}

}  // namespace siplab::ops
