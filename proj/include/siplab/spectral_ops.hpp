// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "siplab/fft.hpp"
#include "siplab/ops.hpp"

namespace siplab::ops {

/// Forward 2-D transform as a tape op. Input [h,w], output [2,h,w] with
/// real and imaginary channels. The adjoint is the inverse transform scaled
/// by h*w, consistent with the unnormalized-forward convention.
inline Id fft2_op(Tape& t, Id input) {
    const Grid& x = t.value(input);
    require_rank(x, 2, "fft2");
    const std::int64_t h = x.shape[0], w = x.shape[1];
    SpectralGrid sg = fft2(x);
    Grid out = Grid::zeros({2, h, w});
    for (std::int64_t i = 0; i < h * w; ++i) {
        out[i] = sg.coef[static_cast<size_t>(i)].real();
        out[h * w + i] = sg.coef[static_cast<size_t>(i)].imag();
    }
    return t.record("fft2", std::move(out), {input}, [input, h, w](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(input)) return;
        SpectralGrid g;
        g.h = h;
        g.w = w;
        g.coef.resize(static_cast<size_t>(h * w));
        for (std::int64_t i = 0; i < h * w; ++i)
            g.coef[static_cast<size_t>(i)] = Cplx(up[i], up[h * w + i]);
        Grid back = ifft2(g);  // real part; imaginary content has no pullback to a real input
        Grid& gx = tp.grad_buffer(input);
        const double s = static_cast<double>(h * w);
        for (std::int64_t i = 0; i < h * w; ++i) gx[i] += s * back[i];
    });
}

/// Inverse transform as a tape op: [2,h,w] -> real [h,w].
inline Id ifft2_op(Tape& t, Id input) {
    const Grid& x = t.value(input);
    require_rank(x, 3, "ifft2");
    if (x.shape[0] != 2) throw std::invalid_argument("ifft2: expects [2,h,w] complex channels");
    const std::int64_t h = x.shape[1], w = x.shape[2];
    SpectralGrid sg;
    sg.h = h;
    sg.w = w;
    sg.coef.resize(static_cast<size_t>(h * w));
    for (std::int64_t i = 0; i < h * w; ++i) sg.coef[static_cast<size_t>(i)] = Cplx(x[i], x[h * w + i]);
    Grid out = ifft2(sg);
    return t.record("ifft2", std::move(out), {input}, [input, h, w](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(input)) return;
        SpectralGrid g = fft2(up);
        Grid& gx = tp.grad_buffer(input);
        const double s = 1.0 / static_cast<double>(h * w);
        for (std::int64_t i = 0; i < h * w; ++i) {
            gx[i] += s * g.coef[static_cast<size_t>(i)].real();
            gx[h * w + i] += s * g.coef[static_cast<size_t>(i)].imag();
        }
    });
}

/// ifft2(filter . fft2(x)) for a real, even filter given per (ky,kx) bin.
/// Such filters are self-adjoint, so the adjoint applies the same filter.
/// Recorded as a single custom-adjoint node.
inline Id spectral_filter(Tape& t, Id input, std::shared_ptr<const Grid> filter) {
    const Grid& x = t.value(input);
    require_rank(x, 2, "spectral_filter");
    require_shape(*filter, x.shape, "spectral_filter filter");
    auto apply = [filter](const Grid& f) {
        SpectralGrid sg = fft2(f);
        for (std::int64_t i = 0; i < f.numel(); ++i) sg.coef[static_cast<size_t>(i)] *= (*filter)[i];
        return ifft2(sg);
    };
    Grid out = apply(x);
    return t.record("spectral_filter", std::move(out), {input},
                    [input, apply](Tape& tp, Id, const Grid& up) {
                        if (!tp.wants_grad(input)) return;
                        Grid back = apply(up);
                        Grid& gx = tp.grad_buffer(input);
                        for (std::int64_t i = 0; i < back.numel(); ++i) gx[i] += back[i];
                    });
}

/// L = 0.5 * sum_k w_k |F(pred - target)_k|^2 with adjoint via the inverse
/// transform. pred is [h,w]; target and weights are fixed grids.
inline Id spectral_weighted_l2(Tape& t, Id pred, std::shared_ptr<const Grid> target,
                               std::shared_ptr<const Grid> weights) {
    const Grid& p = t.value(pred);
    require_rank(p, 2, "spectral_weighted_l2");
    require_shape(*target, p.shape, "spectral_weighted_l2 target");
    require_shape(*weights, p.shape, "spectral_weighted_l2 weights");
    Grid d = p - *target;
    SpectralGrid sg = fft2(d);
    double loss = 0;
    for (std::int64_t i = 0; i < d.numel(); ++i) loss += (*weights)[i] * std::norm(sg.coef[static_cast<size_t>(i)]);
    loss *= 0.5;
    return t.record("spectral_weighted_l2", Grid::scalar(loss), {pred},
                    [pred, target, weights](Tape& tp, Id, const Grid& up) {
                        if (!tp.wants_grad(pred)) return;
                        const Grid& p2 = tp.value(pred);
                        Grid d2 = p2 - *target;
                        SpectralGrid sg2 = fft2(d2);
                        for (std::int64_t i = 0; i < d2.numel(); ++i) sg2.coef[static_cast<size_t>(i)] *= (*weights)[i];
                        Grid back = ifft2(sg2);
                        const double s = up.data[0] * static_cast<double>(d2.numel());
                        Grid& gp = tp.grad_buffer(pred);
                        for (std::int64_t i = 0; i < back.numel(); ++i) gp[i] += s * back[i];
                    });
}

}  // namespace siplab::ops
