// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <memory>

#include "siplab/ops.hpp"

namespace siplab::ops {

// ------------------------------------------------------------------- conv2d

/// Cross-correlation with same-size zero padding (odd kernel).
/// input [b,ci,h,w], kernel [co,ci,kh,kw], bias [co] -> [b,co,h,w]
inline Id conv2d(Tape& t, Id input, Id kernel, Id bias) {
    const Grid& x = t.value(input);
    const Grid& k = t.value(kernel);
    const Grid& bi = t.value(bias);
    require_rank(x, 4, "conv2d input");
    require_rank(k, 4, "conv2d kernel");
    if (x.shape[1] != k.shape[1])
        throw std::invalid_argument("conv2d: input channel axis (1) = " + std::to_string(x.shape[1]) +
                                    " does not match kernel in-channel axis (1) = " + std::to_string(k.shape[1]));
    if (bi.numel() != k.shape[0])
        throw std::invalid_argument("conv2d: bias axis (0) = " + std::to_string(bi.numel()) +
                                    " does not match kernel out-channel axis (0) = " + std::to_string(k.shape[0]));
    if (k.shape[2] % 2 == 0 || k.shape[3] % 2 == 0)
        throw std::invalid_argument("conv2d: kernel spatial axes must be odd for same padding");
    const std::int64_t B = x.shape[0], CI = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::int64_t CO = k.shape[0], KH = k.shape[2], KW = k.shape[3];
    const std::int64_t PH = KH / 2, PW = KW / 2;

    Grid out = Grid::zeros({B, CO, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t co = 0; co < CO; ++co) {
            double* oc = out.data.data() + ((b * CO + co) * H) * W;
            double bv = bi[co];
            for (std::int64_t i = 0; i < H * W; ++i) oc[i] = bv;
            for (std::int64_t ci = 0; ci < CI; ++ci) {
                const double* xc = x.data.data() + ((b * CI + ci) * H) * W;
                for (std::int64_t ky = 0; ky < KH; ++ky)
                    for (std::int64_t kx = 0; kx < KW; ++kx) {
                        double wv = k[((co * CI + ci) * KH + ky) * KW + kx];
                        const std::int64_t dy = ky - PH, dx = kx - PW;
                        const std::int64_t y0 = std::max<std::int64_t>(0, -dy), y1 = std::min(H, H - dy);
                        const std::int64_t x0 = std::max<std::int64_t>(0, -dx), x1 = std::min(W, W - dx);
                        for (std::int64_t y = y0; y < y1; ++y) {
                            double* orow = oc + y * W;
                            const double* xrow = xc + (y + dy) * W + dx;
                            for (std::int64_t xx = x0; xx < x1; ++xx) orow[xx] += wv * xrow[xx];
                        }
                    }
            }
        }

    auto vjp = [input, kernel, bias, B, CI, CO, H, W, KH, KW, PH, PW](Tape& tp, Id, const Grid& up) {
        const Grid& x2 = tp.value(input);
        const Grid& k2 = tp.value(kernel);
        if (tp.wants_grad(input)) {
            Grid& gx = tp.grad_buffer(input);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < CO; ++co) {
                    const double* uc = up.data.data() + ((b * CO + co) * H) * W;
                    for (std::int64_t ci = 0; ci < CI; ++ci) {
                        double* gc = gx.data.data() + ((b * CI + ci) * H) * W;
                        for (std::int64_t ky = 0; ky < KH; ++ky)
                            for (std::int64_t kx = 0; kx < KW; ++kx) {
                                double wv = k2[((co * CI + ci) * KH + ky) * KW + kx];
                                const std::int64_t dy = ky - PH, dx = kx - PW;
                                const std::int64_t y0 = std::max<std::int64_t>(0, -dy), y1 = std::min(H, H - dy);
                                const std::int64_t x0 = std::max<std::int64_t>(0, -dx), x1 = std::min(W, W - dx);
                                for (std::int64_t y = y0; y < y1; ++y) {
                                    const double* urow = uc + y * W;
                                    double* grow = gc + (y + dy) * W + dx;
                                    for (std::int64_t xx = x0; xx < x1; ++xx) grow[xx] += wv * urow[xx];
                                }
                            }
                    }
                }
        }
        if (tp.wants_grad(kernel)) {
            Grid& gk = tp.grad_buffer(kernel);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < CO; ++co) {
                    const double* uc = up.data.data() + ((b * CO + co) * H) * W;
                    for (std::int64_t ci = 0; ci < CI; ++ci) {
                        const double* xc = x2.data.data() + ((b * CI + ci) * H) * W;
                        for (std::int64_t ky = 0; ky < KH; ++ky)
                            for (std::int64_t kx = 0; kx < KW; ++kx) {
                                const std::int64_t dy = ky - PH, dx = kx - PW;
                                const std::int64_t y0 = std::max<std::int64_t>(0, -dy), y1 = std::min(H, H - dy);
                                const std::int64_t x0 = std::max<std::int64_t>(0, -dx), x1 = std::min(W, W - dx);
                                double acc = 0;
                                for (std::int64_t y = y0; y < y1; ++y) {
                                    const double* urow = uc + y * W;
                                    const double* xrow = xc + (y + dy) * W + dx;
                                    for (std::int64_t xx = x0; xx < x1; ++xx) acc += urow[xx] * xrow[xx];
                                }
                                gk[((co * CI + ci) * KH + ky) * KW + kx] += acc;
                            }
                    }
                }
        }
        if (tp.wants_grad(bias)) {
            Grid& gb = tp.grad_buffer(bias);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < CO; ++co) {
                    const double* uc = up.data.data() + ((b * CO + co) * H) * W;
                    double acc = 0;
                    for (std::int64_t i = 0; i < H * W; ++i) acc += uc[i];
                    gb[co] += acc;
                }
        }
    };
    return t.record("conv2d", std::move(out), {input, kernel, bias}, vjp);
}

// ------------------------------------------------------------------- conv1d

/// input [b,ci,l], kernel [co,ci,k], bias [co] -> [b,co,l]; same zero padding.
inline Id conv1d(Tape& t, Id input, Id kernel, Id bias) {
    const Grid& x = t.value(input);
    const Grid& k = t.value(kernel);
    const Grid& bi = t.value(bias);
    require_rank(x, 3, "conv1d input");
    require_rank(k, 3, "conv1d kernel");
    if (x.shape[1] != k.shape[1])
        throw std::invalid_argument("conv1d: input channel axis (1) does not match kernel in-channels");
    if (bi.numel() != k.shape[0]) throw std::invalid_argument("conv1d: bias does not match out-channels");
    if (k.shape[2] % 2 == 0) throw std::invalid_argument("conv1d: kernel length must be odd");
    const std::int64_t B = x.shape[0], CI = x.shape[1], L = x.shape[2];
    const std::int64_t CO = k.shape[0], K = k.shape[2], P = K / 2;

    Grid out = Grid::zeros({B, CO, L});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t co = 0; co < CO; ++co) {
            double* oc = out.data.data() + (b * CO + co) * L;
            for (std::int64_t i = 0; i < L; ++i) oc[i] = bi[co];
            for (std::int64_t ci = 0; ci < CI; ++ci) {
                const double* xc = x.data.data() + (b * CI + ci) * L;
                for (std::int64_t kk = 0; kk < K; ++kk) {
                    double wv = k[(co * CI + ci) * K + kk];
                    const std::int64_t d = kk - P;
                    const std::int64_t i0 = std::max<std::int64_t>(0, -d), i1 = std::min(L, L - d);
                    for (std::int64_t i = i0; i < i1; ++i) oc[i] += wv * xc[i + d];
                }
            }
        }

    auto vjp = [input, kernel, bias, B, CI, CO, L, K, P](Tape& tp, Id, const Grid& up) {
        const Grid& x2 = tp.value(input);
        const Grid& k2 = tp.value(kernel);
        if (tp.wants_grad(input)) {
            Grid& gx = tp.grad_buffer(input);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < CO; ++co) {
                    const double* uc = up.data.data() + (b * CO + co) * L;
                    for (std::int64_t ci = 0; ci < CI; ++ci) {
                        double* gc = gx.data.data() + (b * CI + ci) * L;
                        for (std::int64_t kk = 0; kk < K; ++kk) {
                            double wv = k2[(co * CI + ci) * K + kk];
                            const std::int64_t d = kk - P;
                            const std::int64_t i0 = std::max<std::int64_t>(0, -d), i1 = std::min(L, L - d);
                            for (std::int64_t i = i0; i < i1; ++i) gc[i + d] += wv * uc[i];
                        }
                    }
                }
        }
        if (tp.wants_grad(kernel)) {
            Grid& gk = tp.grad_buffer(kernel);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < CO; ++co) {
                    const double* uc = up.data.data() + (b * CO + co) * L;
                    for (std::int64_t ci = 0; ci < CI; ++ci) {
                        const double* xc = x2.data.data() + (b * CI + ci) * L;
                        for (std::int64_t kk = 0; kk < K; ++kk) {
                            const std::int64_t d = kk - P;
                            const std::int64_t i0 = std::max<std::int64_t>(0, -d), i1 = std::min(L, L - d);
                            double acc = 0;
                            for (std::int64_t i = i0; i < i1; ++i) acc += uc[i] * xc[i + d];
                            gk[(co * CI + ci) * K + kk] += acc;
                        }
                    }
                }
        }
        if (tp.wants_grad(bias)) {
            Grid& gb = tp.grad_buffer(bias);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < CO; ++co) {
                    const double* uc = up.data.data() + (b * CO + co) * L;
                    double acc = 0;
                    for (std::int64_t i = 0; i < L; ++i) acc += uc[i];
                    gb[co] += acc;
                }
        }
    };
    return t.record("conv1d", std::move(out), {input, kernel, bias}, vjp);
}

// ------------------------------------------------------------------ pooling

/// 2x2 non-overlapping max; gradient is routed to the argmax, first in
/// scan order on ties.
inline Id maxpool2(Tape& t, Id input) {
    const Grid& x = t.value(input);
    require_rank(x, 4, "maxpool2 input");
    const std::int64_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    if (H % 2 || W % 2)
        throw std::invalid_argument("maxpool2: spatial extents must be even, got " + shape_str(x.shape));
    const std::int64_t OH = H / 2, OW = W / 2;
    Grid out = Grid::zeros({B, C, OH, OW});
    auto arg = std::make_shared<std::vector<std::int64_t>>(static_cast<size_t>(out.numel()));
    std::int64_t o = 0;
    for (std::int64_t bc = 0; bc < B * C; ++bc) {
        const double* xc = x.data.data() + bc * H * W;
        for (std::int64_t y = 0; y < OH; ++y)
            for (std::int64_t xx = 0; xx < OW; ++xx, ++o) {
                std::int64_t base = (2 * y) * W + 2 * xx;
                std::int64_t best = base;
                double bv = xc[base];
                for (std::int64_t dy = 0; dy < 2; ++dy)
                    for (std::int64_t dx = 0; dx < 2; ++dx) {
                        std::int64_t idx = base + dy * W + dx;
                        if (xc[idx] > bv) {
                            bv = xc[idx];
                            best = idx;
                        }
                    }
                out[o] = bv;
                (*arg)[static_cast<size_t>(o)] = bc * H * W + best;
            }
    }
    return t.record("maxpool2", std::move(out), {input}, [input, arg](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(input)) return;
        Grid& gx = tp.grad_buffer(input);
        for (std::int64_t i = 0; i < up.numel(); ++i) gx[(*arg)[static_cast<size_t>(i)]] += up[i];
    });
}

/// Pool of width 2 along the last axis of [b,c,l].
inline Id maxpool1d(Tape& t, Id input) {
    const Grid& x = t.value(input);
    require_rank(x, 3, "maxpool1d input");
    const std::int64_t B = x.shape[0], C = x.shape[1], L = x.shape[2];
    if (L % 2) throw std::invalid_argument("maxpool1d: length must be even, got " + std::to_string(L));
    const std::int64_t OL = L / 2;
    Grid out = Grid::zeros({B, C, OL});
    auto arg = std::make_shared<std::vector<std::int64_t>>(static_cast<size_t>(out.numel()));
    std::int64_t o = 0;
    for (std::int64_t bc = 0; bc < B * C; ++bc) {
        const double* xc = x.data.data() + bc * L;
        for (std::int64_t i = 0; i < OL; ++i, ++o) {
            std::int64_t best = 2 * i;
            if (xc[2 * i + 1] > xc[2 * i]) best = 2 * i + 1;
            out[o] = xc[best];
            (*arg)[static_cast<size_t>(o)] = bc * L + best;
        }
    }
    return t.record("maxpool1d", std::move(out), {input}, [input, arg](Tape& tp, Id, const Grid& up) {
        if (!tp.wants_grad(input)) return;
        Grid& gx = tp.grad_buffer(input);
        for (std::int64_t i = 0; i < up.numel(); ++i) gx[(*arg)[static_cast<size_t>(i)]] += up[i];
    });
}

// --------------------------------------------------------------- upsampling

namespace detail {
struct LerpAxis {
    std::int64_t i0, i1;
    double w1;  // weight of i1; i0 gets 1-w1
};
inline LerpAxis bilerp_axis(std::int64_t o, std::int64_t in_n) {
    // align_corners=false mapping with border clamp
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    double f = std::floor(src);
    auto i0 = static_cast<std::int64_t>(f);
    double w1 = src - f;
    std::int64_t i1 = i0 + 1;
    if (i0 < 0) { i0 = 0; }
    if (i1 > in_n - 1) { i1 = in_n - 1; }
    return {i0, i1, w1};
}
}  // namespace detail

/// x2 bilinear upsampling, align_corners=false. [b,c,h,w] -> [b,c,2h,2w]
inline Id upsample_bilinear2(Tape& t, Id input) {
    const Grid& x = t.value(input);
    require_rank(x, 4, "upsample_bilinear2 input");
    const std::int64_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::int64_t OH = 2 * H, OW = 2 * W;
    Grid out = Grid::zeros({B, C, OH, OW});
    for (std::int64_t bc = 0; bc < B * C; ++bc) {
        const double* xc = x.data.data() + bc * H * W;
        double* oc = out.data.data() + bc * OH * OW;
        for (std::int64_t oy = 0; oy < OH; ++oy) {
            auto ay = detail::bilerp_axis(oy, H);
            for (std::int64_t ox = 0; ox < OW; ++ox) {
                auto ax = detail::bilerp_axis(ox, W);
                oc[oy * OW + ox] = (1 - ay.w1) * (1 - ax.w1) * xc[ay.i0 * W + ax.i0] +
                                   (1 - ay.w1) * ax.w1 * xc[ay.i0 * W + ax.i1] +
                                   ay.w1 * (1 - ax.w1) * xc[ay.i1 * W + ax.i0] +
                                   ay.w1 * ax.w1 * xc[ay.i1 * W + ax.i1];
            }
        }
    }
    return t.record("upsample_bilinear2", std::move(out), {input},
                    [input, B, C, H, W, OH, OW](Tape& tp, Id, const Grid& up) {
                        if (!tp.wants_grad(input)) return;
                        Grid& gx = tp.grad_buffer(input);
                        for (std::int64_t bc = 0; bc < B * C; ++bc) {
                            double* gc = gx.data.data() + bc * H * W;
                            const double* uc = up.data.data() + bc * OH * OW;
                            for (std::int64_t oy = 0; oy < OH; ++oy) {
                                auto ay = detail::bilerp_axis(oy, H);
                                for (std::int64_t ox = 0; ox < OW; ++ox) {
                                    auto ax = detail::bilerp_axis(ox, W);
                                    double u = uc[oy * OW + ox];
                                    gc[ay.i0 * W + ax.i0] += (1 - ay.w1) * (1 - ax.w1) * u;
                                    gc[ay.i0 * W + ax.i1] += (1 - ay.w1) * ax.w1 * u;
                                    gc[ay.i1 * W + ax.i0] += ay.w1 * (1 - ax.w1) * u;
                                    gc[ay.i1 * W + ax.i1] += ay.w1 * ax.w1 * u;
                                }
                            }
                        }
                    });
}

// --------------------------------------------------------------- batch norm

/// Training-mode batch norm over (b,h,w) per channel. Biased variance.
/// batch_mean/batch_var are side outputs for the running-stat update.
inline Id batchnorm2d_train(Tape& t, Id input, Id gamma, Id beta, double eps,
                            Grid* batch_mean_out, Grid* batch_var_out) {
    const Grid& x = t.value(input);
    require_rank(x, 4, "batchnorm2d input");
    const std::int64_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    if (t.value(gamma).numel() != C || t.value(beta).numel() != C)
        throw std::invalid_argument("batchnorm2d: scale/shift length does not match channel axis (1)");
    const std::int64_t M = B * H * W;
    Grid mu = Grid::zeros({C}), var = Grid::zeros({C});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xc = x.data.data() + ((b * C + c) * H) * W;
            double acc = 0;
            for (std::int64_t i = 0; i < H * W; ++i) acc += xc[i];
            mu[c] += acc;
        }
    for (std::int64_t c = 0; c < C; ++c) mu[c] /= static_cast<double>(M);
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xc = x.data.data() + ((b * C + c) * H) * W;
            double acc = 0;
            for (std::int64_t i = 0; i < H * W; ++i) {
                double d = xc[i] - mu[c];
                acc += d * d;
            }
            var[c] += acc;
        }
    for (std::int64_t c = 0; c < C; ++c) var[c] /= static_cast<double>(M);
    if (batch_mean_out) *batch_mean_out = mu;
    if (batch_var_out) *batch_var_out = var;

    auto invstd = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) (*invstd)[static_cast<size_t>(c)] = 1.0 / std::sqrt(var[c] + eps);
    auto xhat = std::make_shared<Grid>(Grid::zeros(x.shape));
    const Grid& g = t.value(gamma);
    const Grid& be = t.value(beta);
    Grid out = Grid::zeros(x.shape);
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xc = x.data.data() + ((b * C + c) * H) * W;
            double* hc = xhat->data.data() + ((b * C + c) * H) * W;
            double* oc = out.data.data() + ((b * C + c) * H) * W;
            double is = (*invstd)[static_cast<size_t>(c)], m = mu[c], gv = g[c], bv = be[c];
            for (std::int64_t i = 0; i < H * W; ++i) {
                hc[i] = (xc[i] - m) * is;
                oc[i] = gv * hc[i] + bv;
            }
        }

    auto vjp = [input, gamma, beta, xhat, invstd, B, C, H, W, M](Tape& tp, Id, const Grid& up) {
        const Grid& g2 = tp.value(gamma);
        // per-channel sums of upstream and upstream*xhat
        std::vector<double> su(static_cast<size_t>(C), 0.0), sux(static_cast<size_t>(C), 0.0);
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t c = 0; c < C; ++c) {
                const double* uc = up.data.data() + ((b * C + c) * H) * W;
                const double* hc = xhat->data.data() + ((b * C + c) * H) * W;
                double a = 0, ax = 0;
                for (std::int64_t i = 0; i < H * W; ++i) {
                    a += uc[i];
                    ax += uc[i] * hc[i];
                }
                su[static_cast<size_t>(c)] += a;
                sux[static_cast<size_t>(c)] += ax;
            }
        if (tp.wants_grad(beta)) {
            Grid& gb = tp.grad_buffer(beta);
            for (std::int64_t c = 0; c < C; ++c) gb[c] += su[static_cast<size_t>(c)];
        }
        if (tp.wants_grad(gamma)) {
            Grid& gg = tp.grad_buffer(gamma);
            for (std::int64_t c = 0; c < C; ++c) gg[c] += sux[static_cast<size_t>(c)];
        }
        if (tp.wants_grad(input)) {
            Grid& gx = tp.grad_buffer(input);
            double invM = 1.0 / static_cast<double>(M);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t c = 0; c < C; ++c) {
                    const double* uc = up.data.data() + ((b * C + c) * H) * W;
                    const double* hc = xhat->data.data() + ((b * C + c) * H) * W;
                    double* gc = gx.data.data() + ((b * C + c) * H) * W;
                    double is = (*invstd)[static_cast<size_t>(c)] * g2[c];
                    double mu_u = su[static_cast<size_t>(c)] * invM;
                    double mu_ux = sux[static_cast<size_t>(c)] * invM;
                    for (std::int64_t i = 0; i < H * W; ++i)
                        gc[i] += is * (uc[i] - mu_u - hc[i] * mu_ux);
                }
        }
    };
    return t.record("batchnorm2d", std::move(out), {input, gamma, beta}, vjp);
}

/// Eval-mode batch norm: a per-channel affine map using running statistics.
inline Id batchnorm2d_eval(Tape& t, Id input, Id gamma, Id beta, const Grid& rmean, const Grid& rvar, double eps) {
    const Grid& x = t.value(input);
    require_rank(x, 4, "batchnorm2d input");
    const std::int64_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    auto invstd = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) (*invstd)[static_cast<size_t>(c)] = 1.0 / std::sqrt(rvar[c] + eps);
    auto rm = std::make_shared<Grid>(rmean);
    const Grid& g = t.value(gamma);
    const Grid& be = t.value(beta);
    Grid out = Grid::zeros(x.shape);
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xc = x.data.data() + ((b * C + c) * H) * W;
            double* oc = out.data.data() + ((b * C + c) * H) * W;
            double is = (*invstd)[static_cast<size_t>(c)], m = (*rm)[c], gv = g[c], bv = be[c];
            for (std::int64_t i = 0; i < H * W; ++i) oc[i] = gv * (xc[i] - m) * is + bv;
        }
    auto vjp = [input, gamma, beta, invstd, rm, B, C, H, W](Tape& tp, Id, const Grid& up) {
        const Grid& x2 = tp.value(input);
        const Grid& g2 = tp.value(gamma);
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t c = 0; c < C; ++c) {
                const double* uc = up.data.data() + ((b * C + c) * H) * W;
                double is = (*invstd)[static_cast<size_t>(c)];
                if (tp.wants_grad(input)) {
                    double* gc = tp.grad_buffer(input).data.data() + ((b * C + c) * H) * W;
                    double k = g2[c] * is;
                    for (std::int64_t i = 0; i < H * W; ++i) gc[i] += k * uc[i];
                }
                if (tp.wants_grad(gamma)) {
                    const double* xc = x2.data.data() + ((b * C + c) * H) * W;
                    double acc = 0;
                    for (std::int64_t i = 0; i < H * W; ++i) acc += uc[i] * (xc[i] - (*rm)[c]) * is;
                    tp.grad_buffer(gamma)[c] += acc;
                }
                if (tp.wants_grad(beta)) {
                    double acc = 0;
                    for (std::int64_t i = 0; i < H * W; ++i) acc += uc[i];
                    tp.grad_buffer(beta)[c] += acc;
                }
            }
    };
    return t.record("batchnorm2d_eval", std::move(out), {input, gamma, beta}, vjp);
}

// ------------------------------------------------------------ concatenation

/// Concatenate along the channel axis of [b,c,h,w].
inline Id concat_channels(Tape& t, Id a, Id b) {
    const Grid& va = t.value(a);
    const Grid& vb = t.value(b);
    require_rank(va, 4, "concat_channels");
    require_rank(vb, 4, "concat_channels");
    if (va.shape[0] != vb.shape[0] || va.shape[2] != vb.shape[2] || va.shape[3] != vb.shape[3])
        throw std::invalid_argument("concat_channels: non-channel axes differ: " + shape_str(va.shape) +
                                    " vs " + shape_str(vb.shape));
    const std::int64_t B = va.shape[0], CA = va.shape[1], CB = vb.shape[1];
    const std::int64_t HW = va.shape[2] * va.shape[3];
    Grid out = Grid::zeros({B, CA + CB, va.shape[2], va.shape[3]});
    for (std::int64_t n = 0; n < B; ++n) {
        std::copy_n(va.data.data() + n * CA * HW, CA * HW, out.data.data() + n * (CA + CB) * HW);
        std::copy_n(vb.data.data() + n * CB * HW, CB * HW, out.data.data() + (n * (CA + CB) + CA) * HW);
    }
    return t.record("concat_channels", std::move(out), {a, b},
                    [a, b, B, CA, CB, HW](Tape& tp, Id, const Grid& up) {
                        if (tp.wants_grad(a)) {
                            Grid& ga = tp.grad_buffer(a);
                            for (std::int64_t n = 0; n < B; ++n)
                                for (std::int64_t i = 0; i < CA * HW; ++i)
                                    ga[n * CA * HW + i] += up[n * (CA + CB) * HW + i];
                        }
                        if (tp.wants_grad(b)) {
                            Grid& gb = tp.grad_buffer(b);
                            for (std::int64_t n = 0; n < B; ++n)
                                for (std::int64_t i = 0; i < CB * HW; ++i)
                                    gb[n * CB * HW + i] += up[(n * (CA + CB) + CA) * HW + i];
                        }
                    });
}

}  // namespace siplab::ops
