// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <map>
#include <vector>

#include "siplab/grid.hpp"

namespace siplab {

using Cplx = std::complex<double>;

/// Complex coefficients of a 2-D transform, indexed row-major by (ky, kx)
/// with integer frequencies; entries above n/2 represent negative
/// frequencies (n - k).
struct SpectralGrid {
    std::int64_t h = 0, w = 0;
    std::vector<Cplx> coef;

    Cplx& at(std::int64_t ky, std::int64_t kx) { return coef[static_cast<size_t>(ky * w + kx)]; }
    Cplx at(std::int64_t ky, std::int64_t kx) const { return coef[static_cast<size_t>(ky * w + kx)]; }

    /// Centered integer frequency for index along an axis of extent n.
    static std::int64_t centered_freq(std::int64_t idx, std::int64_t n) {
        return idx <= n / 2 ? idx : idx - n;
    }
};

namespace detail {

/// Mixed-radix Cooley-Tukey plan for one transform length. Prime factors are
/// handled with a direct O(p^2) combine, which keeps every length exact;
/// the experiment grids (60, 64, 80, 256) factor into 2/3/5.
class FftPlan {
  public:
    explicit FftPlan(int n) : n_(n) {
        if (n <= 0) throw std::invalid_argument("fft: length must be positive");
        int m = n;
        for (int p = 2; p * p <= m;) {
            if (m % p == 0) {
                radices_.push_back(p);
                m /= p;
            } else {
                ++p;
            }
        }
        if (m > 1) radices_.push_back(m);
        tw_fwd_.resize(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            double a = -2.0 * M_PI * k / n;
            tw_fwd_[static_cast<size_t>(k)] = Cplx(std::cos(a), std::sin(a));
        }
        work_.resize(static_cast<size_t>(n) * (radices_.size() + 1));
    }

    /// In-place transform; sign = -1 forward (unnormalized), +1 inverse
    /// (caller scales by 1/n).
    void transform(Cplx* buf, int sign) const {
        rec(buf, n_, 0, sign, 0);
    }

  private:
    void rec(Cplx* buf, int n, size_t level, int sign, size_t work_off) const {
        if (n == 1) return;
        int r = radices_[level];
        int m = n / r;
        Cplx* scratch = work_.data() + work_off;
        // decimation in time: split into r interleaved sequences
        for (int j = 0; j < r; ++j)
            for (int s = 0; s < m; ++s) scratch[j * m + s] = buf[j + r * s];
        for (int j = 0; j < r; ++j) rec(scratch + j * m, m, level + 1, sign, work_off + static_cast<size_t>(n));
        // combine: X[k] = sum_j w^(jk) Y_j[k mod m], w = e^(sign*2pi*i/n)
        const std::int64_t stride = n_ / n;
        for (int k = 0; k < n; ++k) {
            Cplx acc(0, 0);
            for (int j = 0; j < r; ++j) {
                std::int64_t t = (static_cast<std::int64_t>(j) * k) % n * stride;
                Cplx w = tw_fwd_[static_cast<size_t>(t)];
                if (sign > 0) w = std::conj(w);
                acc += w * scratch[j * m + k % m];
            }
            buf[k] = acc;
        }
    }

    int n_;
    std::vector<int> radices_;
    std::vector<Cplx> tw_fwd_;
    mutable std::vector<Cplx> work_;
};

inline const FftPlan& plan_for(int n) {
    static std::map<int, FftPlan> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, FftPlan(n)).first;
    return it->second;
}

}  // namespace detail

inline void fft_1d(std::vector<Cplx>& v, int sign) {
    detail::plan_for(static_cast<int>(v.size())).transform(v.data(), sign);
    if (sign > 0) {
        double inv = 1.0 / static_cast<double>(v.size());
        for (auto& c : v) c *= inv;
    }
}

/// Forward 2-D transform of a real [h,w] grid. Convention: unnormalized
/// forward sum, 1/(h*w) on the inverse; Parseval then reads
/// sum|x|^2 == sum|X|^2 / (h*w).
inline SpectralGrid fft2(const Grid& g) {
    require_rank(g, 2, "fft2");
    const std::int64_t h = g.shape[0], w = g.shape[1];
    SpectralGrid out;
    out.h = h;
    out.w = w;
    out.coef.assign(static_cast<size_t>(h * w), Cplx(0, 0));
    for (std::int64_t i = 0; i < h * w; ++i) out.coef[static_cast<size_t>(i)] = Cplx(g[i], 0.0);
    const auto& prow = detail::plan_for(static_cast<int>(w));
    for (std::int64_t y = 0; y < h; ++y) prow.transform(out.coef.data() + y * w, -1);
    const auto& pcol = detail::plan_for(static_cast<int>(h));
    std::vector<Cplx> col(static_cast<size_t>(h));
    for (std::int64_t x = 0; x < w; ++x) {
        for (std::int64_t y = 0; y < h; ++y) col[static_cast<size_t>(y)] = out.coef[static_cast<size_t>(y * w + x)];
        pcol.transform(col.data(), -1);
        for (std::int64_t y = 0; y < h; ++y) out.coef[static_cast<size_t>(y * w + x)] = col[static_cast<size_t>(y)];
    }
    return out;
}

/// Inverse of fft2; returns the real part (imaginary residue of physically
/// real spectra is rounding noise).
inline Grid ifft2(const SpectralGrid& sg) {
    const std::int64_t h = sg.h, w = sg.w;
    std::vector<Cplx> buf = sg.coef;
    const auto& prow = detail::plan_for(static_cast<int>(w));
    for (std::int64_t y = 0; y < h; ++y) prow.transform(buf.data() + y * w, +1);
    const auto& pcol = detail::plan_for(static_cast<int>(h));
    std::vector<Cplx> col(static_cast<size_t>(h));
    for (std::int64_t x = 0; x < w; ++x) {
        for (std::int64_t y = 0; y < h; ++y) col[static_cast<size_t>(y)] = buf[static_cast<size_t>(y * w + x)];
        pcol.transform(col.data(), +1);
        for (std::int64_t y = 0; y < h; ++y) buf[static_cast<size_t>(y * w + x)] = col[static_cast<size_t>(y)];
    }
    Grid out = Grid::zeros({h, w});
    double inv = 1.0 / static_cast<double>(h * w);
    for (std::int64_t i = 0; i < h * w; ++i) out[i] = buf[static_cast<size_t>(i)].real() * inv;
    return out;
}

/// Complex-valued inverse without dropping the imaginary part.
inline std::vector<Cplx> ifft2_complex(const SpectralGrid& sg) {
    const std::int64_t h = sg.h, w = sg.w;
    std::vector<Cplx> buf = sg.coef;
    const auto& prow = detail::plan_for(static_cast<int>(w));
    for (std::int64_t y = 0; y < h; ++y) prow.transform(buf.data() + y * w, +1);
    const auto& pcol = detail::plan_for(static_cast<int>(h));
    std::vector<Cplx> col(static_cast<size_t>(h));
    for (std::int64_t x = 0; x < w; ++x) {
        for (std::int64_t y = 0; y < h; ++y) col[static_cast<size_t>(y)] = buf[static_cast<size_t>(y * w + x)];
        pcol.transform(col.data(), +1);
        for (std::int64_t y = 0; y < h; ++y) buf[static_cast<size_t>(y * w + x)] = col[static_cast<size_t>(y)];
    }
    double inv = 1.0 / static_cast<double>(h * w);
    for (auto& c : buf) c *= inv;
    return buf;
}

}  // namespace siplab
