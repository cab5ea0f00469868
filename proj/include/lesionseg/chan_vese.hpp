#pragma once

// Two-phase Chan-Vese active contour on the grayscale image. The level set is
// evolved by normalized gradient descent on the regularized functional:
// curvature coefficients are frozen at the start of each sweep, the data
// terms use the region means of the regularized Heaviside of the current
// level set, and each sweep's step is scaled so the fastest pixel moves dt.
// Sweeps that would raise the functional are rolled back and retried with a
// smaller step, which keeps the recorded energy non-increasing outright.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lesionseg/canny.hpp"
#include "lesionseg/raster.hpp"
#include "lesionseg/segment.hpp"

namespace lesionseg {

struct ChanVeseConfig {
    int iterations = 1000;
    double mu = 0.25;  // contour length weight, on [0,1]-scaled intensities
    double dt = 0.5;
    double epsilon = 1.0;     // Heaviside/delta regularization width
    double stop_fraction = 1e-4;  // stop when < this fraction of pixels flips
};

struct ChanVeseResult {
    std::vector<double> levelset;  // row-major, > 0 inside
    std::vector<double> energies;  // functional value after each sweep
    int iterations = 0;
    double mean_inside = 0.0;
    double mean_outside = 0.0;
};

namespace detail {

inline double heaviside(double u, double eps) {
    return 0.5 * (1.0 + (2.0 / M_PI) * std::atan(u / eps));
}

inline double delta(double u, double eps) {
    return eps / (M_PI * (eps * eps + u * u));
}

}  // namespace detail

/// Evolves the level set on intensities scaled to [0,1]. The "Large"
/// initializer is +1 inside a centered rectangle covering 90% of each
/// dimension and -1 outside it.
///
/// Each sweep recomputes the region means, freezes the curvature
/// coefficients, and takes one normalized descent step on the regularized
/// functional. A sweep that would raise the functional is rolled back and
/// retried with a halved step, so the recorded energy sequence is
/// non-increasing by construction; the step relaxes back toward cfg.dt
/// after accepted sweeps. Evolution stops when a sweep flips fewer than
/// stop_fraction of the pixels across the interface and the energy has
/// plateaued, or when no step size makes progress any more.
inline ChanVeseResult evolve_chan_vese(const ChannelPlane& gray, const ChanVeseConfig& cfg = {}) {
    if (cfg.iterations < 1) throw std::invalid_argument("evolve_chan_vese: iterations must be >= 1");
    if (!(cfg.dt > 0.0) || !(cfg.mu >= 0.0))
        throw std::invalid_argument("evolve_chan_vese: bad mu/dt");
    const int w = gray.width(), h = gray.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const double eps = cfg.epsilon;

    std::vector<double> img(n);
    for (std::size_t i = 0; i < n; ++i) img[i] = gray.values()[i] / kMaxIntensity;

    ChanVeseResult res;
    res.levelset.assign(n, -1.0);
    const int x0 = static_cast<int>(std::lround(0.05 * w)), x1 = static_cast<int>(std::lround(0.95 * w));
    const int y0 = static_cast<int>(std::lround(0.05 * h)), y1 = static_cast<int>(std::lround(0.95 * h));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) res.levelset[static_cast<std::size_t>(y) * w + x] = 1.0;

    auto& u = res.levelset;
    auto idx = [&](int x, int y) {
        return static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1);
    };
    auto region_means = [&](double& c_in, double& c_out) {
        double num_in = 0, den_in = 0, num_out = 0, den_out = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double hs = detail::heaviside(u[i], eps);
            num_in += hs * img[i];
            den_in += hs;
            num_out += (1.0 - hs) * img[i];
            den_out += (1.0 - hs);
        }
        c_in = den_in > 0 ? num_in / den_in : 0.0;
        c_out = den_out > 0 ? num_out / den_out : 0.0;
    };
    auto energy = [&](double c_in, double c_out) {
        double e = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double hs = detail::heaviside(u[i], eps);
                const double hx = detail::heaviside(u[idx(x + 1, y)], eps) - hs;
                const double hy = detail::heaviside(u[idx(x, y + 1)], eps) - hs;
                e += cfg.mu * std::hypot(hx, hy);
                e += hs * (img[i] - c_in) * (img[i] - c_in);
                e += (1.0 - hs) * (img[i] - c_out) * (img[i] - c_out);
            }
        return e;
    };

    // Plumbing constants. The gradient guard keeps the frozen curvature
    // coefficients bounded: a bare |grad u| denominator blows up on the flat
    // regions of the +-1 initializer and the curvature term then swamps the
    // data term. The cap gives the flow a genuine fixed point instead of an
    // unbounded drift toward Heaviside saturation, and the plateau threshold
    // arms the interface-static stop test.
    constexpr double kGradGuard = 1.0;
    constexpr double kPhiCap = 3.0;
    constexpr double kPlateau = 1e-8;

    std::vector<double> A(n), B(n), vel(n), u_prev(n);
    const std::int64_t flip_limit =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.stop_fraction * static_cast<double>(n)));

    double dt_cur = cfg.dt;
    double c_in = 0, c_out = 0;
    for (int it = 0; it < cfg.iterations; ++it) {
        u_prev = u;
        region_means(c_in, c_out);

        // frozen smoothed-curvature coefficients for this sweep
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double ux_f = u_prev[idx(x + 1, y)] - u_prev[i];
                const double uy_f = u_prev[idx(x, y + 1)] - u_prev[i];
                const double ux_c = 0.5 * (u_prev[idx(x + 1, y)] - u_prev[idx(x - 1, y)]);
                const double uy_c = 0.5 * (u_prev[idx(x, y + 1)] - u_prev[idx(x, y - 1)]);
                A[i] = cfg.mu / std::sqrt(kGradGuard + ux_f * ux_f + uy_c * uy_c);
                B[i] = cfg.mu / std::sqrt(kGradGuard + ux_c * ux_c + uy_f * uy_f);
            }

        // descent velocity: delta-weighted curvature plus the competition of
        // the two data terms, normalized below so the fastest pixel moves
        // dt_cur per sweep no matter how weakly the region means separate
        double vmax = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double a_r = A[i];
                const double a_l = x > 0 ? A[i - 1] : A[i];
                const double b_d = B[i];
                const double b_u = y > 0 ? B[i - w] : B[i];
                const double nb = a_r * u_prev[idx(x + 1, y)] + a_l * u_prev[idx(x - 1, y)] +
                                  b_d * u_prev[idx(x, y + 1)] + b_u * u_prev[idx(x, y - 1)] -
                                  (a_r + a_l + b_d + b_u) * u_prev[i];
                const double diff_in = img[i] - c_in, diff_out = img[i] - c_out;
                vel[i] = detail::delta(u_prev[i], eps) *
                         (nb - diff_in * diff_in + diff_out * diff_out);
                vmax = std::max(vmax, std::abs(vel[i]));
            }
        if (vmax == 0.0) break;  // exactly stationary

        bool accepted = false;
        std::int64_t flips = 0;
        while (true) {
            const double scale = dt_cur / vmax;
            flips = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double next = std::clamp(u_prev[i] + scale * vel[i], -kPhiCap, kPhiCap);
                if ((next > 0.0) != (u_prev[i] > 0.0)) ++flips;
                u[i] = next;
            }
            region_means(c_in, c_out);
            const double e = energy(c_in, c_out);
            if (res.energies.empty() || e <= res.energies.back()) {
                res.energies.push_back(e);
                accepted = true;
                break;
            }
            dt_cur *= 0.5;  // overshot: retry the sweep with a smaller step
            if (dt_cur < cfg.dt * 1e-12) break;
        }
        if (!accepted) {
            u = u_prev;  // no step size descends: local minimum reached
            break;
        }
        res.iterations = it + 1;
        dt_cur = std::min(cfg.dt, dt_cur * 1.2);

        const std::size_t m = res.energies.size();
        const bool plateau =
            m >= 2 && res.energies[m - 2] - res.energies[m - 1] <=
                          kPlateau * std::max(1.0, std::abs(res.energies[m - 1]));
        if (flips < flip_limit && plateau) break;
    }

    // sharp region means of the final partition decide which phase is lesion
    double sum_in = 0, cnt_in = 0, sum_out = 0, cnt_out = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] > 0) {
            sum_in += img[i];
            ++cnt_in;
        } else {
            sum_out += img[i];
            ++cnt_out;
        }
    }
    res.mean_inside = cnt_in > 0 ? sum_in / cnt_in : 0.0;
    res.mean_outside = cnt_out > 0 ? sum_out / cnt_out : 0.0;
    return res;
}

/// Chan-Vese segmentation of the darker phase, postprocessed. Returns an empty
/// mask when the two phases have (numerically) equal means, e.g. on constant
/// images where the contrast carries no information.
inline BinaryMask segment_chan_vese(const RasterImage& img, const ChanVeseConfig& cfg = {},
                                    const PostprocessConfig& post = {}) {
    const ChanVeseResult res = evolve_chan_vese(luminance(img), cfg);
    const int w = img.width(), h = img.height();
    if (std::abs(res.mean_inside - res.mean_outside) <= 1e-9) return BinaryMask(w, h);
    const bool lesion_inside = res.mean_inside < res.mean_outside;
    BinaryMask mask(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool inside = res.levelset[static_cast<std::size_t>(y) * w + x] > 0;
            mask.set(x, y, inside == lesion_inside);
        }
    return postprocess_mask(mask, post);
}

}  // namespace lesionseg
