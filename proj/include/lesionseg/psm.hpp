#pragma once

// Parameter-selected segmentation. A single Otsu cut of the blue channel
// often stops at the dark core of a lesion; sharpening the channel with a
// high-boost kernel pushes faint peripheral structure across the threshold.
// The sweep below evaluates a grid of boost amounts c, tracks the mean M(c)
// of the *original* channel inside each resulting mask, and picks the boost
// where the mask mean best matches an independent 2-means estimate of the
// lesion intensity. Jumps in M(c) (mask suddenly swallowing a new structure)
// show up as spikes of the discrete second derivative, which is what the
// candidate selection keys on.
//
// The normalized variant runs the same sweep on the raw channel and on two
// rescaled copies (whole-image mean and background mean pulled to half range)
// and keeps the largest mask.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lesionseg/raster.hpp"
#include "lesionseg/segment.hpp"

namespace lesionseg {

struct PsmConfig {
    double c_max = 15.0;
    double delta_c = 0.2;
    double epsilon = 0.0;  // normalization headroom for the MAM branches

    void validate() const {
        if (!(c_max >= 0.0)) throw std::invalid_argument("PsmConfig: c_max must be >= 0");
        if (!(delta_c > 0.0)) throw std::invalid_argument("PsmConfig: delta_c must be > 0");
        if (!(epsilon >= 0.0)) throw std::invalid_argument("PsmConfig: epsilon must be >= 0");
    }
};

struct MeanCurve {
    std::vector<double> cs;
    std::vector<double> means;      // mean of the original plane inside masks[i]
    std::vector<BinaryMask> masks;  // postprocessed mask per grid point
    double delta_c = 0.0;
};

/// Runs the boost sweep over c = 0, delta_c, ..., c_max. Each grid point
/// filters the plane, quantizes, Otsu-segments the dark side and postprocesses
/// it; M(c) is the mean of the unfiltered plane inside that mask. A degenerate
/// Otsu at c = 0 propagates (the plane itself carries no split); at c > 0 it
/// records an empty mask and carries M over from the previous grid point.
inline MeanCurve sweep_mean_curve(const ChannelPlane& plane, const PsmConfig& cfg = {},
                                  const PostprocessConfig& post = {}) {
    cfg.validate();
    const int n = static_cast<int>(cfg.c_max / cfg.delta_c + 1e-9) + 1;

    MeanCurve curve;
    curve.delta_c = cfg.delta_c;
    curve.cs.reserve(n);
    curve.means.reserve(n);
    curve.masks.reserve(n);

    for (int i = 0; i < n; ++i) {
        const double c = i * cfg.delta_c;
        const ChannelPlane q = quantize(i == 0 ? plane : convolve3x3(plane, HighBoostKernel(c)));
        BinaryMask mask(plane.width(), plane.height());
        double mean = 0.0;
        try {
            const int t = otsu_threshold(build_histogram(q));
            mask = postprocess_mask(threshold_dark(q, t), post);
            double sum = 0.0;
            std::int64_t cnt = 0;
            for (int y = 0; y < plane.height(); ++y)
                for (int x = 0; x < plane.width(); ++x)
                    if (mask.at(x, y)) {
                        sum += plane.at(x, y);
                        ++cnt;
                    }
            mean = cnt > 0 ? sum / cnt : 0.0;
        } catch (const std::domain_error&) {
            if (i == 0) throw;       // flat input: nothing to segment at any c
            mean = curve.means.back();  // filtered plane collapsed; carry M
        }
        curve.cs.push_back(c);
        curve.means.push_back(mean);
        curve.masks.push_back(std::move(mask));
    }
    return curve;
}

/// Indices of the (up to) three interior grid points with the largest central
/// second difference of M, ties toward smaller c. Curves with fewer than three
/// interior points yield however many exist.
inline std::vector<std::size_t> select_candidates(const MeanCurve& curve) {
    const std::size_t n = curve.cs.size();
    if (n < 3) return {};
    const double d2 = curve.delta_c * curve.delta_c;
    std::vector<std::size_t> interior;
    interior.reserve(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) interior.push_back(i);
    auto curvature = [&](std::size_t i) {
        return (curve.means[i + 1] - 2.0 * curve.means[i] + curve.means[i - 1]) / d2;
    };
    std::sort(interior.begin(), interior.end(), [&](std::size_t a, std::size_t b) {
        const double ca = curvature(a), cb = curvature(b);
        if (ca != cb) return ca > cb;
        return curve.cs[a] < curve.cs[b];
    });
    interior.resize(std::min<std::size_t>(3, interior.size()));
    return interior;
}

struct PsmResult {
    double chosen_c = 0.0;
    BinaryMask mask;
    std::vector<double> candidates;       // candidate c values, ascending
    std::vector<double> candidate_means;  // M at each candidate
    double reference_mean = 0.0;          // darker-cluster 2-means mean
};

/// Full parameter selection on one plane: sweep, pick candidates {0, c1, c2,
/// c3}, and choose the one whose M lies closest to the 2-means darker-cluster
/// mean of the plane (ties toward smaller c).
inline PsmResult psm_segment(const ChannelPlane& plane, const PsmConfig& cfg = {},
                             const PostprocessConfig& post = {}) {
    MeanCurve curve = sweep_mean_curve(plane, cfg, post);
    const double reference = kmeans2_lesion_mean(plane);

    std::vector<std::size_t> idxs{0};
    for (std::size_t i : select_candidates(curve)) idxs.push_back(i);
    std::sort(idxs.begin(), idxs.end());

    std::size_t best = idxs.front();
    for (std::size_t i : idxs)
        if (std::abs(curve.means[i] - reference) < std::abs(curve.means[best] - reference))
            best = i;  // strict <, so ties keep the smaller c

    PsmResult res;
    res.chosen_c = curve.cs[best];
    res.mask = std::move(curve.masks[best]);
    res.reference_mean = reference;
    for (std::size_t i : idxs) {
        res.candidates.push_back(curve.cs[i]);
        res.candidate_means.push_back(curve.means[i]);
    }
    return res;
}

enum class MamBranch { psm = 0, psmw = 1, psmb = 2 };

inline const char* to_string(MamBranch b) {
    switch (b) {
        case MamBranch::psm: return "psm";
        case MamBranch::psmw: return "psmw";
        case MamBranch::psmb: return "psmb";
    }
    return "?";
}

struct MamResult {
    MamBranch winner = MamBranch::psm;
    BinaryMask mask;
    std::array<std::int64_t, 3> areas = {0, 0, 0};  // psm, psmw, psmb (0 if failed)
    std::array<bool, 3> branch_ok = {false, false, false};
    std::array<double, 3> branch_c = {0.0, 0.0, 0.0};
    double m_whole = 0.0;       // blue-channel mean over the frame
    double m_background = 0.0;  // blue-channel mean outside the raw mask
};

/// Area-maximizing combination: raw sweep plus sweeps on the channel rescaled
/// so the whole-frame mean (PSMW) or the background mean (PSMB) sits at half
/// range times (1+epsilon). Branches whose rescaled plane collapses are
/// skipped; the largest mask wins, ties in the order psm, psmw, psmb.
inline MamResult mam_segment(const RasterImage& img, const PsmConfig& cfg = {},
                             const PostprocessConfig& post = {}) {
    cfg.validate();
    const ChannelPlane b = extract_channel(img, Channel::B);
    const double half_range = static_cast<double>(1 << (kBitDepth - 1));

    MamResult res;
    PsmResult raw = psm_segment(b, cfg, post);  // degenerate channel propagates

    double sum_all = 0.0, sum_bg = 0.0;
    std::int64_t cnt_bg = 0;
    for (int y = 0; y < b.height(); ++y)
        for (int x = 0; x < b.width(); ++x) {
            sum_all += b.at(x, y);
            if (!raw.mask.at(x, y)) {
                sum_bg += b.at(x, y);
                ++cnt_bg;
            }
        }
    res.m_whole = sum_all / b.pixel_count();
    res.m_background = cnt_bg > 0 ? sum_bg / cnt_bg : 0.0;

    std::array<BinaryMask, 3> masks;
    masks[0] = std::move(raw.mask);
    res.areas[0] = masks[0].area();
    res.branch_ok[0] = true;
    res.branch_c[0] = raw.chosen_c;

    const double scale_target = half_range * (1.0 + cfg.epsilon);
    auto run_scaled = [&](double m, int slot) {
        if (!(m > 0.0)) return;
        try {
            PsmResult r = psm_segment(saturating_scale(b, scale_target / m), cfg, post);
            masks[slot] = std::move(r.mask);
            res.areas[slot] = masks[slot].area();
            res.branch_ok[slot] = true;
            res.branch_c[slot] = r.chosen_c;
        } catch (const std::domain_error&) {
            // rescaled plane collapsed to a single level; branch excluded
        }
    };
    run_scaled(res.m_whole, 1);
    if (cnt_bg > 0) run_scaled(res.m_background, 2);

    int winner = 0;
    for (int i = 1; i < 3; ++i)
        if (res.branch_ok[i] && res.areas[i] > res.areas[winner]) winner = i;
    res.winner = static_cast<MamBranch>(winner);
    res.mask = std::move(masks[winner]);
    return res;
}

}  // namespace lesionseg
