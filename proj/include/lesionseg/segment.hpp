#pragma once

// Histogram thresholding and mask cleanup. Lesions are dark on dermoscopy
// blue-channel images, so every thresholding segmenter here keeps the side of
// the split at or below the threshold.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lesionseg/morphology.hpp"
#include "lesionseg/raster.hpp"

namespace lesionseg {

struct Histogram256 {
    std::int64_t counts[256] = {};
    std::int64_t total = 0;
};

/// Histogram of a quantized plane. Values are rounded/clamped defensively so
/// callers that pass raw filter output still land in the 256 bins.
inline Histogram256 build_histogram(const ChannelPlane& plane) {
    Histogram256 hist;
    for (double v : plane.values()) {
        ++hist.counts[static_cast<int>(quantize_value(v))];
        ++hist.total;
    }
    return hist;
}

/// Otsu's threshold: maximizes the between-class variance over all 256 splits
/// {<= t, > t}. The score comparison runs in exact integer arithmetic
/// (sigma^2 proportional to (S0*w1 - S1*w0)^2 / (w0*w1)), so plateaus compare
/// exactly equal and ties resolve to the smallest t. Throws std::domain_error
/// when fewer than two bins are occupied (no threshold exists).
inline int otsu_threshold(const Histogram256& hist) {
    int occupied = 0;
    for (int i = 0; i < 256; ++i)
        if (hist.counts[i] > 0) ++occupied;
    if (occupied < 2) throw std::domain_error("otsu_threshold: no threshold exists");

    std::int64_t total_sum = 0;
    for (int i = 0; i < 256; ++i) total_sum += hist.counts[i] * i;

    int best_t = -1;
    __int128 best_num = -1;  // (S0*w1 - S1*w0)^2
    std::int64_t best_den = 1;  // w0*w1
    std::int64_t w0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist.counts[t];
        s0 += hist.counts[t] * t;
        const std::int64_t w1 = hist.total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const std::int64_t s1 = total_sum - s0;
        const __int128 diff = static_cast<__int128>(s0) * w1 - static_cast<__int128>(s1) * w0;
        const __int128 num = diff * diff;
        const std::int64_t den = w0 * w1;
        // compare num/den > best_num/best_den exactly
        if (best_t < 0 || num * best_den > best_num * den) {
            best_t = t;
            best_num = num;
            best_den = den;
        }
    }
    return best_t;
}

/// Mask of pixels whose quantized value is <= t (the dark side).
inline BinaryMask threshold_dark(const ChannelPlane& plane, int t) {
    BinaryMask mask(plane.width(), plane.height());
    for (int y = 0; y < plane.height(); ++y)
        for (int x = 0; x < plane.width(); ++x)
            mask.set(x, y, quantize_value(plane.at(x, y)) <= t);
    return mask;
}

struct PostprocessConfig {
    int closing_radius = 2;
    bool keep_largest = true;
};

/// Standard cleanup: morphological closing with a disk, hole filling, then
/// (optionally) keep only the largest 4-connected component. Idempotent, and
/// empty masks stay empty.
inline BinaryMask postprocess_mask(const BinaryMask& mask, const PostprocessConfig& cfg = {}) {
    if (cfg.closing_radius < 0)
        throw std::invalid_argument("postprocess_mask: closing_radius must be >= 0");
    BinaryMask out = mask;
    if (cfg.closing_radius > 0) out = binary_close(out, disk_offsets(cfg.closing_radius));
    out = fill_holes(out);
    if (cfg.keep_largest) out = largest_component(out);
    return out;
}

/// Otsu segmentation of the (quantized) plane, dark side as lesion, followed
/// by postprocessing.
inline BinaryMask otsu_segment_dark(const ChannelPlane& plane, const PostprocessConfig& post = {}) {
    const ChannelPlane q = quantize(plane);
    const int t = otsu_threshold(build_histogram(q));
    return postprocess_mask(threshold_dark(q, t), post);
}

/// Blue-channel Otsu segmentation of an RGB image.
inline BinaryMask segment_b_otsu(const RasterImage& img, const PostprocessConfig& post = {}) {
    return otsu_segment_dark(extract_channel(img, Channel::B), post);
}

/// Mean of the darker cluster of a 1-D 2-means (Lloyd) clustering of the plane
/// values. Initial centers sit at the 25th/75th percentile values (or min/max
/// when those coincide); iteration stops when both centers move < 1e-6.
/// Throws std::domain_error if the plane is constant.
inline double kmeans2_lesion_mean(const ChannelPlane& plane) {
    std::vector<double> xs = plane.values();
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n == 0 || xs.front() == xs.back())
        throw std::domain_error("kmeans2_lesion_mean: plane has no spread");

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + xs[i];

    auto percentile = [&](double q) { return xs[static_cast<std::size_t>(q * (n - 1))]; };
    double lo = percentile(0.25), hi = percentile(0.75);
    if (lo == hi) {
        lo = xs.front();
        hi = xs.back();
    }

    for (int iter = 0; iter < 1000; ++iter) {
        const double cut = 0.5 * (lo + hi);
        // values <= cut belong to the low cluster; both sides stay non-empty
        // because the cut lies strictly between the extreme values
        const std::size_t k =
            static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), cut) - xs.begin());
        const std::size_t klo = std::max<std::size_t>(1, std::min(k, n - 1));
        const double new_lo = prefix[klo] / klo;
        const double new_hi = (prefix[n] - prefix[klo]) / (n - klo);
        const bool done = std::abs(new_lo - lo) < 1e-6 && std::abs(new_hi - hi) < 1e-6;
        lo = new_lo;
        hi = new_hi;
        if (done) break;
    }
    return std::min(lo, hi);
}

}  // namespace lesionseg
