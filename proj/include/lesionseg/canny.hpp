#pragma once

// Edge-based baseline segmenter: Canny edges on the grayscale image, edge map
// thickened by one pixel, interior holes filled, then the usual cleanup. The
// hysteresis thresholds are derived from the gradient-magnitude histogram so
// no per-image tuning is needed.

#include <cmath>
#include <queue>
#include <vector>

#include "lesionseg/raster.hpp"
#include "lesionseg/segment.hpp"

namespace lesionseg {

/// Rec.601 luminance in [0,255].
inline ChannelPlane luminance(const RasterImage& img) {
    ChannelPlane plane(img.width(), img.height());
    const auto& px = img.pixels();
    auto& v = plane.values();
    for (std::size_t i = 0; i < px.size(); ++i)
        v[i] = 0.299 * px[i].r + 0.587 * px[i].g + 0.114 * px[i].b;
    return plane;
}

/// Separable Gaussian blur with replicate borders; kernel radius 3*sigma.
inline ChannelPlane gaussian_blur(const ChannelPlane& plane, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;

    const int w = plane.width(), h = plane.height();
    ChannelPlane tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * plane.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = acc;
        }
    return out;
}

struct CannyConfig {
    double sigma = 1.4;
    double low_ratio = 0.4;   // of the auto threshold
    double high_ratio = 1.0;  // of the auto threshold
};

namespace detail {

/// Canny edge map: Sobel gradients, non-maximum suppression, hysteresis with
/// thresholds at low/high ratios of the Otsu level of the gradient-magnitude
/// histogram. A flat image (no gradient anywhere) yields an empty map.
inline BinaryMask canny_edges(const ChannelPlane& gray, const CannyConfig& cfg) {
    const int w = gray.width(), h = gray.height();
    const ChannelPlane smooth = gaussian_blur(gray, cfg.sigma);

    ChannelPlane mag(w, h), gx(w, h), gy(w, h);
    double max_mag = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto at = [&](int xx, int yy) {
                return smooth.at(std::clamp(xx, 0, w - 1), std::clamp(yy, 0, h - 1));
            };
            const double sx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            const double sy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            gx.at(x, y) = sx;
            gy.at(x, y) = sy;
            const double m = std::hypot(sx, sy);
            mag.at(x, y) = m;
            max_mag = std::max(max_mag, m);
        }
    if (max_mag <= 0.0) return BinaryMask(w, h);  // flat image: no edges

    // auto thresholds from a 256-bin histogram of the magnitudes
    ChannelPlane scaled(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            scaled.at(x, y) = mag.at(x, y) / max_mag * kMaxIntensity;
    double level;
    try {
        level = otsu_threshold(build_histogram(scaled)) / static_cast<double>(kMaxIntensity) * max_mag;
    } catch (const std::domain_error&) {
        return BinaryMask(w, h);  // degenerate histogram: treat as edge-free
    }
    const double high = cfg.high_ratio * level;
    const double low = cfg.low_ratio * level;

    // non-maximum suppression along the quantized gradient direction
    BinaryMask strong(w, h), weak(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double m = mag.at(x, y);
            if (m < low) continue;
            const double ax = gx.at(x, y), ay = gy.at(x, y);
            int dx = 1, dy = 0;
            if (std::abs(ay) > 2.4142 * std::abs(ax)) {
                dx = 0;
                dy = 1;
            } else if (std::abs(ay) > 0.4142 * std::abs(ax)) {
                dy = (ax > 0) == (ay > 0) ? 1 : -1;
            }
            auto m_at = [&](int xx, int yy) {
                if (xx < 0 || xx >= w || yy < 0 || yy >= h) return 0.0;
                return mag.at(xx, yy);
            };
            if (m < m_at(x + dx, y + dy) || m < m_at(x - dx, y - dy)) continue;
            if (m >= high)
                strong.set(x, y, true);
            else
                weak.set(x, y, true);
        }

    // hysteresis: keep weak pixels 8-connected to a strong one
    BinaryMask edges(w, h);
    std::queue<std::pair<int, int>> q;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (strong.at(x, y)) {
                edges.set(x, y, true);
                q.emplace(x, y);
            }
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                if (weak.at(nx, ny) && !edges.at(nx, ny)) {
                    edges.set(nx, ny, true);
                    q.emplace(nx, ny);
                }
            }
    }
    return edges;
}

}  // namespace detail

/// Canny edges -> 1px dilation -> hole fill -> 1px erosion -> postprocess.
/// The dilation exists only to seal pinholes in the edge chain so the fill
/// holds; eroding by the same element afterwards pulls the outline back to
/// where the edges actually were. An image with no detectable edges
/// legitimately produces an empty mask.
inline BinaryMask segment_canny_fill(const RasterImage& img, const PostprocessConfig& post = {},
                                     const CannyConfig& cfg = {}) {
    BinaryMask edges = detail::canny_edges(luminance(img), cfg);
    if (edges.area() == 0) return BinaryMask(img.width(), img.height());
    edges = binary_dilate(edges, box3_offsets());
    return postprocess_mask(binary_erode(fill_holes(edges), box3_offsets()), post);
}

}  // namespace lesionseg
