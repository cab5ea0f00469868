#pragma once

// Binary and grayscale morphology building blocks: structuring-element
// generators, dilate/erode/close, border-connected hole filling and connected
// component extraction. Masks use true = lesion throughout.

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lesionseg/raster.hpp"

namespace lesionseg {

using SEOffsets = std::vector<std::pair<int, int>>;

/// Disk structuring element: all (dx,dy) with dx^2+dy^2 <= r^2. Radius 0 is
/// the single-pixel identity element.
inline SEOffsets disk_offsets(int radius) {
    if (radius < 0) throw std::invalid_argument("disk_offsets: negative radius");
    SEOffsets offs;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) offs.emplace_back(dx, dy);
    return offs;
}

/// 3x3 box element (used to thicken edge maps by one pixel).
inline SEOffsets box3_offsets() {
    SEOffsets offs;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) offs.emplace_back(dx, dy);
    return offs;
}

/// Digital line of `length` pixels through the origin with unit step (sx,sy).
inline SEOffsets line_offsets(int length, int sx, int sy) {
    if (length < 1 || length % 2 == 0)
        throw std::invalid_argument("line_offsets: length must be odd and positive");
    SEOffsets offs;
    const int half = length / 2;
    for (int t = -half; t <= half; ++t) offs.emplace_back(t * sx, t * sy);
    return offs;
}

inline BinaryMask binary_dilate(const BinaryMask& mask, const SEOffsets& se) {
    const int w = mask.width(), h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            for (auto [dx, dy] : se) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < w && ny >= 0 && ny < h) out.set(nx, ny, true);
            }
        }
    return out;
}

inline BinaryMask binary_erode(const BinaryMask& mask, const SEOffsets& se) {
    const int w = mask.width(), h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool keep = true;
            for (auto [dx, dy] : se) {
                const int nx = x + dx, ny = y + dy;
                // outside the frame counts as foreground, so erosion (and
                // with it closing) never eats regions cut off by the frame
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                if (!mask.at(nx, ny)) {
                    keep = false;
                    break;
                }
            }
            out.set(x, y, keep);
        }
    return out;
}

inline BinaryMask binary_close(const BinaryMask& mask, const SEOffsets& se) {
    return binary_erode(binary_dilate(mask, se), se);
}

/// Fills holes: background regions (8-connected) that do not touch the image
/// border become lesion. Never removes a set pixel.
inline BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width(), h = mask.height();
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
    std::queue<std::pair<int, int>> q;
    auto push = [&](int x, int y) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!outside[i] && !mask.at(x, y)) {
            outside[i] = 1;
            q.emplace(x, y);
        }
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < w && ny >= 0 && ny < h) push(nx, ny);
            }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, mask.at(x, y) || !outside[static_cast<std::size_t>(y) * w + x]);
    return out;
}

/// 4-connected component labels; 0 is background. Labels are assigned in
/// raster-scan order so the numbering is deterministic.
inline std::vector<int> label_components4(const BinaryMask& mask, int* count_out = nullptr) {
    const int w = mask.width(), h = mask.height();
    std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
    int next = 0;
    std::queue<std::pair<int, int>> q;
    for (int y0 = 0; y0 < h; ++y0)
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (!mask.at(x0, y0) || labels[i0]) continue;
            labels[i0] = ++next;
            q.emplace(x0, y0);
            while (!q.empty()) {
                auto [x, y] = q.front();
                q.pop();
                constexpr int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (auto [dx, dy] : nb) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (mask.at(nx, ny) && !labels[ni]) {
                        labels[ni] = next;
                        q.emplace(nx, ny);
                    }
                }
            }
        }
    if (count_out) *count_out = next;
    return labels;
}

/// Keeps only the largest 4-connected component (first in scan order on area
/// ties). Empty masks pass through unchanged.
inline BinaryMask largest_component(const BinaryMask& mask) {
    int count = 0;
    const auto labels = label_components4(mask, &count);
    if (count == 0) return mask;
    std::vector<std::int64_t> areas(static_cast<std::size_t>(count) + 1, 0);
    for (int lbl : labels)
        if (lbl) ++areas[lbl];
    int best = 1;
    for (int lbl = 2; lbl <= count; ++lbl)
        if (areas[lbl] > areas[best]) best = lbl;
    BinaryMask out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            out.set(x, y, labels[static_cast<std::size_t>(y) * mask.width() + x] == best);
    return out;
}

/// Grayscale dilation (local max over the element footprint); offsets falling
/// outside the frame are ignored.
inline ChannelPlane gray_dilate(const ChannelPlane& plane, const SEOffsets& se) {
    const int w = plane.width(), h = plane.height();
    ChannelPlane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = plane.at(x, y);
            for (auto [dx, dy] : se) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < w && ny >= 0 && ny < h) m = std::max(m, plane.at(nx, ny));
            }
            out.at(x, y) = m;
        }
    return out;
}

inline ChannelPlane gray_erode(const ChannelPlane& plane, const SEOffsets& se) {
    const int w = plane.width(), h = plane.height();
    ChannelPlane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = plane.at(x, y);
            for (auto [dx, dy] : se) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < w && ny >= 0 && ny < h) m = std::min(m, plane.at(nx, ny));
            }
            out.at(x, y) = m;
        }
    return out;
}

inline ChannelPlane gray_close(const ChannelPlane& plane, const SEOffsets& se) {
    return gray_erode(gray_dilate(plane, se), se);
}

}  // namespace lesionseg
