#pragma once

// Shape and colour descriptors of a segmented lesion, each normalized into
// [0,1] (diameter excepted):
//   a  principal-axis reflection asymmetry
//   b  border irregularity from the isoperimetric quotient
//   c  colour variegation from per-channel standard deviations
//   d  maximum Feret diameter in pixels (and mm when a scale is known)
//
// All descriptors are invariant to translation (coordinates are taken
// relative to the mask bounding box) and to axis-aligned rotation.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "lesionseg/morphology.hpp"
#include "lesionseg/raster.hpp"

namespace lesionseg {

struct FeatureVector {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d_px = 0.0;
    std::optional<double> d_mm;
};

struct LesionSample {
    RasterImage image;
    BinaryMask mask;
    std::optional<double> mm_per_pixel;
};

namespace detail {

struct MaskPoints {
    std::vector<std::pair<int, int>> pts;  // bbox-relative
    double cx = 0.0, cy = 0.0;
};

inline MaskPoints collect_points(const BinaryMask& mask) {
    MaskPoints mp;
    int minx = mask.width(), miny = mask.height();
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                minx = std::min(minx, x);
                miny = std::min(miny, y);
            }
    std::int64_t sx = 0, sy = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                mp.pts.emplace_back(x - minx, y - miny);
                sx += x - minx;
                sy += y - miny;
            }
    if (!mp.pts.empty()) {
        mp.cx = static_cast<double>(sx) / mp.pts.size();
        mp.cy = static_cast<double>(sy) / mp.pts.size();
    }
    return mp;
}

inline std::int64_t pack_xy(std::int64_t x, std::int64_t y) {
    return (x << 24) ^ (y & 0xffffff);
}

}  // namespace detail

/// Reflection asymmetry: reflect the mask across each principal axis (through
/// the centroid) and average the two symmetric-difference fractions,
/// a = (|M xor R1(M)| + |M xor R2(M)|) / (4 |M|). Zero for symmetric shapes.
inline double asymmetry(const BinaryMask& mask) {
    const auto mp = detail::collect_points(mask);
    const std::int64_t n = static_cast<std::int64_t>(mp.pts.size());
    if (n == 0) throw std::invalid_argument("asymmetry: empty mask");

    double mxx = 0, myy = 0, mxy = 0;
    for (auto [x, y] : mp.pts) {
        const double dx = x - mp.cx, dy = y - mp.cy;
        mxx += dx * dx;
        myy += dy * dy;
        mxy += dx * dy;
    }

    // principal direction of the second-moment matrix; near-isotropic shapes
    // fall back to the coordinate axes
    double d1x = 1.0, d1y = 0.0;
    if (std::abs(mxy) > 1e-9) {
        const double lam = 0.5 * (mxx + myy) +
                           0.5 * std::sqrt((mxx - myy) * (mxx - myy) + 4.0 * mxy * mxy);
        // two algebraically equivalent eigenvector formulas; keep the larger
        // one for conditioning. A 90-degree mask rotation swaps the pair, so
        // this choice makes the reflections exactly rotation-equivariant.
        double vx = mxy, vy = lam - mxx;
        const double ox = lam - myy, oy = mxy;
        if (ox * ox + oy * oy > vx * vx + vy * vy) {
            vx = ox;
            vy = oy;
        }
        const double len = std::sqrt(vx * vx + vy * vy);
        d1x = vx / len;
        d1y = vy / len;
    } else if (myy > mxx) {
        d1x = 0.0;
        d1y = 1.0;
    }
    const double axes[2][2] = {{d1x, d1y}, {-d1y, d1x}};

    std::unordered_set<std::int64_t> original;
    original.reserve(mp.pts.size() * 2);
    for (auto [x, y] : mp.pts) original.insert(detail::pack_xy(x, y));

    std::int64_t total_sym_diff = 0;
    for (const auto& axis : axes) {
        std::unordered_set<std::int64_t> reflected;
        reflected.reserve(mp.pts.size() * 2);
        for (auto [x, y] : mp.pts) {
            const double rx = x - mp.cx, ry = y - mp.cy;
            const double dot = rx * axis[0] + ry * axis[1];
            const std::int64_t ix = std::lround(mp.cx + 2.0 * dot * axis[0] - rx);
            const std::int64_t iy = std::lround(mp.cy + 2.0 * dot * axis[1] - ry);
            reflected.insert(detail::pack_xy(ix, iy));
        }
        for (auto key : original)
            if (!reflected.count(key)) ++total_sym_diff;
        for (auto key : reflected)
            if (!original.count(key)) ++total_sym_diff;
    }
    return std::clamp(static_cast<double>(total_sym_diff) / (4.0 * n), 0.0, 1.0);
}

namespace detail {

/// Perimeter by Moore boundary tracing: orthogonal steps cost 1, diagonal
/// steps sqrt(2). An isolated pixel has perimeter 0.
inline double trace_perimeter(const BinaryMask& mask) {
    const int w = mask.width(), h = mask.height();
    constexpr int dx8[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    constexpr int dy8[8] = {0, 1, 1, 1, 0, -1, -1, -1};

    int sx = -1, sy = -1;
    for (int y = 0; y < h && sx < 0; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y)) {
                sx = x;
                sy = y;
                break;
            }
    if (sx < 0) return 0.0;

    auto fg = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && mask.at(x, y);
    };

    // the start is the uppermost-leftmost pixel, so its west neighbour is
    // background and serves as the initial backtrack
    int cx = sx, cy = sy;
    int back = 4;  // direction from current to backtrack (west)
    std::int64_t orth = 0, diag = 0;
    int first_dir = -1;
    const std::int64_t step_cap = 4 * mask.area() + 8;
    for (std::int64_t steps = 0; steps < step_cap; ++steps) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (fg(cx + dx8[d], cy + dy8[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) return 0.0;  // isolated pixel
        if (cx == sx && cy == sy) {
            if (first_dir < 0)
                first_dir = found;
            else if (found == first_dir)
                break;  // closed the tour entering the start the same way
        }
        (found % 2 == 0 ? orth : diag) += 1;
        cx += dx8[found];
        cy += dy8[found];
        back = (found + 4) % 8;
    }
    // single summation keeps the total independent of traversal order, i.e.
    // exactly equal across rotations of the same outline
    return static_cast<double>(orth) + static_cast<double>(diag) * M_SQRT2;
}

}  // namespace detail

/// Border irregularity b = 1 - 1/kappa with kappa = P^2 / (4 pi A), clamped to
/// [0,1]. Compact disks give kappa near 1 (b near 0); elongated or ragged
/// outlines drive b toward 1. Multi-component masks are reduced to their
/// largest component first.
inline double border_irregularity(const BinaryMask& mask) {
    if (mask.area() == 0) throw std::invalid_argument("border_irregularity: empty mask");
    const BinaryMask comp = largest_component(mask);
    const double area = static_cast<double>(comp.area());
    const double perim = detail::trace_perimeter(comp);
    const double kappa = perim * perim / (4.0 * M_PI * area);
    if (kappa <= 1.0) return 0.0;
    return std::clamp(1.0 - 1.0 / kappa, 0.0, 1.0);
}

/// Colour variegation: mean of the three per-channel population standard
/// deviations over lesion pixels, normalized by half range and clamped.
inline double color_variegation(const RasterImage& img, const BinaryMask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height())
        throw std::invalid_argument("color_variegation: image/mask dimensions differ");
    std::int64_t n = 0;
    double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (!mask.at(x, y)) continue;
            const Rgb px = img.at(x, y);
            const double v[3] = {static_cast<double>(px.r), static_cast<double>(px.g),
                                 static_cast<double>(px.b)};
            for (int ch = 0; ch < 3; ++ch) {
                sum[ch] += v[ch];
                sumsq[ch] += v[ch] * v[ch];
            }
            ++n;
        }
    if (n == 0) throw std::invalid_argument("color_variegation: empty mask");
    double sigma_sum = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const double mean = sum[ch] / n;
        sigma_sum += std::sqrt(std::max(0.0, sumsq[ch] / n - mean * mean));
    }
    return std::clamp(sigma_sum / (3.0 * (kMaxIntensity / 2.0)), 0.0, 1.0);
}

namespace detail {

using Pt = std::pair<std::int64_t, std::int64_t>;

inline std::int64_t cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
}

inline std::int64_t dist2(const Pt& a, const Pt& b) {
    const std::int64_t dx = a.first - b.first, dy = a.second - b.second;
    return dx * dx + dy * dy;
}

/// Andrew monotone chain; collinear points are dropped.
inline std::vector<Pt> convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<Pt> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace detail

/// Maximum Feret diameter in pixels: the largest pixel-center distance between
/// boundary points, computed with rotating calipers on the convex hull.
inline double diameter(const BinaryMask& mask) {
    if (mask.area() == 0) throw std::invalid_argument("diameter: empty mask");
    std::vector<detail::Pt> boundary;
    const int w = mask.width(), h = mask.height();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const bool edge = x == 0 || x == w - 1 || y == 0 || y == h - 1 ||
                              !mask.at(x - 1, y) || !mask.at(x + 1, y) ||
                              !mask.at(x, y - 1) || !mask.at(x, y + 1);
            if (edge) boundary.emplace_back(x, y);
        }
    const auto hull = detail::convex_hull(std::move(boundary));
    const std::size_t m = hull.size();
    if (m == 1) return 0.0;
    if (m == 2) return std::sqrt(static_cast<double>(detail::dist2(hull[0], hull[1])));

    // rotating calipers over antipodal vertex pairs
    std::int64_t best = 0;
    std::size_t j = 1;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t ni = (i + 1) % m;
        while (true) {
            const std::size_t nj = (j + 1) % m;
            const std::int64_t cur = std::abs(detail::cross(hull[i], hull[ni], hull[j]));
            const std::int64_t nxt = std::abs(detail::cross(hull[i], hull[ni], hull[nj]));
            if (nxt > cur)
                j = nj;
            else
                break;
        }
        best = std::max({best, detail::dist2(hull[i], hull[j]), detail::dist2(hull[ni], hull[j])});
    }
    return std::sqrt(static_cast<double>(best));
}

/// All four descriptors for one sample. Multi-component masks (possible when
/// a caller bypasses the postprocessing) are reduced to the largest component.
inline FeatureVector extract_features(const LesionSample& sample) {
    if (sample.image.width() != sample.mask.width() ||
        sample.image.height() != sample.mask.height())
        throw std::invalid_argument("extract_features: image/mask dimensions differ");
    if (sample.mask.area() == 0) throw std::invalid_argument("extract_features: empty mask");
    const BinaryMask comp = largest_component(sample.mask);

    FeatureVector f;
    f.a = asymmetry(comp);
    f.b = border_irregularity(comp);
    f.c = color_variegation(sample.image, comp);
    f.d_px = diameter(comp);
    if (sample.mm_per_pixel) f.d_mm = f.d_px * *sample.mm_per_pixel;
    return f;
}

}  // namespace lesionseg
