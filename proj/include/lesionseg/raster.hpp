#pragma once

// 8-bit raster primitives shared by the whole pipeline: RGB images, real-valued
// channel planes (filtering happens in doubles, quantization back to 8 bits is
// a single explicit step), binary masks, and the high-boost sharpening kernel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lesionseg {

inline constexpr int kBitDepth = 8;
inline constexpr int kMaxIntensity = (1 << kBitDepth) - 1;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

inline bool operator==(Rgb a, Rgb b) { return a.r == b.r && a.g == b.g && a.b == b.b; }
inline bool operator!=(Rgb a, Rgb b) { return !(a == b); }

namespace detail {
inline void check_dims(int width, int height, const char* what) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument(std::string(what) + ": dimensions must be positive");
}
}  // namespace detail

/// Row-major 8-bit RGB image.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgb fill = {})
        : width_(width), height_(height) {
        detail::check_dims(width, height, "RasterImage");
        pixels_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::int64_t pixel_count() const { return static_cast<std::int64_t>(width_) * height_; }
    bool empty() const { return pixels_.empty(); }

    Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<Rgb>& pixels() { return pixels_; }
    const std::vector<Rgb>& pixels() const { return pixels_; }

    bool operator==(const RasterImage& o) const {
        return width_ == o.width_ && height_ == o.height_ && pixels_ == o.pixels_;
    }

private:
    int width_ = 0, height_ = 0;
    std::vector<Rgb> pixels_;
};

/// Single channel held as doubles so filter responses keep fractional values
/// until they are explicitly quantized.
class ChannelPlane {
public:
    ChannelPlane() = default;
    ChannelPlane(int width, int height, double fill = 0.0)
        : width_(width), height_(height) {
        detail::check_dims(width, height, "ChannelPlane");
        values_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::int64_t pixel_count() const { return static_cast<std::int64_t>(width_) * height_; }

    double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    int width_ = 0, height_ = 0;
    std::vector<double> values_;
};

/// Row-major binary mask; true marks lesion pixels.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : width_(width), height_(height) {
        detail::check_dims(width, height, "BinaryMask");
        bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::int64_t pixel_count() const { return static_cast<std::int64_t>(width_) * height_; }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool value) {
        bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
    }

    std::int64_t area() const {
        std::int64_t n = 0;
        for (auto b : bits_) n += b;
        return n;
    }

    std::vector<std::uint8_t>& bits() { return bits_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    bool operator==(const BinaryMask& o) const {
        return width_ == o.width_ && height_ == o.height_ && bits_ == o.bits_;
    }

private:
    int width_ = 0, height_ = 0;
    std::vector<std::uint8_t> bits_;
};

enum class Channel { R, G, B };

inline ChannelPlane extract_channel(const RasterImage& img, Channel ch) {
    if (img.empty()) throw std::invalid_argument("extract_channel: empty image");
    ChannelPlane plane(img.width(), img.height());
    const auto& px = img.pixels();
    auto& v = plane.values();
    for (std::size_t i = 0; i < px.size(); ++i) {
        switch (ch) {
            case Channel::R: v[i] = px[i].r; break;
            case Channel::G: v[i] = px[i].g; break;
            case Channel::B: v[i] = px[i].b; break;
        }
    }
    return plane;
}

/// Sharpening kernel: identity plus c times the 4-neighbour Laplacian,
///
///   [ 0    -c    0  ]
///   [ -c  4c+1  -c  ]
///   [ 0    -c    0  ]
///
/// c = 0 is the identity, and the entries sum to 1 for every c, so constant
/// regions pass through unchanged regardless of the boost amount.
class HighBoostKernel {
public:
    explicit HighBoostKernel(double c) : c_(c) {
        if (!(c >= 0.0)) throw std::invalid_argument("HighBoostKernel: c must be >= 0");
    }

    double c() const { return c_; }

    double entry(int row, int col) const {
        if (row < 0 || row > 2 || col < 0 || col > 2)
            throw std::out_of_range("HighBoostKernel::entry");
        if (row == 1 && col == 1) return 4.0 * c_ + 1.0;
        if ((row + col) % 2 == 1) return -c_;
        return 0.0;
    }

    // Summed in factored form (1 + c * sum-of-Laplacian-entries) so the
    // mean-preservation identity holds exactly in floating point.
    double entry_sum() const { return 1.0 + c_ * (4.0 - 1.0 - 1.0 - 1.0 - 1.0); }

private:
    double c_;
};

/// 3x3 high-boost convolution with replicate padding at the borders. Evaluated
/// as v + c*(4v - (up+down) - (left+right)): with c = 0 every plane is
/// reproduced bit-exactly, and constant neighbourhoods are exact fixed points.
inline ChannelPlane convolve3x3(const ChannelPlane& plane, const HighBoostKernel& kernel) {
    const int w = plane.width(), h = plane.height();
    if (w == 0 || h == 0) throw std::invalid_argument("convolve3x3: empty plane");
    ChannelPlane out(w, h);
    const double c = kernel.c();
    for (int y = 0; y < h; ++y) {
        const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const double v = plane.at(x, y);
            const double cross = (plane.at(x, yu) + plane.at(x, yd)) +
                                 (plane.at(xl, y) + plane.at(xr, y));
            out.at(x, y) = v + c * (4.0 * v - cross);
        }
    }
    return out;
}

inline double quantize_value(double v) {
    double r = std::round(v);
    if (r < 0.0) return 0.0;
    if (r > kMaxIntensity) return kMaxIntensity;
    return r;
}

/// Rounds and clamps a plane into the 8-bit range. Every histogram-based step
/// downstream runs on quantized planes; this is the one place values re-enter
/// the integer grid after real-valued filtering.
inline ChannelPlane quantize(const ChannelPlane& plane) {
    ChannelPlane out = plane;
    for (auto& v : out.values()) v = quantize_value(v);
    return out;
}

/// v -> min(round(v * factor), 255), elementwise. factor must be positive.
inline ChannelPlane saturating_scale(const ChannelPlane& plane, double factor) {
    if (!(factor > 0.0))
        throw std::invalid_argument("saturating_scale: factor must be positive");
    ChannelPlane out = plane;
    for (auto& v : out.values()) v = quantize_value(v * factor);
    return out;
}

namespace detail {

inline double bilinear_sample(const ChannelPlane& src, double x, double y) {
    const int w = src.width(), h = src.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = src.at(x0, y0) * (1.0 - fx) + src.at(x1, y0) * fx;
    const double bot = src.at(x0, y1) * (1.0 - fx) + src.at(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

// Output dimensions for the largest uniform shrink factor that brings the
// pixel count strictly under the cap (sides floor(w*s) x floor(h*s), each at
// least 1). Found by bisection on s; the result is maximal in the sense that
// bumping either rounded side by one would meet or exceed the cap.
inline std::pair<int, int> downscaled_dims(int w, int h, std::int64_t max_pixels) {
    auto dims_at = [&](double s) {
        int ow = std::max(1, static_cast<int>(static_cast<double>(w) * s));
        int oh = std::max(1, static_cast<int>(static_cast<double>(h) * s));
        return std::pair<int, int>(ow, oh);
    };
    auto area_of = [](std::pair<int, int> d) {
        return static_cast<std::int64_t>(d.first) * d.second;
    };
    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 128; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (area_of(dims_at(mid)) < max_pixels)
            lo = mid;
        else
            hi = mid;
    }
    auto d = dims_at(lo);
    if (area_of(d) >= max_pixels) d = {1, 1};  // cap smaller than any 1xN strip
    return d;
}

}  // namespace detail

/// Shrinks an image below max_pixels total pixels with bilinear resampling,
/// preserving aspect ratio. Images already under the cap are returned as-is.
inline RasterImage downscale(const RasterImage& img, std::int64_t max_pixels = 12000) {
    if (max_pixels < 1) throw std::invalid_argument("downscale: max_pixels must be >= 1");
    if (img.empty()) throw std::invalid_argument("downscale: empty image");
    if (img.pixel_count() < max_pixels) return img;

    const auto [ow, oh] = detail::downscaled_dims(img.width(), img.height(), max_pixels);
    ChannelPlane planes[3] = {extract_channel(img, Channel::R),
                              extract_channel(img, Channel::G),
                              extract_channel(img, Channel::B)};
    RasterImage out(ow, oh);
    const double sx = static_cast<double>(img.width()) / ow;
    const double sy = static_cast<double>(img.height()) / oh;
    for (int y = 0; y < oh; ++y) {
        const double srcy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < ow; ++x) {
            const double srcx = (x + 0.5) * sx - 0.5;
            Rgb px;
            px.r = static_cast<std::uint8_t>(quantize_value(detail::bilinear_sample(planes[0], srcx, srcy)));
            px.g = static_cast<std::uint8_t>(quantize_value(detail::bilinear_sample(planes[1], srcx, srcy)));
            px.b = static_cast<std::uint8_t>(quantize_value(detail::bilinear_sample(planes[2], srcx, srcy)));
            out.at(x, y) = px;
        }
    }
    return out;
}

/// Nearest-neighbour mask resample to explicit target dimensions; ties in the
/// nearest-source computation round toward the top-left pixel.
inline BinaryMask downscale_mask(const BinaryMask& mask, int target_w, int target_h) {
    detail::check_dims(target_w, target_h, "downscale_mask");
    if (mask.pixel_count() == 0) throw std::invalid_argument("downscale_mask: empty mask");
    BinaryMask out(target_w, target_h);
    const double sx = static_cast<double>(mask.width()) / target_w;
    const double sy = static_cast<double>(mask.height()) / target_h;
    auto nearest = [](double f, int limit) {
        // round-half-down keeps exact .5 ties on the smaller (top/left) index
        int i = static_cast<int>(std::ceil(f - 0.5));
        return std::clamp(i, 0, limit - 1);
    };
    for (int y = 0; y < target_h; ++y) {
        const int sy_i = nearest((y + 0.5) * sy - 0.5, mask.height());
        for (int x = 0; x < target_w; ++x) {
            const int sx_i = nearest((x + 0.5) * sx - 0.5, mask.width());
            out.set(x, y, mask.at(sx_i, sy_i));
        }
    }
    return out;
}

}  // namespace lesionseg
