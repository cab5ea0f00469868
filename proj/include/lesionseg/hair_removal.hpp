#pragma once

// Hair removal for dermoscopy frames. Dark hairs are thin structures, so a
// grayscale closing with a line element not aligned to the hair wipes them
// out while leaving broad regions alone. A pixel is flagged as hair when the
// strongest closing response over all orientations exceeds the original value
// by more than the threshold in any RGB channel; flagged pixels are repainted
// by interpolating the nearest clean pixels across the hair.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lesionseg/morphology.hpp"
#include "lesionseg/raster.hpp"

namespace lesionseg {

struct HairRemovalConfig {
    int line_length = 9;    // odd
    int orientations = 4;   // evenly spaced over 180 degrees
    double hair_threshold = 10.0;

    void validate() const {
        if (line_length < 3 || line_length % 2 == 0)
            throw std::invalid_argument("hair.line_length must be odd and >= 3");
        if (orientations < 1) throw std::invalid_argument("hair.orientations must be >= 1");
        if (!(hair_threshold >= 0)) throw std::invalid_argument("hair.hair_threshold is negative");
    }
};

inline RasterImage dull_razor(const RasterImage& img, const HairRemovalConfig& cfg = {}) {
    cfg.validate();

    const int w = img.width(), h = img.height();

    // unit steps for each orientation (0 deg = horizontal)
    std::vector<std::pair<int, int>> steps(cfg.orientations);
    for (int k = 0; k < cfg.orientations; ++k) {
        const double angle = M_PI * k / cfg.orientations;
        int sx = static_cast<int>(std::lround(std::cos(angle)));
        int sy = static_cast<int>(std::lround(std::sin(angle)));
        if (sx == 0 && sy == 0) sx = 1;
        steps[k] = {sx, sy};
    }

    std::array<ChannelPlane, 3> planes = {extract_channel(img, Channel::R),
                                          extract_channel(img, Channel::G),
                                          extract_channel(img, Channel::B)};

    // closings[k][ch]
    std::vector<std::array<ChannelPlane, 3>> closings(cfg.orientations);
    for (int k = 0; k < cfg.orientations; ++k) {
        const SEOffsets se = line_offsets(cfg.line_length, steps[k].first, steps[k].second);
        for (int ch = 0; ch < 3; ++ch) closings[k][ch] = gray_close(planes[ch], se);
    }

    BinaryMask hair(w, h);
    std::vector<int> hair_dir(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool is_hair = false;
            for (int ch = 0; ch < 3 && !is_hair; ++ch) {
                double strongest = closings[0][ch].at(x, y);
                for (int k = 1; k < cfg.orientations; ++k)
                    strongest = std::max(strongest, closings[k][ch].at(x, y));
                is_hair = strongest - planes[ch].at(x, y) > cfg.hair_threshold;
            }
            if (!is_hair) continue;
            hair.set(x, y, true);
            // the aligned closing barely reacts, so the orientation with the
            // smallest summed response is the hair direction
            int best_k = 0;
            double best_sum = 0.0;
            for (int k = 0; k < cfg.orientations; ++k) {
                double s = closings[k][0].at(x, y) + closings[k][1].at(x, y) +
                           closings[k][2].at(x, y);
                if (k == 0 || s < best_sum) {
                    best_sum = s;
                    best_k = k;
                }
            }
            hair_dir[static_cast<std::size_t>(y) * w + x] = best_k;
        }

    RasterImage out = img;
    const int reach = 3 * cfg.line_length;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!hair.at(x, y)) continue;
            const auto [sx, sy] = steps[hair_dir[static_cast<std::size_t>(y) * w + x]];
            const int px = -sy, py = sx;  // perpendicular to the hair
            int d1 = 0, d2 = 0;
            for (int t = 1; t <= reach; ++t) {
                const int nx = x + t * px, ny = y + t * py;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) break;
                if (!hair.at(nx, ny)) {
                    d1 = t;
                    break;
                }
            }
            for (int t = 1; t <= reach; ++t) {
                const int nx = x - t * px, ny = y - t * py;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) break;
                if (!hair.at(nx, ny)) {
                    d2 = t;
                    break;
                }
            }
            if (d1 == 0 && d2 == 0) continue;  // nothing clean in reach
            auto sample = [&](int t) {
                return img.at(x + t * px, y + t * py);
            };
            Rgb v;
            if (d1 > 0 && d2 > 0) {
                // linear interpolation weighted by distance to each side
                const Rgb a = sample(d1), b = sample(-d2);
                const double wa = static_cast<double>(d2) / (d1 + d2);
                const double wb = static_cast<double>(d1) / (d1 + d2);
                v.r = static_cast<std::uint8_t>(quantize_value(wa * a.r + wb * b.r));
                v.g = static_cast<std::uint8_t>(quantize_value(wa * a.g + wb * b.g));
                v.b = static_cast<std::uint8_t>(quantize_value(wa * a.b + wb * b.b));
            } else {
                v = d1 > 0 ? sample(d1) : sample(-d2);
            }
            out.at(x, y) = v;
        }
    return out;
}

}  // namespace lesionseg
