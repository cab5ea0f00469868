#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lesionseg/raster.hpp"

using namespace lesionseg;

namespace {

ChannelPlane random_plane(int w, int h, std::mt19937& rng) {
    std::uniform_int_distribution<int> d(0, 255);
    ChannelPlane p(w, h);
    for (auto& v : p.values()) v = d(rng);
    return p;
}

}  // namespace

TEST_CASE("extract_channel reads the requested component") {
    RasterImage img(1, 1, Rgb{10, 20, 30});
    REQUIRE(extract_channel(img, Channel::B).at(0, 0) == 30.0);
    REQUIRE(extract_channel(img, Channel::G).at(0, 0) == 20.0);
    REQUIRE(extract_channel(img, Channel::R).at(0, 0) == 10.0);

    RasterImage two(2, 1);
    two.at(0, 0) = Rgb{0, 0, 0};
    two.at(1, 0) = Rgb{255, 255, 255};
    const ChannelPlane b = extract_channel(two, Channel::B);
    REQUIRE(b.at(0, 0) == 0.0);
    REQUIRE(b.at(1, 0) == 255.0);
}

TEST_CASE("extract_channel round-trips all three planes") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> d(0, 255);
    RasterImage img(9, 5);
    for (auto& px : img.pixels())
        px = Rgb{static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)),
                 static_cast<std::uint8_t>(d(rng))};
    const ChannelPlane r = extract_channel(img, Channel::R);
    const ChannelPlane g = extract_channel(img, Channel::G);
    const ChannelPlane b = extract_channel(img, Channel::B);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Rgb px = img.at(x, y);
            REQUIRE(px.r == r.at(x, y));
            REQUIRE(px.g == g.at(x, y));
            REQUIRE(px.b == b.at(x, y));
        }
}

TEST_CASE("high-boost kernel matrix and exact sum") {
    HighBoostKernel k(2.5);
    REQUIRE(k.entry(1, 1) == 4.0 * 2.5 + 1.0);
    REQUIRE(k.entry(0, 1) == -2.5);
    REQUIRE(k.entry(1, 0) == -2.5);
    REQUIRE(k.entry(0, 0) == 0.0);
    REQUIRE(k.entry(2, 2) == 0.0);
    REQUIRE_THROWS_AS(HighBoostKernel(-0.1), std::invalid_argument);

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> c(0.0, 15.0);
    for (int i = 0; i < 1000; ++i) REQUIRE(HighBoostKernel(c(rng)).entry_sum() == 1.0);
}

TEST_CASE("convolve3x3: identity at c=0, constants fixed, center stencil") {
    std::mt19937 rng(3);
    const ChannelPlane p = random_plane(8, 6, rng);
    const ChannelPlane id = convolve3x3(p, HighBoostKernel(0.0));
    REQUIRE(id.values() == p.values());  // bit-exact

    std::uniform_real_distribution<double> c(0.0, 15.0);
    for (int i = 0; i < 20; ++i) {
        const ChannelPlane flat(5, 5, 77.0);
        const ChannelPlane out = convolve3x3(flat, HighBoostKernel(c(rng)));
        for (double v : out.values()) REQUIRE(v == 77.0);
    }

    ChannelPlane spike(3, 3, 0.0);
    spike.at(1, 1) = 100.0;
    REQUIRE(convolve3x3(spike, HighBoostKernel(1.0)).at(1, 1) == 500.0);
}

TEST_CASE("convolve3x3 is linear") {
    std::mt19937 rng(19);
    const ChannelPlane p = random_plane(8, 8, rng);
    const ChannelPlane q = random_plane(8, 8, rng);
    const double a = 1.7, b = -0.3;
    HighBoostKernel k(2.2);
    ChannelPlane mix(8, 8);
    for (std::size_t i = 0; i < mix.values().size(); ++i)
        mix.values()[i] = a * p.values()[i] + b * q.values()[i];
    const ChannelPlane lhs = convolve3x3(mix, k);
    const ChannelPlane cp = convolve3x3(p, k);
    const ChannelPlane cq = convolve3x3(q, k);
    for (std::size_t i = 0; i < lhs.values().size(); ++i)
        REQUIRE(lhs.values()[i] ==
                Catch::Approx(a * cp.values()[i] + b * cq.values()[i]).margin(1e-9));
}

TEST_CASE("quantize rounds and clamps into [0,255]") {
    ChannelPlane p(5, 1);
    p.values() = {-3.2, 0.49, 0.5, 254.6, 999.0};
    const ChannelPlane q = quantize(p);
    REQUIRE(q.values() == (std::vector<double>{0.0, 0.0, 1.0, 255.0, 255.0}));
}

TEST_CASE("saturating_scale: clamping, identity, normalization formula") {
    ChannelPlane p(2, 1);
    p.values() = {64.0, 128.0};
    REQUIRE(saturating_scale(p, 2.0).values() == (std::vector<double>{128.0, 255.0}));
    REQUIRE(saturating_scale(p, 1.0).values() == p.values());

    // the half-range normalization used by the MAM branches: 128*(1+eps)/m
    ChannelPlane one(1, 1, 100.0);
    REQUIRE(saturating_scale(one, 128.0 * (1.0 + 0.0) / 100.0).at(0, 0) == 128.0);

    REQUIRE_THROWS_AS(saturating_scale(p, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(saturating_scale(p, -1.0), std::invalid_argument);
}

TEST_CASE("saturating_scale is monotone") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> fd(0.1, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
        const double f = fd(rng);
        ChannelPlane p = random_plane(16, 1, rng);
        std::sort(p.values().begin(), p.values().end());
        const ChannelPlane s = saturating_scale(p, f);
        for (std::size_t i = 1; i < s.values().size(); ++i)
            REQUIRE(s.values()[i - 1] <= s.values()[i]);
    }
}

TEST_CASE("downscale leaves small images alone and hits the derived sizes") {
    RasterImage small(100, 100, Rgb{9, 9, 9});
    REQUIRE(downscale(small, 12000) == small);

    const RasterImage sq = downscale(RasterImage(200, 200, Rgb{50, 60, 70}), 12000);
    REQUIRE(sq.width() == 109);
    REQUIRE(sq.height() == 109);

    const RasterImage wide = downscale(RasterImage(400, 100, Rgb{50, 60, 70}), 12000);
    REQUIRE(wide.width() == 219);
    REQUIRE(wide.height() == 54);
    REQUIRE(wide.pixel_count() == 11826);
}

TEST_CASE("downscale output is under the cap and maximal; idempotent when small") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> dim(30, 500);
    for (int rep = 0; rep < 25; ++rep) {
        const int w = dim(rng), h = dim(rng);
        const RasterImage out = downscale(RasterImage(w, h, Rgb{1, 2, 3}), 12000);
        REQUIRE(out.pixel_count() < 12000);
        if (static_cast<std::int64_t>(w) * h >= 12000) {
            // maximality: growing either side by one would reach the cap
            REQUIRE(static_cast<std::int64_t>(out.width() + 1) * (out.height() + 1) >= 12000);
            // aspect ratio: both sides must be explainable by one shared
            // scale factor s with ow = floor(w*s), oh = floor(h*s)
            const double s_lo = std::max(static_cast<double>(out.width()) / w,
                                         static_cast<double>(out.height()) / h);
            const double s_hi = std::min((out.width() + 1.0) / w,
                                         (out.height() + 1.0) / h);
            REQUIRE(s_lo < s_hi);
        }
        REQUIRE(downscale(out, 12000) == out);
    }
}

TEST_CASE("downscale preserves constant images exactly") {
    const RasterImage out = downscale(RasterImage(300, 211, Rgb{42, 17, 250}), 12000);
    for (const Rgb& px : out.pixels()) REQUIRE((px == Rgb{42, 17, 250}));
}

TEST_CASE("downscale_mask nearest-neighbor with top-left ties") {
    BinaryMask all_true(7, 9, true);
    REQUIRE(downscale_mask(all_true, 3, 4).area() == 12);
    BinaryMask all_false(7, 9, false);
    REQUIRE(downscale_mask(all_false, 3, 4).area() == 0);

    // 2x2 [[T,F],[F,F]] -> 1x1: source center lands on the exact tie point
    // (0.5, 0.5); the convention picks the top-left pixel, which is true.
    BinaryMask m(2, 2, false);
    m.set(0, 0, true);
    const BinaryMask one = downscale_mask(m, 1, 1);
    REQUIRE(one.at(0, 0));

    BinaryMask m2(2, 2, true);
    m2.set(0, 0, false);
    REQUIRE_FALSE(downscale_mask(m2, 1, 1).at(0, 0));
}
