#include <catch2/catch_amalgamated.hpp>

#include "lesionseg/chan_vese.hpp"
#include "lesionseg/dataset.hpp"
#include "lesionseg/eval.hpp"

using namespace lesionseg;

TEST_CASE("segment_chan_vese recovers a dark disk") {
    Phantom p;
    const PhantomSample sample = make_phantom(p);
    const BinaryMask mask = segment_chan_vese(sample.image);
    REQUIRE(mask.width() == sample.image.width());
    REQUIRE(mask.height() == sample.image.height());
    REQUIRE(jaccard(mask, sample.truth) > 0.95);
}

TEST_CASE("segment_chan_vese returns empty on a constant image") {
    const RasterImage img(30, 30, Rgb{120, 120, 120});
    REQUIRE(segment_chan_vese(img).area() == 0);
}

TEST_CASE("half-plane boundary recovered within 2 px") {
    const int w = 60, h = 40, split = 28;
    RasterImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = x < split ? Rgb{60, 60, 60} : Rgb{200, 200, 200};
    PostprocessConfig post;
    post.keep_largest = true;
    const BinaryMask mask = segment_chan_vese(img, ChanVeseConfig{}, post);
    // darker phase is the left half; every row's lesion run should end near x=split
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool want = x < split;
            if (std::abs(x - split) > 2) REQUIRE(mask.at(x, y) == want);
        }
}

TEST_CASE("evolution energy is non-increasing") {
    std::vector<PhantomSample> samples;
    samples.push_back(make_phantom(Phantom{}));
    Phantom wob;
    wob.wobble_amp = 0.2;
    wob.noise_amp = 40.0;
    wob.seed = 3;
    samples.push_back(make_phantom(wob));
    for (const auto& sample : samples) {
        ChanVeseConfig cfg;
        cfg.iterations = 120;
        const ChanVeseResult res = evolve_chan_vese(
            luminance(sample.image), cfg);
        REQUIRE(res.energies.size() >= 2);
        for (std::size_t i = 1; i < res.energies.size(); ++i)
            REQUIRE(res.energies[i] <= res.energies[i - 1] + 1e-6);
    }
}

TEST_CASE("early stop fires well before the iteration cap on an easy image") {
    Phantom p;
    const PhantomSample sample = make_phantom(p);
    ChanVeseConfig cfg;  // 1000 iterations allowed
    const ChanVeseResult res = evolve_chan_vese(luminance(sample.image), cfg);
    REQUIRE(res.iterations < cfg.iterations);
}
