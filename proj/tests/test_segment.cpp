#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include "lesionseg/dataset.hpp"
#include "lesionseg/eval.hpp"
#include "lesionseg/segment.hpp"

using namespace lesionseg;

namespace {

// Independent Otsu oracle: try every split {<=t, >t} and maximize the
// between-class variance (S0*w1 - S1*w0)^2 / (w0*w1), all in exact integer
// arithmetic so plateau ties resolve identically to any faithful
// implementation that picks the smallest t.
int otsu_brute_force(const Histogram256& hist) {
    long long total = 0, grand = 0;
    for (int v = 0; v < 256; ++v) {
        total += hist.counts[v];
        grand += static_cast<long long>(hist.counts[v]) * v;
    }
    int best_t = -1;
    __int128 best_num = -1, best_den = 1;
    long long w0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist.counts[t];
        s0 += static_cast<long long>(hist.counts[t]) * t;
        const long long w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const long long s1 = grand - s0;
        const __int128 diff = static_cast<__int128>(s0) * w1 - static_cast<__int128>(s1) * w0;
        const __int128 num = diff * diff;
        const __int128 den = static_cast<__int128>(w0) * w1;
        if (best_t < 0 || num * best_den > best_num * den) {
            best_t = t;
            best_num = num;
            best_den = den;
        }
    }
    return best_t;
}

// Exhaustive 1-D 2-means: every cut between adjacent intensity levels, keep
// the split with the smallest within-cluster SSE, return the darker mean.
double kmeans_brute_force(const std::vector<double>& values) {
    double best_sse = -1.0, best_mean = 0.0;
    for (int cut = 0; cut < 255; ++cut) {
        const double boundary = cut + 0.5;
        double n_lo = 0, n_hi = 0, s_lo = 0, s_hi = 0;
        for (double v : values) (v <= boundary ? (++n_lo, s_lo += v) : (++n_hi, s_hi += v));
        if (n_lo == 0 || n_hi == 0) continue;
        const double m_lo = s_lo / n_lo, m_hi = s_hi / n_hi;
        double sse = 0;
        for (double v : values) {
            const double d = v - (v <= boundary ? m_lo : m_hi);
            sse += d * d;
        }
        if (best_sse < 0 || sse < best_sse - 1e-12) {
            best_sse = sse;
            best_mean = std::min(m_lo, m_hi);
        }
    }
    return best_mean;
}

ChannelPlane plane_from(const std::vector<double>& v, int w, int h) {
    ChannelPlane p(w, h);
    p.values() = v;
    return p;
}

}  // namespace

TEST_CASE("otsu_threshold: plateau ties take the smallest level") {
    ChannelPlane p(20, 10);
    for (int i = 0; i < 100; ++i) p.values()[i] = 50;
    for (int i = 100; i < 200; ++i) p.values()[i] = 200;
    const Histogram256 hist = build_histogram(p);
    REQUIRE(hist.total == 200);
    REQUIRE(otsu_threshold(hist) == 50);
    REQUIRE(otsu_brute_force(hist) == 50);
}

TEST_CASE("otsu_threshold rejects a single-bin histogram") {
    ChannelPlane p(4, 4, 128.0);
    REQUIRE_THROWS_AS(otsu_threshold(build_histogram(p)), std::domain_error);
}

TEST_CASE("otsu_threshold matches the exhaustive oracle on random planes") {
    std::mt19937 rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        ChannelPlane p(8, 8);
        // mixed distributions: uniform, bimodal, narrow
        if (rep % 3 == 0) {
            std::uniform_int_distribution<int> d(0, 255);
            for (auto& v : p.values()) v = d(rng);
        } else if (rep % 3 == 1) {
            std::normal_distribution<double> lo(60, 12), hi(190, 9);
            std::bernoulli_distribution pick(0.4);
            for (auto& v : p.values()) v = quantize_value(pick(rng) ? lo(rng) : hi(rng));
        } else {
            std::uniform_int_distribution<int> d(100, 110);
            for (auto& v : p.values()) v = d(rng);
        }
        const Histogram256 hist = build_histogram(p);
        int oracle = -1;
        try {
            oracle = otsu_brute_force(hist);
        } catch (...) {
        }
        if (oracle < 0) continue;
        // single occupied bin: both sides must refuse
        int occupied = 0;
        for (auto c : hist.counts)
            if (c) ++occupied;
        if (occupied < 2) {
            REQUIRE_THROWS_AS(otsu_threshold(hist), std::domain_error);
            continue;
        }
        REQUIRE(otsu_threshold(hist) == oracle);
    }
}

TEST_CASE("segment_b_otsu recovers a clean dark disk") {
    Phantom p;
    const PhantomSample sample = make_phantom(p);
    const BinaryMask mask = segment_b_otsu(sample.image);
    REQUIRE(mask.width() == sample.image.width());
    REQUIRE(mask.height() == sample.image.height());
    REQUIRE(jaccard(mask, sample.truth) > 0.98);
}

TEST_CASE("segment_b_otsu on a uniform image reports the degenerate histogram") {
    const RasterImage img(16, 16, Rgb{90, 90, 90});
    REQUIRE_THROWS_AS(segment_b_otsu(img), std::domain_error);
}

TEST_CASE("segment_b_otsu picks the dark side: inverted phantom fails by design") {
    Phantom p;
    p.lesion = Rgb{235, 228, 220};
    p.field = Rgb{70, 50, 40};
    const PhantomSample sample = make_phantom(p);
    const BinaryMask mask = segment_b_otsu(sample.image);
    // the bright disk is not selected; the dark field is
    REQUIRE(jaccard(mask, sample.truth) < 0.2);
}

TEST_CASE("kmeans2_lesion_mean separated clusters and extremes") {
    std::vector<double> v(200, 40.0);
    for (int i = 100; i < 200; ++i) v[i] = 220.0;
    REQUIRE(kmeans2_lesion_mean(plane_from(v, 20, 10)) == Catch::Approx(40.0).margin(1e-12));

    std::vector<double> two = {0.0, 255.0};
    REQUIRE(kmeans2_lesion_mean(plane_from(two, 2, 1)) == Catch::Approx(0.0).margin(1e-12));

    REQUIRE_THROWS_AS(kmeans2_lesion_mean(ChannelPlane(4, 4, 7.0)), std::domain_error);
}

TEST_CASE("kmeans2_lesion_mean matches the exhaustive cut oracle on bimodal data") {
    std::mt19937 rng(99);
    for (int rep = 0; rep < 40; ++rep) {
        std::normal_distribution<double> lo(50 + rep % 5, 10), hi(180 + rep % 7, 14);
        std::bernoulli_distribution pick(0.3 + 0.01 * (rep % 30));
        std::vector<double> v(160);
        for (auto& x : v) x = quantize_value(pick(rng) ? hi(rng) : lo(rng));
        const ChannelPlane p = plane_from(v, 16, 10);
        bool constant = true;
        for (double x : v) constant &= (x == v[0]);
        if (constant) continue;
        REQUIRE(kmeans2_lesion_mean(p) ==
                Catch::Approx(kmeans_brute_force(v)).margin(1e-9));
    }
}

TEST_CASE("postprocess_mask fills holes, keeps the largest blob, closes cracks") {
    // hole
    BinaryMask holed(20, 20, false);
    for (int y = 4; y <= 15; ++y)
        for (int x = 4; x <= 15; ++x) holed.set(x, y, true);
    holed.set(9, 9, false);
    REQUIRE(postprocess_mask(holed).at(9, 9));

    // keep-largest
    BinaryMask two(30, 10, false);
    for (int i = 0; i < 30; ++i) two.set(i % 6, 1 + i / 6, true);      // 30 px blob
    for (int i = 0; i < 10; ++i) two.set(20 + i % 5, 6 + i / 5, true); // 10 px blob
    const BinaryMask kept = postprocess_mask(two, PostprocessConfig{0, true});
    REQUIRE(kept.area() == 30);
    REQUIRE_FALSE(kept.at(20, 6));

    // 1-px crack through a disk, default radius 2
    Phantom ph;
    const BinaryMask disk = make_phantom(ph).truth;
    BinaryMask cracked = disk;
    for (int y = 0; y < cracked.height(); ++y) cracked.set(50, y, false);
    int count = 0;
    label_components4(postprocess_mask(cracked), &count);
    REQUIRE(count == 1);
}

TEST_CASE("postprocess_mask is idempotent") {
    std::mt19937 rng(12);
    std::bernoulli_distribution d(0.45);
    for (int rep = 0; rep < 10; ++rep) {
        BinaryMask m(25, 25);
        for (int y = 0; y < 25; ++y)
            for (int x = 0; x < 25; ++x) m.set(x, y, d(rng));
        const BinaryMask once = postprocess_mask(m);
        REQUIRE(postprocess_mask(once) == once);
    }
}

TEST_CASE("postprocess_mask output contains the closing of its input") {
    std::mt19937 rng(13);
    std::bernoulli_distribution d(0.3);
    BinaryMask m(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) m.set(x, y, d(rng));
    PostprocessConfig cfg;
    cfg.keep_largest = false;  // largest-selection may of course drop pixels
    const BinaryMask closed = binary_close(m, disk_offsets(cfg.closing_radius));
    const BinaryMask post = postprocess_mask(m, cfg);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            if (closed.at(x, y)) REQUIRE(post.at(x, y));
    REQUIRE(postprocess_mask(BinaryMask(5, 5, false)).area() == 0);
}
