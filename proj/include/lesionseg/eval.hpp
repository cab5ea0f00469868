#pragma once

// Mask agreement and diagnostic scoring: Jaccard index, the relative paired
// comparison J12 with its better/similar/worse verdict, confusion-matrix
// summaries (malignant is the positive class), and a colour overlay for
// visual inspection of a segmentation against the reference.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lesionseg/classify.hpp"
#include "lesionseg/raster.hpp"

namespace lesionseg {

/// Jaccard index |S & E| / |S | E|; two empty masks agree perfectly (1).
inline double jaccard(const BinaryMask& s, const BinaryMask& e) {
    if (s.width() != e.width() || s.height() != e.height())
        throw std::invalid_argument("jaccard: mask dimensions differ");
    std::int64_t inter = 0, uni = 0;
    const auto& sb = s.bits();
    const auto& eb = e.bits();
    for (std::size_t i = 0; i < sb.size(); ++i) {
        const bool a = sb[i] != 0, b = eb[i] != 0;
        inter += a && b;
        uni += a || b;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

enum class Verdict { worse, similar, better };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::worse: return "worse";
        case Verdict::similar: return "similar";
        case Verdict::better: return "better";
    }
    return "?";
}

struct ComparisonVerdict {
    double j1 = 0.0;
    double j2 = 0.0;
    double j12 = 0.0;
    Verdict verdict = Verdict::similar;
};

/// Relative comparison J12 = (J1 - J2) / max(J1, J2): method 1 is better than
/// method 2 when J12 > delta, worse when J12 < -delta, similar otherwise.
/// Two zero scores compare as 0 (similar). Antisymmetric by construction.
inline ComparisonVerdict compare(double j1, double j2, double delta = 0.1) {
    if (!(delta >= 0.0)) throw std::invalid_argument("compare: delta must be >= 0");
    if (j1 < 0.0 || j1 > 1.0 || j2 < 0.0 || j2 > 1.0)
        throw std::invalid_argument("compare: Jaccard values must lie in [0,1]");
    ComparisonVerdict v;
    v.j1 = j1;
    v.j2 = j2;
    const double m = std::max(j1, j2);
    v.j12 = m > 0.0 ? (j1 - j2) / m : 0.0;
    if (v.j12 > delta)
        v.verdict = Verdict::better;
    else if (v.j12 < -delta)
        v.verdict = Verdict::worse;
    return v;
}

struct ConfusionReport {
    std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
    double accuracy = 0.0;
    double sensitivity = 0.0;  // NaN when no positive ground truth
    double specificity = 0.0;  // NaN when no negative ground truth
};

/// Confusion counts and rates; malignant is positive. A class absent from the
/// ground truth leaves its rate as NaN rather than a misleading 0.
inline ConfusionReport confusion(const std::vector<Label>& predicted,
                                 const std::vector<Label>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("confusion: size mismatch");
    if (predicted.empty()) throw std::invalid_argument("confusion: empty input");
    ConfusionReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == Label::malignant;
        const bool p = predicted[i] == Label::malignant;
        if (t && p) ++r.tp;
        else if (t && !p) ++r.fn;
        else if (!t && p) ++r.fp;
        else ++r.tn;
    }
    const auto n = static_cast<double>(truth.size());
    r.accuracy = static_cast<double>(r.tp + r.tn) / n;
    const std::int64_t pos = r.tp + r.fn, neg = r.tn + r.fp;
    r.sensitivity = pos > 0 ? static_cast<double>(r.tp) / pos
                            : std::numeric_limits<double>::quiet_NaN();
    r.specificity = neg > 0 ? static_cast<double>(r.tn) / neg
                            : std::numeric_limits<double>::quiet_NaN();
    return r;
}

/// Agreement overlay: yellow where segmentation and reference agree on lesion,
/// blue for reference-only (missed), red for segmentation-only (spurious),
/// black elsewhere.
inline RasterImage render_overlay(const BinaryMask& seg, const BinaryMask& ref) {
    if (seg.width() != ref.width() || seg.height() != ref.height())
        throw std::invalid_argument("render_overlay: mask dimensions differ");
    RasterImage img(seg.width(), seg.height());
    for (int y = 0; y < seg.height(); ++y)
        for (int x = 0; x < seg.width(); ++x) {
            const bool s = seg.at(x, y), e = ref.at(x, y);
            Rgb px{0, 0, 0};
            if (s && e) px = {255, 255, 0};
            else if (e) px = {0, 0, 255};
            else if (s) px = {255, 0, 0};
            img.at(x, y) = px;
        }
    return img;
}

}  // namespace lesionseg
