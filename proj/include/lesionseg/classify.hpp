#pragma once

// Linear scoring of the (a, b, c) descriptors with weights picked by an
// exhaustive ROC search. Sensitivity is deliberately favoured: among the
// per-weight optima the final pick maximizes sensitivity first and only then
// the distance to the ideal (1,1) corner. A sample is called malignant when
// its score reaches the threshold.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lesionseg/features.hpp"

namespace lesionseg {

enum class Label { benign, malignant };

inline const char* to_string(Label l) { return l == Label::malignant ? "malignant" : "benign"; }

struct LabeledFeatures {
    FeatureVector features;
    Label label = Label::benign;
};

struct TrainedClassifier {
    double w_a = 0.0;
    double w_b = 0.0;
    double w_c = 0.0;
    double threshold = 0.0;
    double train_sensitivity = 0.0;
    double train_specificity = 0.0;
};

inline double score(const FeatureVector& f, double w_a, double w_b, double w_c) {
    return w_a * f.a + w_b * f.b + w_c * f.c;
}

inline double score(const FeatureVector& f, const TrainedClassifier& clf) {
    return score(f, clf.w_a, clf.w_b, clf.w_c);
}

inline Label predict(const FeatureVector& f, const TrainedClassifier& clf) {
    return score(f, clf) >= clf.threshold ? Label::malignant : Label::benign;
}

/// Exhaustive search over the weight simplex (step `grid_step`, so 231 triples
/// at the default 0.05) and, per weight, over candidate thresholds: 0, the
/// midpoints between consecutive distinct scores, and 1. Per weight the
/// threshold minimizing the Euclidean distance of (sensitivity, specificity)
/// to (1,1) is kept, distance ties (within 1e-12) broken by higher sensitivity
/// then lower threshold. Across weights the highest sensitivity wins, ties by
/// smaller distance then lexicographically smallest weights. Throws when the
/// data has fewer than two samples or only one class.
inline TrainedClassifier train(const std::vector<LabeledFeatures>& data, double grid_step = 0.05) {
    if (data.size() < 2) throw std::invalid_argument("train: need at least two samples");
    if (!(grid_step > 0.0) || grid_step > 1.0)
        throw std::invalid_argument("train: grid_step must be in (0, 1]");
    std::int64_t pos = 0, neg = 0;
    for (const auto& s : data) (s.label == Label::malignant ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("train: both classes must be present");

    const int steps = std::max(1, static_cast<int>(std::lround(1.0 / grid_step)));
    constexpr double kDistTol = 1e-12;

    bool have_best = false;
    TrainedClassifier best;
    double best_dist = 0.0;

    for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps - i; ++j) {
            const int k = steps - i - j;
            const double wa = i * grid_step, wb = j * grid_step, wc = k * grid_step;

            std::vector<double> mal, ben;
            mal.reserve(pos);
            ben.reserve(neg);
            for (const auto& s : data) {
                const double sc = score(s.features, wa, wb, wc);
                (s.label == Label::malignant ? mal : ben).push_back(sc);
            }
            std::sort(mal.begin(), mal.end());
            std::sort(ben.begin(), ben.end());

            std::vector<double> all;
            all.reserve(data.size());
            all.insert(all.end(), mal.begin(), mal.end());
            all.insert(all.end(), ben.begin(), ben.end());
            std::sort(all.begin(), all.end());
            all.erase(std::unique(all.begin(), all.end()), all.end());

            std::vector<double> thresholds;
            thresholds.push_back(0.0);
            for (std::size_t t = 0; t + 1 < all.size(); ++t)
                thresholds.push_back(0.5 * (all[t] + all[t + 1]));
            thresholds.push_back(1.0);

            bool have_local = false;
            double local_t = 0.0, local_sens = 0.0, local_spec = 0.0, local_dist = 0.0;
            for (double t : thresholds) {
                const auto tp = mal.end() - std::lower_bound(mal.begin(), mal.end(), t);
                const auto fp = ben.end() - std::lower_bound(ben.begin(), ben.end(), t);
                const double sens = static_cast<double>(tp) / pos;
                const double spec = static_cast<double>(neg - fp) / neg;
                const double dist =
                    std::sqrt((1.0 - sens) * (1.0 - sens) + (1.0 - spec) * (1.0 - spec));
                bool take = false;
                if (!have_local || dist < local_dist - kDistTol)
                    take = true;
                else if (dist <= local_dist + kDistTol &&
                         (sens > local_sens || (sens == local_sens && t < local_t)))
                    take = true;
                if (take) {
                    have_local = true;
                    local_t = t;
                    local_sens = sens;
                    local_spec = spec;
                    local_dist = dist;
                }
            }

            bool take = false;
            if (!have_best || local_sens > best.train_sensitivity)
                take = true;
            else if (local_sens == best.train_sensitivity && local_dist < best_dist)
                take = true;
            // equal sensitivity and distance: the lexicographically smallest
            // (w_a, w_b, w_c) is the one seen first in this loop order
            if (take) {
                have_best = true;
                best = TrainedClassifier{wa, wb, wc, local_t, local_sens, local_spec};
                best_dist = local_dist;
            }
        }
    return best;
}

/// Plain-text model serialization (key=value per line).
inline void save_classifier(const TrainedClassifier& clf, std::ostream& out) {
    out.precision(17);
    out << "w_a=" << clf.w_a << "\n"
        << "w_b=" << clf.w_b << "\n"
        << "w_c=" << clf.w_c << "\n"
        << "threshold=" << clf.threshold << "\n"
        << "train_sensitivity=" << clf.train_sensitivity << "\n"
        << "train_specificity=" << clf.train_specificity << "\n";
}

inline void save_classifier(const TrainedClassifier& clf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_classifier: cannot write " + path);
    save_classifier(clf, out);
}

inline TrainedClassifier load_classifier(std::istream& in) {
    TrainedClassifier clf;
    bool saw_wa = false, saw_wb = false, saw_wc = false, saw_t = false;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const double value = std::stod(line.substr(eq + 1));
        if (key == "w_a") {
            clf.w_a = value;
            saw_wa = true;
        } else if (key == "w_b") {
            clf.w_b = value;
            saw_wb = true;
        } else if (key == "w_c") {
            clf.w_c = value;
            saw_wc = true;
        } else if (key == "threshold") {
            clf.threshold = value;
            saw_t = true;
        } else if (key == "train_sensitivity") {
            clf.train_sensitivity = value;
        } else if (key == "train_specificity") {
            clf.train_specificity = value;
        }
    }
    if (!(saw_wa && saw_wb && saw_wc && saw_t))
        throw std::runtime_error("load_classifier: missing required keys");
    return clf;
}

inline TrainedClassifier load_classifier(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_classifier: cannot read " + path);
    return load_classifier(in);
}

}  // namespace lesionseg
