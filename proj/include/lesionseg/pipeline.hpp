#pragma once

// Batch orchestration behind the CLI subcommands. Each command maps a corpus
// through preprocess → segment → (features → classify), isolating per-image
// failures into CSV rows so one bad file never sinks a run. Images are farmed
// out to a small worker pool; result rows are buffered per corpus index and
// written in corpus order, so output files are byte-identical across reruns.
// Wall times go to a separate timings.csv to keep the main CSVs reproducible.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lesionseg/canny.hpp"
#include "lesionseg/chan_vese.hpp"
#include "lesionseg/classify.hpp"
#include "lesionseg/config.hpp"
#include "lesionseg/csv.hpp"
#include "lesionseg/dataset.hpp"
#include "lesionseg/eval.hpp"
#include "lesionseg/features.hpp"
#include "lesionseg/hair_removal.hpp"
#include "lesionseg/image_io.hpp"
#include "lesionseg/psm.hpp"
#include "lesionseg/segment.hpp"

namespace lesionseg {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitFatal = 2;

namespace detail {

/// Runs work(0..n-1) on `jobs` threads; each result lands in its own slot, so
/// output order never depends on scheduling. `work` must not throw.
template <typename T, typename Work>
std::vector<T> run_ordered(std::size_t n, int jobs, Work&& work) {
    std::vector<T> out(n);
    if (n == 0) return out;
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = work(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                out[i] = work(i);
            }
        });
    for (auto& th : pool) th.join();
    return out;
}

inline std::string format_double(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Error text destined for a CSV cell: commas and newlines would break the row.
inline std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace detail

struct PreparedImage {
    RasterImage image;                 // downscaled, hair removed
    std::optional<BinaryMask> expert;  // expert mask at the downscaled size
};

inline PreparedImage prepare_image(const RasterImage& raw,
                                   const std::optional<BinaryMask>& expert_raw,
                                   const PipelineConfig& cfg) {
    PreparedImage out;
    const RasterImage small = downscale(raw, cfg.max_pixels);
    out.image = dull_razor(small, cfg.hair);
    if (expert_raw) {
        if (expert_raw->width() != raw.width() || expert_raw->height() != raw.height())
            throw std::runtime_error("expert mask size does not match image");
        out.expert = downscale_mask(*expert_raw, small.width(), small.height());
    }
    return out;
}

inline PreparedImage prepare_entry(const CorpusEntry& entry, const PipelineConfig& cfg) {
    const RasterImage raw = read_image(entry.image_path);
    std::optional<BinaryMask> expert;
    if (entry.mask_path) expert = read_mask(*entry.mask_path);
    return prepare_image(raw, expert, cfg);
}

struct MethodOutcome {
    BinaryMask mask;
    std::optional<double> chosen_c;     // psm and mam
    std::optional<MamBranch> winner;    // mam only
};

inline MethodOutcome run_method(Method method, const PreparedImage& prep,
                                const PipelineConfig& cfg) {
    switch (method) {
        case Method::canny:
            return {segment_canny_fill(prep.image, cfg.post), std::nullopt, std::nullopt};
        case Method::b_otsu:
            return {segment_b_otsu(prep.image, cfg.post), std::nullopt, std::nullopt};
        case Method::chan_vese:
            return {segment_chan_vese(prep.image, cfg.chanvese, cfg.post), std::nullopt,
                    std::nullopt};
        case Method::psm: {
            PsmResult r = psm_segment(extract_channel(prep.image, Channel::B), cfg.psm, cfg.post);
            return {std::move(r.mask), r.chosen_c, std::nullopt};
        }
        case Method::mam: {
            MamResult r = mam_segment(prep.image, cfg.psm, cfg.post);
            return {std::move(r.mask), r.branch_c[static_cast<int>(r.winner)], r.winner};
        }
        case Method::expert:
            if (!prep.expert) throw std::runtime_error("no expert mask for this image");
            return {*prep.expert, std::nullopt, std::nullopt};
    }
    throw std::logic_error("unreachable method");
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

namespace detail {

struct SegmentRow {
    std::string id, method;
    std::optional<std::int64_t> area;
    std::optional<double> chosen_c;
    std::string mam_winner;
    std::optional<double> jaccard_vs_expert;
    std::string error;  // empty = ok
    double wall_ms = 0.0;
};

struct SegmentItem {
    std::vector<SegmentRow> rows;
};

}  // namespace detail

/// Segments every corpus image with every configured method. Writes per-method
/// mask PNGs (and overlays where an expert mask exists), segments.csv and
/// timings.csv under out_dir. Returns kExitPartial if any row failed.
inline int cmd_segment(const PipelineConfig& cfg, const Corpus& corpus,
                       const std::filesystem::path& out_dir, std::ostream& log) {
    namespace fs = std::filesystem;
    cfg.validate();
    fs::create_directories(out_dir / "masks");
    fs::create_directories(out_dir / "overlays");

    auto work = [&](std::size_t i) -> detail::SegmentItem {
        const CorpusEntry& entry = corpus.entries[i];
        detail::SegmentItem item;
        std::optional<PreparedImage> prep;
        std::string prep_error;
        try {
            prep = prepare_entry(entry, cfg);
        } catch (const std::exception& e) {
            prep_error = e.what();
        }
        for (Method m : cfg.methods) {
            detail::SegmentRow row;
            row.id = entry.id;
            row.method = to_string(m);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                if (!prep) throw std::runtime_error(prep_error);
                MethodOutcome out = run_method(m, *prep, cfg);
                row.area = out.mask.area();
                row.chosen_c = out.chosen_c;
                if (out.winner) row.mam_winner = to_string(*out.winner);
                if (prep->expert) row.jaccard_vs_expert = jaccard(out.mask, *prep->expert);
                const std::string stem = entry.id + "_" + row.method;
                write_mask(out_dir / "masks" / (stem + ".png"), out.mask);
                if (prep->expert)
                    write_image(out_dir / "overlays" / (stem + ".png"),
                                render_overlay(out.mask, *prep->expert));
            } catch (const std::exception& e) {
                row.error = detail::csv_safe(e.what());
            }
            row.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            item.rows.push_back(std::move(row));
        }
        return item;
    };

    const auto items = detail::run_ordered<detail::SegmentItem>(corpus.entries.size(), cfg.jobs,
                                                                work);

    CsvWriter seg(out_dir / "segments.csv");
    seg.row({"id", "method", "area", "chosen_c", "mam_winner", "jaccard_vs_expert", "status"});
    CsvWriter tim(out_dir / "timings.csv");
    tim.row({"id", "method", "wall_time_ms"});
    std::size_t failures = 0, total = 0;
    for (const auto& item : items)
        for (const auto& row : item.rows) {
            ++total;
            if (!row.error.empty()) ++failures;
            seg.row({row.id, row.method,
                     row.area ? std::to_string(*row.area) : "",
                     row.chosen_c ? detail::format_double(*row.chosen_c, 6) : "",
                     row.mam_winner,
                     row.jaccard_vs_expert ? detail::format_double(*row.jaccard_vs_expert, 6) : "",
                     row.error.empty() ? "ok" : "error: " + row.error});
            tim.row({row.id, row.method, detail::format_double(row.wall_ms, 3)});
        }

    for (const auto& w : corpus.warnings) log << "warning: " << w << "\n";
    log << "segmented " << corpus.entries.size() << " image(s), " << total - failures << "/"
        << total << " rows ok -> " << (out_dir / "segments.csv").string() << "\n";
    return failures == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Reads a segments.csv, pairs the two methods' Jaccard columns by image id,
/// writes pairwise.csv and prints the better/similar/worse count triple.
inline int cmd_compare(const std::filesystem::path& segments_csv, Method method1, Method method2,
                       double delta, const std::filesystem::path& out_dir, std::ostream& log) {
    const CsvTable table = read_csv(segments_csv.string());
    const std::vector<std::string> expect = {"id",         "method",
                                             "area",       "chosen_c",
                                             "mam_winner", "jaccard_vs_expert",
                                             "status"};
    if (table.header != expect)
        throw std::runtime_error(segments_csv.string() + ": unexpected header for a segments CSV");

    // id -> jaccard, insertion-ordered so pairwise.csv follows the input file
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> by_id;
    const std::string name1 = to_string(method1), name2 = to_string(method2);
    for (const auto& row : table.rows) {
        if (row[6] != "ok" || row[5].empty()) continue;
        const bool is1 = row[1] == name1, is2 = row[1] == name2;
        if (!is1 && !is2) continue;
        auto [it, inserted] = by_id.try_emplace(row[0]);
        if (inserted) order.push_back(row[0]);
        const double j = std::stod(row[5]);
        if (is1) it->second.first = j;
        if (is2) it->second.second = j;  // self-comparison pairs a method with itself
    }

    std::filesystem::create_directories(out_dir);
    CsvWriter out(out_dir / "pairwise.csv");
    out.row({"id", "j1", "j2", "j12", "verdict"});
    int better = 0, similar = 0, worse = 0;
    for (const auto& id : order) {
        const auto& [j1, j2] = by_id[id];
        if (!j1 || !j2) continue;
        const ComparisonVerdict v = compare(*j1, *j2, delta);
        switch (v.verdict) {
            case Verdict::better: ++better; break;
            case Verdict::similar: ++similar; break;
            case Verdict::worse: ++worse; break;
        }
        out.row({id, detail::format_double(v.j1, 6), detail::format_double(v.j2, 6),
                 detail::format_double(v.j12, 6), to_string(v.verdict)});
    }
    if (better + similar + worse == 0)
        throw std::runtime_error("no image has a Jaccard value for both methods");

    char line[160];
    std::snprintf(line, sizeof line, "%-10s %7s %8s %6s   %s", "method", "better", "similar",
                  "worse", "vs");
    log << "Jaccard comparison (delta=" << detail::format_double(delta, 2) << ")\n"
        << line << "\n";
    std::snprintf(line, sizeof line, "%-10s %7d %8d %6d   %s", name1.c_str(), better, similar,
                  worse, name2.c_str());
    log << line << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// features / classify
// ---------------------------------------------------------------------------

namespace detail {

struct FeatureItem {
    std::string id;
    std::optional<FeatureVector> features;
    std::optional<Label> label;
    std::string error;
};

inline std::vector<FeatureItem> extract_all(const PipelineConfig& cfg, const Corpus& corpus,
                                            Method method) {
    auto work = [&](std::size_t i) -> FeatureItem {
        const CorpusEntry& entry = corpus.entries[i];
        FeatureItem item;
        item.id = entry.id;
        item.label = entry.label;
        try {
            const PreparedImage prep = prepare_entry(entry, cfg);
            MethodOutcome out = run_method(method, prep, cfg);
            item.features = extract_features(LesionSample{prep.image, std::move(out.mask),
                                                          std::nullopt});
        } catch (const std::exception& e) {
            item.error = csv_safe(e.what());
        }
        return item;
    };
    return run_ordered<FeatureItem>(corpus.entries.size(), cfg.jobs, work);
}

}  // namespace detail

/// Extracts ABCD features for every image with one method; writes features.csv
/// (id, label, a, b, c, d_px, d_mm, status).
inline int cmd_features(const PipelineConfig& cfg, const Corpus& corpus, Method method,
                        const std::filesystem::path& out_dir, std::ostream& log) {
    cfg.validate();
    const auto items = detail::extract_all(cfg, corpus, method);
    std::filesystem::create_directories(out_dir);
    CsvWriter out(out_dir / "features.csv");
    out.row({"id", "label", "a", "b", "c", "d_px", "d_mm", "status"});
    std::size_t failures = 0;
    for (const auto& item : items) {
        if (item.features) {
            const FeatureVector& f = *item.features;
            out.row({item.id, item.label ? to_string(*item.label) : "",
                     detail::format_double(f.a, 6), detail::format_double(f.b, 6),
                     detail::format_double(f.c, 6), detail::format_double(f.d_px, 3),
                     f.d_mm ? detail::format_double(*f.d_mm, 3) : "", "ok"});
        } else {
            ++failures;
            out.row({item.id, item.label ? to_string(*item.label) : "", "", "", "", "", "",
                     "error: " + item.error});
        }
    }
    log << "features for " << items.size() - failures << "/" << items.size() << " image(s) -> "
        << (out_dir / "features.csv").string() << "\n";
    return failures == 0 ? kExitOk : kExitPartial;
}

/// Stratified round-robin fold assignment, deterministic in corpus order.
inline std::vector<int> kfold_assignment(const std::vector<Label>& labels, int k) {
    std::vector<int> fold(labels.size());
    int next_benign = 0, next_malig = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int& counter = labels[i] == Label::malignant ? next_malig : next_benign;
        fold[i] = counter % k;
        ++counter;
    }
    return fold;
}

struct ClassifyOutcome {
    TrainedClassifier model;  // trained on the full corpus
    ConfusionReport report;   // resubstitution or k-fold aggregate
    std::size_t skipped = 0;  // images whose segmentation/features failed
};

/// Segments, extracts features and trains the weighted-ROC classifier.
/// With kfold >= 2, the report aggregates held-out predictions over stratified
/// folds; the saved model is always trained on the full feature set.
inline ClassifyOutcome run_classify(const PipelineConfig& cfg, const Corpus& corpus, Method method,
                                    int kfold = 0) {
    cfg.validate();
    for (const auto& entry : corpus.entries)
        if (!entry.label)
            throw std::runtime_error("classify: no label for image '" + entry.id + "'");

    const auto items = detail::extract_all(cfg, corpus, method);
    std::vector<LabeledFeatures> data;
    std::size_t skipped = 0;
    for (const auto& item : items) {
        if (!item.features) {
            ++skipped;
            continue;
        }
        data.push_back(LabeledFeatures{*item.features, *item.label});
    }
    if (data.size() < 2) throw std::runtime_error("classify: fewer than two usable images");

    ClassifyOutcome out;
    out.skipped = skipped;
    out.model = train(data, cfg.grid_step);

    std::vector<Label> truth(data.size()), pred(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) truth[i] = data[i].label;

    if (kfold >= 2) {
        if (static_cast<std::size_t>(kfold) > data.size())
            throw std::runtime_error("classify: more folds than usable images");
        const std::vector<int> fold = kfold_assignment(truth, kfold);
        for (int f = 0; f < kfold; ++f) {
            std::vector<LabeledFeatures> train_set;
            for (std::size_t i = 0; i < data.size(); ++i)
                if (fold[i] != f) train_set.push_back(data[i]);
            const TrainedClassifier clf = train(train_set, cfg.grid_step);
            for (std::size_t i = 0; i < data.size(); ++i)
                if (fold[i] == f) pred[i] = predict(data[i].features, clf);
        }
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) pred[i] = predict(data[i].features,
                                                                        out.model);
    }
    out.report = confusion(pred, truth);
    return out;
}

inline int cmd_classify(const PipelineConfig& cfg, const Corpus& corpus, Method method, int kfold,
                        const std::filesystem::path& out_dir, std::ostream& log) {
    const ClassifyOutcome out = run_classify(cfg, corpus, method, kfold);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path model_path =
        out_dir / ("model_" + std::string(to_string(method)) + ".txt");
    save_classifier(out.model, model_path.string());

    const ConfusionReport& r = out.report;
    char line[160];
    log << "Classification (" << (kfold >= 2 ? std::to_string(kfold) + "-fold" : "resubstitution")
        << ")\n";
    std::snprintf(line, sizeof line, "%-10s %11s %11s %8s", "method", "sensitivity",
                  "specificity", "accuracy");
    log << line << "\n";
    std::snprintf(line, sizeof line, "%-10s %11.4f %11.4f %8.4f", to_string(method),
                  r.sensitivity, r.specificity, r.accuracy);
    log << line << "\n";
    log << "tp=" << r.tp << " fn=" << r.fn << " tn=" << r.tn << " fp=" << r.fp
        << "  model -> " << model_path.string() << "\n";
    if (out.skipped > 0) log << out.skipped << " image(s) skipped due to errors\n";
    return out.skipped == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// phantom
// ---------------------------------------------------------------------------

/// Writes a synthetic corpus (images, ground-truth masks, labels.csv) so the
/// other subcommands can run without any external data. Suites: "standard"
/// (30 mixed-artifact phantoms) or "separable" (20 images, trivially
/// classifiable, for end-to-end checks).
inline int cmd_phantom(const std::filesystem::path& out_dir, const std::string& suite,
                       std::uint32_t seed, std::ostream& log) {
    std::vector<NamedPhantom> phantoms;
    if (suite == "standard") phantoms = standard_phantom_suite(seed);
    else if (suite == "separable") phantoms = separable_corpus(seed);
    else throw std::runtime_error("unknown phantom suite '" + suite + "'");

    std::filesystem::create_directories(out_dir);
    CsvWriter labels(out_dir / "labels.csv");
    labels.row({"id", "label"});
    for (const auto& np : phantoms) {
        write_image(out_dir / (np.id + ".png"), np.sample.image);
        write_mask(out_dir / (np.id + "_Segmentation.png"), np.sample.truth);
        labels.row({np.id, to_string(np.sample.label)});
    }
    log << "wrote " << phantoms.size() << " phantom(s) to " << out_dir.string() << "\n";
    return kExitOk;
}

}  // namespace lesionseg
