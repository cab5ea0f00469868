// Command-line front end: segment / compare / classify / features / phantom.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lesionseg/lesionseg.hpp"

namespace {

using namespace lesionseg;

struct CommonOpts {
    std::string config_path;
    std::string data_root;
    std::string labels_csv;
    std::string out_dir = "out";
    std::string methods;
    std::optional<double> delta;
    std::optional<std::uint32_t> seed;
    std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool wants_data) {
    cmd->add_option("--config", o.config_path, "pipeline config file (key=value)");
    if (wants_data)
        cmd->add_option("--data", o.data_root, "corpus root directory")->required();
    cmd->add_option("--labels", o.labels_csv, "label CSV (id,label)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--methods", o.methods, "comma-separated method list");
    cmd->add_option("--delta", o.delta, "similarity margin for Jaccard comparison");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--jobs", o.jobs, "worker threads");
}

PipelineConfig build_config(const CommonOpts& o) {
    PipelineConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path);
    // flags override the file
    if (!o.methods.empty()) cfg.methods = parse_method_list(o.methods);
    if (o.delta) cfg.delta = *o.delta;
    if (o.seed) cfg.seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    cfg.validate();
    return cfg;
}

Corpus load(const CommonOpts& o) {
    std::optional<std::filesystem::path> labels;
    if (!o.labels_csv.empty()) labels = o.labels_csv;
    Corpus corpus = load_corpus(o.data_root, labels);
    if (corpus.entries.empty()) throw std::runtime_error("no images found in " + o.data_root);
    return corpus;
}

Method single_method(const CommonOpts& o, Method fallback) {
    if (o.methods.empty()) return fallback;
    const auto list = parse_method_list(o.methods);
    if (list.size() != 1) throw std::runtime_error("this command takes exactly one method");
    return list[0];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dermoscopic lesion segmentation and diagnosis pipeline"};
    app.require_subcommand(1);

    CommonOpts seg_opts, cmp_opts, cls_opts, feat_opts;
    std::string cmp_input;
    int kfold = 0;
    std::string phantom_out = "out", phantom_suite = "standard";
    std::uint32_t phantom_seed = 7;

    CLI::App* seg = app.add_subcommand("segment", "segment a corpus with the configured methods");
    add_common(seg, seg_opts, true);

    CLI::App* cmp = app.add_subcommand("compare", "compare two methods' Jaccard columns");
    cmp->add_option("segments_csv", cmp_input, "segments.csv from a segment run")->required();
    add_common(cmp, cmp_opts, false);

    CLI::App* cls = app.add_subcommand("classify", "train and evaluate the ABCD classifier");
    add_common(cls, cls_opts, true);
    cls->add_option("--kfold", kfold, "stratified k-fold cross-validation (0 = resubstitution)");

    CLI::App* feat = app.add_subcommand("features", "extract ABCD features to CSV");
    add_common(feat, feat_opts, true);

    CLI::App* ph = app.add_subcommand("phantom", "emit a synthetic phantom corpus");
    ph->add_option("--out", phantom_out, "output directory");
    ph->add_option("--suite", phantom_suite, "standard | separable");
    ph->add_option("--seed", phantom_seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seg->parsed()) {
            const PipelineConfig cfg = build_config(seg_opts);
            return cmd_segment(cfg, load(seg_opts), seg_opts.out_dir, std::cout);
        }
        if (cmp->parsed()) {
            const auto methods = parse_method_list(cmp_opts.methods);
            if (methods.size() != 2)
                throw std::runtime_error("compare needs --methods with exactly two entries");
            const double delta = cmp_opts.delta.value_or(0.1);
            return cmd_compare(cmp_input, methods[0], methods[1], delta, cmp_opts.out_dir,
                               std::cout);
        }
        if (cls->parsed()) {
            const PipelineConfig cfg = build_config(cls_opts);
            if (cls_opts.labels_csv.empty())
                throw std::runtime_error("classify needs --labels");
            return cmd_classify(cfg, load(cls_opts), single_method(cls_opts, Method::mam), kfold,
                                cls_opts.out_dir, std::cout);
        }
        if (feat->parsed()) {
            const PipelineConfig cfg = build_config(feat_opts);
            return cmd_features(cfg, load(feat_opts), single_method(feat_opts, Method::mam),
                                feat_opts.out_dir, std::cout);
        }
        if (ph->parsed()) return cmd_phantom(phantom_out, phantom_suite, phantom_seed, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lesionseg::kExitFatal;
    }
    return lesionseg::kExitFatal;
}
