#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lesionseg/config.hpp"
#include "lesionseg/dataset.hpp"
#include "lesionseg/image_io.hpp"
#include "lesionseg/pipeline.hpp"

using namespace lesionseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lesionseg_pipe_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Corpus phantom_corpus(const fs::path& dir, const std::string& suite) {
    std::ostringstream log;
    REQUIRE(cmd_phantom(dir, suite, suite == "separable" ? 11u : 7u, log) == kExitOk);
    return load_corpus(dir, dir / "labels.csv");
}

}  // namespace

TEST_CASE("config defaults") {
    const PipelineConfig cfg;
    REQUIRE(cfg.max_pixels == 12000);
    REQUIRE(cfg.delta == 0.1);
    REQUIRE(cfg.grid_step == 0.05);
    REQUIRE(cfg.jobs == 1);
    REQUIRE(cfg.psm.c_max == 15.0);
    REQUIRE(cfg.psm.delta_c == 0.2);
    REQUIRE(cfg.chanvese.iterations == 1000);
    REQUIRE(cfg.post.closing_radius == 2);
    REQUIRE(cfg.hair.line_length == 9);
    REQUIRE(cfg.methods.size() == 5);  // every automatic method, no expert
    cfg.validate();
}

TEST_CASE("config parsing: comments, whitespace, overrides") {
    std::istringstream in(
        "# pipeline tuning\n"
        "\n"
        "max_pixels = 9000\n"
        "  psm.c_max=10\n"
        "methods = b_otsu , mam\n"
        "post.keep_largest = false\n"
        "jobs=2\n");
    const PipelineConfig cfg = parse_config(in);
    REQUIRE(cfg.max_pixels == 9000);
    REQUIRE(cfg.psm.c_max == 10.0);
    REQUIRE(cfg.methods == (std::vector<Method>{Method::b_otsu, Method::mam}));
    REQUIRE(cfg.post.keep_largest == false);
    REQUIRE(cfg.jobs == 2);
    REQUIRE(cfg.delta == 0.1);  // untouched keys keep their defaults
}

TEST_CASE("config parsing errors carry the line number") {
    std::istringstream bad_key("max_pixels=9000\npsm.cmax = 10\n");
    REQUIRE_THROWS_WITH(parse_config(bad_key),
                        Catch::Matchers::ContainsSubstring("config line 2") &&
                            Catch::Matchers::ContainsSubstring("unknown config key 'psm.cmax'"));

    std::istringstream bad_num("jobs = many\n");
    REQUIRE_THROWS_WITH(parse_config(bad_num),
                        Catch::Matchers::ContainsSubstring("expected a number"));

    std::istringstream no_eq("jobs\n");
    REQUIRE_THROWS_WITH(parse_config(no_eq),
                        Catch::Matchers::ContainsSubstring("expected key=value"));

    std::istringstream bad_range("grid_step = 0\n");
    REQUIRE_THROWS_AS(parse_config(bad_range), std::invalid_argument);

    std::istringstream bad_bool("post.keep_largest = maybe\n");
    REQUIRE_THROWS_WITH(parse_config(bad_bool),
                        Catch::Matchers::ContainsSubstring("expected a boolean"));

    REQUIRE_THROWS_AS(load_config("/nonexistent/lesionseg.conf"), std::runtime_error);
}

TEST_CASE("method list parsing") {
    REQUIRE(parse_method_list("canny,b_otsu,chan_vese,psm,mam,expert").size() == 6);
    REQUIRE(parse_method_list(" psm , mam ") == (std::vector<Method>{Method::psm, Method::mam}));
    REQUIRE_THROWS_AS(parse_method_list("psm,typo"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_method_list(" , "), std::invalid_argument);
}

TEST_CASE("kfold assignment is stratified round-robin") {
    using L = Label;
    const std::vector<L> labels = {L::benign, L::malignant, L::benign, L::benign,
                                   L::malignant, L::benign, L::malignant, L::benign};
    const std::vector<int> fold = kfold_assignment(labels, 3);
    REQUIRE(fold == (std::vector<int>{0, 0, 1, 2, 1, 0, 2, 1}));
    // per class the fold sizes differ by at most one
    for (L cls : {L::benign, L::malignant}) {
        int count[3] = {0, 0, 0};
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) count[fold[i]]++;
        const int lo = std::min({count[0], count[1], count[2]});
        const int hi = std::max({count[0], count[1], count[2]});
        REQUIRE(hi - lo <= 1);
    }
}

TEST_CASE("phantom corpus round-trips through the scanner") {
    TempDir dir;
    const Corpus corpus = phantom_corpus(dir.path, "separable");
    REQUIRE(corpus.entries.size() == 20);
    REQUIRE(corpus.warnings.empty());
    int labelled = 0, masked = 0;
    for (const auto& e : corpus.entries) {
        if (e.label) ++labelled;
        if (e.mask_path) ++masked;
    }
    REQUIRE(labelled == 20);
    REQUIRE(masked == 20);

    std::ostringstream log;
    REQUIRE_THROWS_WITH(cmd_phantom(dir.path, "imaginary", 1, log),
                        Catch::Matchers::ContainsSubstring("unknown phantom suite"));
}

TEST_CASE("segment: ok rows, expert agreement, byte-stable output") {
    TempDir dir;
    Corpus corpus = phantom_corpus(dir.path / "data", "separable");
    corpus.entries.resize(6);  // benign0..5 is plenty for the plumbing checks

    PipelineConfig cfg;
    cfg.methods = {Method::b_otsu, Method::expert};

    std::ostringstream log;
    REQUIRE(cmd_segment(cfg, corpus, dir.path / "run1", log) == kExitOk);

    const CsvTable table = read_csv((dir.path / "run1" / "segments.csv").string());
    REQUIRE(table.header == (std::vector<std::string>{"id", "method", "area", "chosen_c",
                                                      "mam_winner", "jaccard_vs_expert",
                                                      "status"}));
    REQUIRE(table.rows.size() == 12);
    for (const auto& row : table.rows) {
        CAPTURE(row[0], row[1]);
        REQUIRE(row[6] == "ok");
        REQUIRE(!row[2].empty());
        const double j = std::stod(row[5]);
        if (row[1] == "expert") REQUIRE(j == 1.0);
        else REQUIRE(j > 0.8);
        REQUIRE(fs::exists(dir.path / "run1" / "masks" / (row[0] + "_" + row[1] + ".png")));
        REQUIRE(fs::exists(dir.path / "run1" / "overlays" / (row[0] + "_" + row[1] + ".png")));
    }
    REQUIRE(read_csv((dir.path / "run1" / "timings.csv").string()).rows.size() == 12);

    // a second run produces byte-identical segments.csv (timings are separate)
    std::ostringstream log2;
    REQUIRE(cmd_segment(cfg, corpus, dir.path / "run2", log2) == kExitOk);
    REQUIRE(slurp(dir.path / "run1" / "segments.csv") ==
            slurp(dir.path / "run2" / "segments.csv"));

    // the worker pool must not change the output either
    PipelineConfig cfg4 = cfg;
    cfg4.jobs = 4;
    std::ostringstream log3;
    REQUIRE(cmd_segment(cfg4, corpus, dir.path / "run3", log3) == kExitOk);
    REQUIRE(slurp(dir.path / "run1" / "segments.csv") ==
            slurp(dir.path / "run3" / "segments.csv"));
}

TEST_CASE("segment: a broken image degrades to an error row") {
    TempDir dir;
    const RasterImage img(32, 32, Rgb{60, 40, 30});
    write_image(dir.path / "good.png", img);
    write_text(dir.path / "bad.png", "this is not a png");
    Corpus corpus = load_corpus(dir.path);
    REQUIRE(corpus.entries.size() == 2);

    PipelineConfig cfg;
    cfg.methods = {Method::b_otsu};
    std::ostringstream log;
    REQUIRE(cmd_segment(cfg, corpus, dir.path / "out", log) == kExitPartial);

    const CsvTable table = read_csv((dir.path / "out" / "segments.csv").string());
    REQUIRE(table.rows.size() == 2);
    REQUIRE(table.rows[0][0] == "bad");
    REQUIRE(table.rows[0][6].rfind("error:", 0) == 0);
    // the good image is a uniform colour: B-Otsu cannot split it, which is an
    // error row of its own rather than a crash
    REQUIRE(table.rows[1][0] == "good");
    REQUIRE(table.rows[1][6].rfind("error:", 0) == 0);
}

TEST_CASE("compare: verdict counting from a hand-built table") {
    TempDir dir;
    write_text(dir.path / "segments.csv",
               "id,method,area,chosen_c,mam_winner,jaccard_vs_expert,status\n"
               "p1,psm,10,0.0,,0.800000,ok\n"
               "p1,b_otsu,10,,,0.400000,ok\n"
               "p2,psm,10,0.0,,0.500000,ok\n"
               "p2,b_otsu,10,,,0.500000,ok\n"
               "p3,psm,10,0.0,,0.200000,ok\n"
               "p3,b_otsu,10,,,0.600000,ok\n"
               "p4,psm,10,0.0,,,ok\n"
               "p5,psm,10,0.0,,0.900000,error: boom\n");

    std::ostringstream log;
    REQUIRE(cmd_compare(dir.path / "segments.csv", Method::psm, Method::b_otsu, 0.1,
                        dir.path / "cmp", log) == kExitOk);

    const CsvTable pairwise = read_csv((dir.path / "cmp" / "pairwise.csv").string());
    REQUIRE(pairwise.header == (std::vector<std::string>{"id", "j1", "j2", "j12", "verdict"}));
    REQUIRE(pairwise.rows.size() == 3);  // p4 lacks a b_otsu value, p5 errored
    REQUIRE(pairwise.rows[0][0] == "p1");
    REQUIRE(pairwise.rows[0][4] == "better");
    REQUIRE(pairwise.rows[1][4] == "similar");
    REQUIRE(pairwise.rows[2][4] == "worse");
    REQUIRE(log.str().find("psm") != std::string::npos);

    // comparing a method against itself pairs each row with itself
    std::ostringstream log2;
    REQUIRE(cmd_compare(dir.path / "segments.csv", Method::psm, Method::psm, 0.1,
                        dir.path / "self", log2) == kExitOk);
    const CsvTable self = read_csv((dir.path / "self" / "pairwise.csv").string());
    REQUIRE(self.rows.size() == 3);
    for (const auto& row : self.rows) REQUIRE(row[4] == "similar");

    // no overlapping ids at all
    std::ostringstream log3;
    REQUIRE_THROWS_WITH(cmd_compare(dir.path / "segments.csv", Method::canny, Method::mam, 0.1,
                                    dir.path / "none", log3),
                        Catch::Matchers::ContainsSubstring("no image has a Jaccard value"));

    write_text(dir.path / "odd.csv", "id,method\nx,psm\n");
    REQUIRE_THROWS_WITH(cmd_compare(dir.path / "odd.csv", Method::psm, Method::b_otsu, 0.1,
                                    dir.path / "hdr", log3),
                        Catch::Matchers::ContainsSubstring("unexpected header"));
}

TEST_CASE("classify: perfect split on the separable corpus") {
    TempDir dir;
    const Corpus corpus = phantom_corpus(dir.path / "data", "separable");
    PipelineConfig cfg;

    const ClassifyOutcome resub = run_classify(cfg, corpus, Method::b_otsu);
    REQUIRE(resub.skipped == 0);
    REQUIRE(resub.report.accuracy == 1.0);
    REQUIRE(resub.report.sensitivity == 1.0);
    REQUIRE(resub.report.specificity == 1.0);

    const ClassifyOutcome folded = run_classify(cfg, corpus, Method::b_otsu, 4);
    REQUIRE(folded.report.accuracy == 1.0);

    REQUIRE_THROWS_WITH(run_classify(cfg, corpus, Method::b_otsu, 21),
                        Catch::Matchers::ContainsSubstring("more folds"));

    Corpus unlabelled = corpus;
    unlabelled.entries[3].label.reset();
    REQUIRE_THROWS_WITH(run_classify(cfg, unlabelled, Method::b_otsu),
                        Catch::Matchers::ContainsSubstring("no label"));

    // the command wrapper persists a loadable model
    std::ostringstream log;
    REQUIRE(cmd_classify(cfg, corpus, Method::b_otsu, 0, dir.path / "clf", log) == kExitOk);
    REQUIRE(log.str().find("resubstitution") != std::string::npos);
    const TrainedClassifier model =
        load_classifier((dir.path / "clf" / "model_b_otsu.txt").string());
    REQUIRE(model.w_a + model.w_b + model.w_c == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("features command writes one row per image") {
    TempDir dir;
    Corpus corpus = phantom_corpus(dir.path / "data", "separable");
    corpus.entries.resize(4);

    PipelineConfig cfg;
    std::ostringstream log;
    REQUIRE(cmd_features(cfg, corpus, Method::b_otsu, dir.path / "feat", log) == kExitOk);
    const CsvTable table = read_csv((dir.path / "feat" / "features.csv").string());
    REQUIRE(table.header == (std::vector<std::string>{"id", "label", "a", "b", "c", "d_px",
                                                      "d_mm", "status"}));
    REQUIRE(table.rows.size() == 4);
    for (const auto& row : table.rows) {
        REQUIRE(row[7] == "ok");
        REQUIRE(row[1] == "benign");  // the first four separable phantoms
        REQUIRE(std::stod(row[2]) >= 0.0);
        REQUIRE(std::stod(row[5]) > 0.0);
    }
}
