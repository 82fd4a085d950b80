#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mipr/experiment.hpp"

using namespace mipr;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mipr_experiment_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

ExperimentConfig tiny_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.task.generator = "gaussian-blobs";
    cfg.task.dims = 4;
    cfg.task.noise = 0.3;
    cfg.task.train_samples = 150;
    cfg.task.dev_samples = 30;
    cfg.task.test_samples = 60;
    cfg.hidden = {6};
    cfg.activation = Activation::Tanh;
    cfg.train.steps = 80;
    cfg.train.batch_size = 32;
    cfg.train.lr = 0.02;
    cfg.methods = {"mi", "random", "magnitude"};
    cfg.keeps = {0.5};
    cfg.seeds = {1};
    cfg.timing.trials = 1;
    cfg.timing.warmups = 0;
    cfg.timing.min_trial_us = 1.0;
    cfg.out_dir = out_dir;
    return cfg;
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("experiment configs round-trip through json with a stable hash") {
    ExperimentConfig cfg = tiny_config("runs/x");
    cfg.selector.mode = SelectorMode::Mrmr;
    cfg.selector.alpha = 0.4;
    cfg.selector.beta = 0.1;
    cfg.schedule = ScheduleShape::Pyramid;
    cfg.iterations = 2;
    cfg.seeds = {3, 4};

    const std::string js = experiment_config_to_json(cfg);
    const ExperimentConfig back = experiment_config_from_json(js);
    CHECK(back.task.generator == cfg.task.generator);
    CHECK(back.task.dims == cfg.task.dims);
    CHECK(back.hidden == cfg.hidden);
    CHECK(back.activation == cfg.activation);
    CHECK(back.methods == cfg.methods);
    CHECK(back.keeps == cfg.keeps);
    CHECK(back.schedule == cfg.schedule);
    CHECK(back.selector.mode == cfg.selector.mode);
    CHECK(back.selector.alpha == cfg.selector.alpha);
    CHECK(back.selector.beta == cfg.selector.beta);
    CHECK(back.iterations == cfg.iterations);
    CHECK(back.seeds == cfg.seeds);
    CHECK(back.train.steps == cfg.train.steps);
    CHECK(back.train.lr == cfg.train.lr);
    CHECK(back.out_dir == cfg.out_dir);

    CHECK(config_hash(back) == config_hash(cfg));
    ExperimentConfig other = cfg;
    other.keeps = {0.25};
    CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("partial configs fall back to defaults; invalid ones are rejected") {
    const ExperimentConfig cfg = experiment_config_from_json(
        R"({"task":{"generator":"xor-like","dims":3},"model":{"hidden":[5]}})");
    CHECK(cfg.task.generator == "xor-like");
    CHECK(cfg.methods == std::vector<std::string>{"mi"});
    CHECK(cfg.keeps == std::vector<double>{0.5});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1});

    CHECK_THROWS_AS(experiment_config_from_json("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"prune":{"methods":["telepathy"]}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"prune":{"keeps":[]}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"prune":{"keeps":[1.5]}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"seeds":[]})"), std::invalid_argument);
}

TEST_CASE("a tiny experiment produces one row per cell plus reports on disk") {
    TempDir tmp;
    const ExperimentConfig cfg = tiny_config(tmp.sub("run"));
    const std::vector<ReportRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 3);  // 3 methods x 1 keep x 1 seed

    const std::uint64_t hash = config_hash(cfg);
    for (const ReportRow& r : rows) {
        CHECK(r.cfg_hash == hash);
        CHECK(r.keep == 0.5);
        CHECK(r.seed == 1);
        CHECK(r.dense_accuracy >= 0.0);
        CHECK(r.dense_accuracy <= 1.0);
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
        CHECK(r.flops > 0.0);
        CHECK(r.flops < r.flops_dense);
        CHECK(r.params < r.params_dense);
        CHECK(r.time_dense_us > 0.0);
        CHECK(r.time_pruned_us > 0.0);
        CHECK(r.retrained_accuracy < 0.0);  // retraining disabled
    }
    CHECK(rows[0].method == "mi");
    CHECK(rows[1].method == "random");
    CHECK(rows[2].method == "magnitude");

    // Artifacts: report.jsonl (one line per row), summary.csv (header + cells),
    // cached dense model and stats, and an mi manifest.
    CHECK(count_lines(tmp.sub("run") + "/report.jsonl") == 3);
    CHECK(count_lines(tmp.sub("run") + "/summary.csv") == 4);
    const std::string report = slurp(tmp.sub("run") + "/report.jsonl");
    CHECK(report.find("\"config_hash\"") != std::string::npos);
    CHECK(report.find("\"retrained_accuracy\":null") != std::string::npos);
    CHECK(report.find("\"timing_methodology\"") != std::string::npos);

    bool saw_model = false, saw_stats = false;
    for (const auto& e : std::filesystem::directory_iterator(tmp.sub("run") + "/cache")) {
        const std::string name = e.path().filename().string();
        if (name.rfind("dense_s1_", 0) == 0) saw_model = true;
        if (name.rfind("stats_s1_", 0) == 0) saw_stats = true;
    }
    CHECK(saw_model);
    CHECK(saw_stats);
    bool saw_manifest = false;
    for (const auto& e : std::filesystem::directory_iterator(tmp.sub("run") + "/manifests"))
        if (e.path().filename().string().rfind("mi_", 0) == 0) saw_manifest = true;
    CHECK(saw_manifest);

    // A second run hits the caches and reproduces every non-timing field.
    const std::vector<ReportRow> again = run_experiment(cfg);
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].method == rows[i].method);
        CHECK(again[i].accuracy == rows[i].accuracy);
        CHECK(again[i].dense_accuracy == rows[i].dense_accuracy);
        CHECK(again[i].flops == rows[i].flops);
        CHECK(again[i].params == rows[i].params);
    }
}

TEST_CASE("retraining fills the retrained accuracy field") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_config(tmp.sub("run_rt"));
    cfg.methods = {"mi"};
    cfg.retrain = true;
    cfg.retrain_cfg.steps = 40;
    cfg.retrain_cfg.batch_size = 32;
    cfg.retrain_cfg.lr = 0.02;
    const std::vector<ReportRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].retrained_accuracy >= 0.0);
    CHECK(rows[0].retrained_accuracy <= 1.0);
    const std::string report = slurp(tmp.sub("run_rt") + "/report.jsonl");
    CHECK(report.find("\"retrained_accuracy\":null") == std::string::npos);
}

TEST_CASE("direction summaries aggregate outcomes per check") {
    const std::vector<DirectionOutcome> outcomes = {
        {"mi_vs_random", 1, 0.9, 0.5, true},
        {"mi_vs_random", 2, 0.7, 0.8, false},
        {"retrain_gain", 1, 0.6, 0.4, true},
    };
    const auto sums = summarize_directions(outcomes);
    REQUIRE(sums.size() == 2);
    CHECK(sums[0].check == "mi_vs_random");
    CHECK(sums[0].passes == 1);
    CHECK(sums[0].total == 2);
    CHECK(sums[0].mean_lhs == doctest::Approx(0.8));
    CHECK(sums[0].mean_rhs == doctest::Approx(0.65));
    CHECK(sums[1].check == "retrain_gain");
    CHECK(sums[1].passes == 1);
    CHECK(sums[1].total == 1);
}

TEST_CASE("summary csv mixes cell, direction, and summary rows") {
    TempDir tmp;
    const std::vector<ReportRow> rows = {{"mi", 0.5, 1, 0.9, 0.8, -1.0, 100, 50, 200, 80, 1.0,
                                          0.5, 0xabcdULL}};
    const std::vector<DirectionOutcome> outcomes = {
        {"mi_vs_random", 1, 0.9, 0.5, true},
        {"mi_vs_random", 2, 0.7, 0.8, false},
    };
    const std::string path = tmp.sub("summary.csv");
    write_summary_csv(rows, outcomes, path);
    const std::string text = slurp(path);
    CHECK(text.find("row_type,") == 0);
    CHECK(text.find("\ncell,mi,") != std::string::npos);
    CHECK(text.find("\ndirection,mi_vs_random,") != std::string::npos);
    CHECK(text.find("\ndirection_summary,mi_vs_random,") != std::string::npos);
    CHECK(text.find("1/2") != std::string::npos);
    CHECK(count_lines(path) == 1 + 1 + 2 + 1);  // header + cell + directions + summary
}
