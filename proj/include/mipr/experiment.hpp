#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mipr/bench.hpp"
#include "mipr/datagen.hpp"
#include "mipr/nn.hpp"
#include "mipr/pruner.hpp"
#include "mipr/selector.hpp"

namespace mipr {

// One experiment = task x model x {methods} x {keep ratios} x {seeds}.
// Methods: "mi" (layer-wise structured), "random" (structured control),
// "magnitude", "movement" (weight baselines; keep = fraction of weights kept).
struct ExperimentConfig {
    GenSpec task;
    std::string data_dir;  // when nonempty, load CSVs from here instead of generating

    std::vector<std::size_t> hidden = {16, 8};
    Activation activation = Activation::Relu;
    std::vector<bool> residual;  // optional, per layer

    TrainConfig train;
    std::vector<std::string> methods = {"mi"};
    std::vector<double> keeps = {0.5};
    ScheduleShape schedule = ScheduleShape::Uniform;
    SelectorConfig selector;
    std::size_t iterations = 1;      // > 1 applies to the "mi" method
    bool retrain = false;            // also report accuracy after retraining
    TrainConfig retrain_cfg;
    std::vector<std::uint64_t> seeds = {1};

    double ridge_scale = 1e-6;
    std::size_t sample_cap = 100000;
    TimingOptions timing;
    std::string out_dir = "runs/default";
};

ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical (sorted-key) JSON dump; config_hash is FNV-1a 64 over it, so a
// config plus the code version pins a run.
std::string experiment_config_to_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct ReportRow {
    std::string method;
    double keep = 1.0;
    std::uint64_t seed = 0;
    double dense_accuracy = 0.0;
    double accuracy = 0.0;             // after pruning, before any retraining
    double retrained_accuracy = -1.0;  // < 0 when retraining was not run
    double flops = 0.0;                // per-sample forward cost after pruning
    double flops_dense = 0.0;
    double params = 0.0;               // surviving parameter count
    double params_dense = 0.0;
    double time_dense_us = -1.0;       // < 0 when timing was skipped
    double time_pruned_us = -1.0;
    std::uint64_t cfg_hash = 0;
};

// Runs every (method, keep, seed) cell. Trained dense models and activation
// statistics are cached under out_dir keyed by the config hash, so re-running
// a finished or interrupted experiment reuses them. Every non-timing field is
// deterministic for a fixed config.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

// One JSON object per row. Appends nothing else; rewritten atomically on each
// full run.
void write_report_jsonl(const std::vector<ReportRow>& rows, const TimingOptions& timing,
                        const std::string& path);

struct DirectionOutcome {
    std::string check;  // mi_vs_random | iterative_vs_oneshot | retrain_gain | schedule_shape
    std::uint64_t seed = 0;
    double lhs = 0.0;  // expected >= rhs
    double rhs = 0.0;
    bool pass = false;
};

struct DirectionSummary {
    std::string check;
    double mean_lhs = 0.0;
    double mean_rhs = 0.0;
    std::size_t passes = 0;
    std::size_t total = 0;
};

// Qualitative direction checks on a planted-subspace task, one trained model
// per seed shared across all four checks.  Head-to-head comparisons give both
// arms an identical short retrain budget so neither saturates at the ceiling:
//   mi_vs_random         mi >= random accuracy at keep 0.3
//   iterative_vs_oneshot two-step iterative >= one-shot at keep 0.25
//   retrain_gain         retrained >= un-retrained accuracy at keep 0.4
//   schedule_shape       inverted pyramid >= pyramid at overall keep 0.2
std::vector<DirectionOutcome> run_direction_checks(const std::vector<std::uint64_t>& seeds);

std::vector<DirectionSummary> summarize_directions(const std::vector<DirectionOutcome>& outcomes);

// summary.csv rows: row_type=cell for experiment cells, row_type=direction for
// per-seed direction outcomes, row_type=direction_summary for their means.
void write_summary_csv(const std::vector<ReportRow>& rows,
                       const std::vector<DirectionOutcome>& outcomes,
                       const std::string& path);

}  // namespace mipr
