#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mipr/nn.hpp"
#include "mipr/selector.hpp"
#include "mipr/stats.hpp"

namespace mipr {

enum class ScheduleShape { Uniform, Pyramid, InvertedPyramid, Custom };

const char* to_string(ScheduleShape s);
ScheduleShape schedule_shape_from_string(const std::string& s);

// Per-level keep ratios, bottom (input level) first, one entry per prunable
// level. Non-uniform shapes form an arithmetic sequence whose mean equals the
// overall keep ratio: a pyramid keeps more at the bottom, an inverted pyramid
// keeps more at the top.
struct SparsitySchedule {
    ScheduleShape shape = ScheduleShape::Uniform;
    double overall_keep = 1.0;
    std::vector<double> keep;

    std::size_t depth() const { return keep.size(); }
};

// `bottom_keep`, when given, pins the sequence endpoint at the input level;
// it is rejected (with the nearest feasible value named) when the implied
// sequence leaves (0, 1]. Without it the endpoint offset defaults to
// min(overall/2, 1 - overall).
SparsitySchedule make_schedule(ScheduleShape shape, double overall_keep, std::size_t depth,
                               std::optional<double> bottom_keep = std::nullopt);

// Explicit per-level ratios (shape = Custom); each must lie in (0, 1].
SparsitySchedule custom_schedule(std::vector<double> keep);

// Keep-count for one level: round-half-up of ratio * dim, floored at 1.
std::size_t keep_count(double ratio, std::size_t dim);

// One per-level record of the top-down pass, in processing order (top first).
struct LevelTrace {
    std::size_t level = 0;
    std::size_t order = 0;            // 0 = processed first
    bool shared_with_upper = false;   // residual layer: mask copied, no selection
    std::size_t k = 0;
    Selection selection;              // empty when shared_with_upper
};

struct LayerwiseResult {
    MaskSet masks;
    std::vector<LevelTrace> traces;
};

// Top-down layer-wise selection: the logits level keeps everything; walking
// layers from the top, each lower level keeps the K_l dimensions selected
// against the surviving upper set. Residual layers share one mask across both
// ends (the upper mask is copied down, no selection runs).
LayerwiseResult layerwise_prune(const Network& net, const std::vector<CovarianceModel>& stats,
                                const SparsitySchedule& schedule, const SelectorConfig& cfg);

// Same pass with explicit per-level keep counts.
LayerwiseResult layerwise_prune_counts(const Network& net,
                                       const std::vector<CovarianceModel>& stats,
                                       const std::vector<std::size_t>& counts,
                                       const SelectorConfig& cfg);

// Structured random baseline: same schedule semantics (counts, residual
// sharing, logits exemption) with uniformly drawn kept sets.
MaskSet random_masks(const Network& net, const SparsitySchedule& schedule, std::uint64_t seed);

// Keep the network at its original size but reinitialize every parameter that
// touches at least one pruned dimension (weights uniform fan-in, biases zero)
// and train only those; the preserved->preserved block of each weight matrix
// and preserved biases stay bit-identical. Rejects all-ones masks. Forward
// passes during retraining are unmasked.
Network retrain_pruned(const Network& net, const MaskSet& masks, const Dataset& data,
                       const TrainConfig& cfg);

struct IterativePlan {
    std::size_t iterations = 1;
    std::vector<double> keep_ratios;  // strictly decreasing, ends at the target
    TrainConfig retrain;
};

// Interpolates keep ratios linearly from full width down to `target_keep`:
// r_i = 1 + (target - 1) * i / n for i = 1..n.
IterativePlan make_iterative_plan(std::size_t iterations, double target_keep,
                                  const TrainConfig& retrain);

struct IterationRecord {
    std::size_t iteration = 0;  // 1-based
    double keep_ratio = 0.0;
    // Kept sets in the coordinates of that iteration's input network, and the
    // same sets composed back to original network coordinates.
    std::vector<std::vector<std::size_t>> kept_current;
    std::vector<std::vector<std::size_t>> kept_original;
    double post_retrain_accuracy = 0.0;
    double post_retrain_loss = 0.0;
};

struct IterativeResult {
    Network net;              // final squeezed network
    MaskSet masks_original;   // composed masks in original coordinates
    std::vector<IterationRecord> history;
    bool diverged = false;
    std::string error;
};

// Iterative prune-retrain loop. Each iteration re-collects activation
// statistics on the current (already squeezed and retrained) network, prunes
// to the next ratio, squeezes, restricts the working dataset to the surviving
// input columns, and retrains. Per-level targets always derive from the
// original widths. Training divergence stops the loop and returns the partial
// history with `diverged` set instead of throwing.
IterativeResult iterative_prune(const Network& net, const Dataset& data,
                                const IterativePlan& plan, ScheduleShape shape,
                                const SelectorConfig& cfg, double ridge_scale = 1e-6,
                                std::size_t sample_cap = 100000, std::uint64_t seed = 0);

// JSON manifest of one layer-wise pass (schedule, per-level traces).
std::string prune_manifest_json(const Network& net, const SparsitySchedule& schedule,
                                const SelectorConfig& cfg, const LayerwiseResult& result);

}  // namespace mipr
