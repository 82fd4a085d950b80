#pragma once

#include <cstdint>
#include <vector>

#include "mipr/nn.hpp"

namespace mipr {

// Per-weight keep/drop masks, one row-major block per layer. Biases are never
// masked. Unlike MaskSet this encodes irregular sparsity: it cannot be
// squeezed into a smaller dense network.
struct WeightMaskSet {
    std::vector<std::vector<std::uint8_t>> masks;
    double achieved_sparsity = 0.0;

    void validate_for(const Network& net) const;
    std::size_t zero_count() const;
};

// Zero out the `sparsity` fraction of weights with the smallest |w|.
// Global threshold across all weight matrices by default; `per_layer` applies
// the fraction within each matrix instead. Ties break toward the lower flat
// index (layer-major). Biases are untouched.
WeightMaskSet magnitude_prune(const Network& net, double sparsity, bool per_layer = false);

struct MovementScores {
    std::vector<std::vector<double>> scores;  // same shapes as the weights
    std::size_t steps = 0;
};

struct MovementPruneResult {
    WeightMaskSet masks;
    MovementScores scores;
};

// Movement pruning, hard variant: train a copy of the network for `steps`
// while accumulating S -= grad * w before each update, then keep the
// top-(1-sparsity) weights by S. The input network is not modified.
MovementPruneResult movement_prune(const Network& net, const Dataset& data, double sparsity,
                                   std::size_t steps, const TrainConfig& cfg);

// Network with W * M applied entry-wise (masked entries set to exactly 0).
Network apply_weight_masks(const Network& net, const WeightMaskSet& masks);

struct MaskedEval {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Dense evaluation of the masked network: bitwise equal to evaluating a
// network whose weights were replaced by W * M.
MaskedEval masked_eval(const Network& net, const WeightMaskSet& masks, const Dataset& data);

// Cost model under weight masks: each matmul costs 2 * nnz; bias, activation
// and residual terms are unchanged (the layer widths stay the same).
FlopCount count_flops_masked(const Network& net, const WeightMaskSet& masks);

std::size_t total_weight_count(const Network& net);

}  // namespace mipr
