#include "mipr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace mipr {

void WeightMaskSet::validate_for(const Network& net) const {
    if (masks.size() != net.depth())
        throw std::invalid_argument("weight masks: layer count does not match the network");
    for (std::size_t l = 0; l < masks.size(); ++l) {
        if (masks[l].size() != net.layers[l].weight.size())
            throw std::invalid_argument("weight masks: layer " + std::to_string(l) +
                                        " shape mismatch");
        for (std::uint8_t v : masks[l])
            if (v > 1) throw std::invalid_argument("weight masks: entries must be 0 or 1");
    }
}

std::size_t WeightMaskSet::zero_count() const {
    std::size_t z = 0;
    for (const auto& m : masks)
        for (std::uint8_t v : m)
            if (!v) ++z;
    return z;
}

std::size_t total_weight_count(const Network& net) {
    std::size_t n = 0;
    for (const auto& l : net.layers) n += l.weight.size();
    return n;
}

namespace {

WeightMaskSet all_ones_weight_masks(const Network& net) {
    WeightMaskSet wm;
    for (const auto& l : net.layers) wm.masks.emplace_back(l.weight.size(), 1);
    return wm;
}

std::size_t zeroed_for(double sparsity, std::size_t n) {
    return static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(n)));
}

}  // namespace

WeightMaskSet magnitude_prune(const Network& net, double sparsity, bool per_layer) {
    net.validate();
    if (sparsity < 0.0 || sparsity >= 1.0)
        throw std::invalid_argument("magnitude_prune: sparsity must be in [0, 1)");

    WeightMaskSet wm = all_ones_weight_masks(net);
    // (|w|, layer, flat index); sorting ascending puts the entries to zero
    // first, with ties broken toward the lower index.
    using Entry = std::tuple<double, std::size_t, std::size_t>;

    if (per_layer) {
        for (std::size_t l = 0; l < net.depth(); ++l) {
            const auto& w = net.layers[l].weight.data;
            std::vector<Entry> entries;
            entries.reserve(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) entries.emplace_back(std::abs(w[i]), l, i);
            std::sort(entries.begin(), entries.end());
            const std::size_t z = zeroed_for(sparsity, w.size());
            for (std::size_t i = 0; i < z; ++i) wm.masks[l][std::get<2>(entries[i])] = 0;
        }
    } else {
        std::vector<Entry> entries;
        entries.reserve(total_weight_count(net));
        for (std::size_t l = 0; l < net.depth(); ++l) {
            const auto& w = net.layers[l].weight.data;
            for (std::size_t i = 0; i < w.size(); ++i) entries.emplace_back(std::abs(w[i]), l, i);
        }
        std::sort(entries.begin(), entries.end());
        const std::size_t z = zeroed_for(sparsity, entries.size());
        for (std::size_t i = 0; i < z; ++i)
            wm.masks[std::get<1>(entries[i])][std::get<2>(entries[i])] = 0;
    }
    wm.achieved_sparsity =
        static_cast<double>(wm.zero_count()) / static_cast<double>(total_weight_count(net));
    return wm;
}

MovementPruneResult movement_prune(const Network& net, const Dataset& data, double sparsity,
                                   std::size_t steps, const TrainConfig& cfg) {
    net.validate();
    if (sparsity < 0.0 || sparsity >= 1.0)
        throw std::invalid_argument("movement_prune: sparsity must be in [0, 1)");
    if (steps == 0) throw std::invalid_argument("movement_prune: need at least one step");
    if (data.size() == 0) throw std::invalid_argument("movement_prune: empty dataset");

    Network work = net;
    TrainConfig tc = cfg;
    tc.steps = steps;

    MovementScores ms;
    ms.steps = steps;
    for (const auto& l : work.layers) ms.scores.emplace_back(l.weight.size(), 0.0);

    Optimizer opt(work, tc);
    Batcher batcher(data.size(), tc.batch_size, tc.seed, tc.shuffle);
    for (std::size_t step = 0; step < steps; ++step) {
        const Batch b = gather_batch(data, batcher.next());
        const ForwardResult fwd = forward(work, b.inputs);
        const double loss = softmax_cross_entropy(fwd.logits(), b.labels);
        if (!std::isfinite(loss))
            throw TrainingDiverged(step,
                                   "movement_prune: non-finite loss at step " + std::to_string(step));
        const Gradients g = backward(work, b, fwd);
        // Movement score: S -= grad * w, accumulated against the weights as
        // they stand before this update.
        for (std::size_t l = 0; l < work.depth(); ++l) {
            const auto& w = work.layers[l].weight.data;
            const auto& gw = g.dweight[l].data;
            auto& s = ms.scores[l];
            for (std::size_t i = 0; i < w.size(); ++i) s[i] -= gw[i] * w[i];
        }
        opt.step(work, g);
        for (std::size_t l = 0; l < work.depth(); ++l)
            if (!all_finite(work.layers[l].weight) || !all_finite(work.layers[l].bias))
                throw TrainingDiverged(step, "movement_prune: non-finite parameter after step " +
                                                 std::to_string(step));
    }

    // Hard selection: zero the lowest-scoring `sparsity` fraction globally.
    using Entry = std::tuple<double, std::size_t, std::size_t>;
    std::vector<Entry> entries;
    entries.reserve(total_weight_count(net));
    for (std::size_t l = 0; l < net.depth(); ++l)
        for (std::size_t i = 0; i < ms.scores[l].size(); ++i)
            entries.emplace_back(ms.scores[l][i], l, i);
    std::sort(entries.begin(), entries.end());

    MovementPruneResult res;
    res.masks = all_ones_weight_masks(net);
    const std::size_t z = zeroed_for(sparsity, entries.size());
    for (std::size_t i = 0; i < z; ++i)
        res.masks.masks[std::get<1>(entries[i])][std::get<2>(entries[i])] = 0;
    res.masks.achieved_sparsity =
        static_cast<double>(res.masks.zero_count()) / static_cast<double>(total_weight_count(net));
    res.scores = std::move(ms);
    return res;
}

Network apply_weight_masks(const Network& net, const WeightMaskSet& masks) {
    masks.validate_for(net);
    Network out = net;
    for (std::size_t l = 0; l < out.depth(); ++l) {
        auto& w = out.layers[l].weight.data;
        const auto& m = masks.masks[l];
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!m[i]) w[i] = 0.0;
    }
    return out;
}

MaskedEval masked_eval(const Network& net, const WeightMaskSet& masks, const Dataset& data) {
    const Network masked = apply_weight_masks(net, masks);
    const EvalResult ev = evaluate(masked, data);
    MaskedEval out;
    out.accuracy = ev.accuracy;
    out.mean_loss = ev.mean_loss;
    return out;
}

FlopCount count_flops_masked(const Network& net, const WeightMaskSet& masks) {
    masks.validate_for(net);
    FlopCount fc;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const LayerSpec& layer = net.layers[l];
        std::size_t nnz = 0;
        for (std::uint8_t v : masks.masks[l]) nnz += v;
        fc.matmul += 2.0 * static_cast<double>(nnz);
        fc.bias += static_cast<double>(layer.out_dim());
        fc.activation += static_cast<double>(layer.out_dim());
        if (layer.residual) fc.residual += static_cast<double>(layer.out_dim());
    }
    return fc;
}

}  // namespace mipr
