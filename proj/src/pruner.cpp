#include "mipr/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace mipr {

const char* to_string(ScheduleShape s) {
    switch (s) {
        case ScheduleShape::Uniform: return "uniform";
        case ScheduleShape::Pyramid: return "pyramid";
        case ScheduleShape::InvertedPyramid: return "inverted";
        case ScheduleShape::Custom: return "custom";
    }
    return "?";
}

ScheduleShape schedule_shape_from_string(const std::string& s) {
    if (s == "uniform") return ScheduleShape::Uniform;
    if (s == "pyramid") return ScheduleShape::Pyramid;
    if (s == "inverted") return ScheduleShape::InvertedPyramid;
    if (s == "custom") return ScheduleShape::Custom;
    throw std::invalid_argument("unknown schedule shape: " + s);
}

std::size_t keep_count(double ratio, std::size_t dim) {
    if (!(ratio > 0.0) || ratio > 1.0)
        throw std::invalid_argument("keep_count: ratio must be in (0, 1]");
    if (dim == 0) throw std::invalid_argument("keep_count: zero width");
    const double k = std::floor(ratio * static_cast<double>(dim) + 0.5);
    return std::min(dim, std::max<std::size_t>(1, static_cast<std::size_t>(k)));
}

SparsitySchedule make_schedule(ScheduleShape shape, double overall_keep, std::size_t depth,
                               std::optional<double> bottom_keep) {
    if (!(overall_keep > 0.0) || overall_keep > 1.0)
        throw std::invalid_argument("schedule: overall keep must be in (0, 1]");
    if (depth == 0) throw std::invalid_argument("schedule: depth must be positive");
    if (shape == ScheduleShape::Custom)
        throw std::invalid_argument("schedule: use custom_schedule for explicit ratios");

    SparsitySchedule s;
    s.shape = shape;
    s.overall_keep = overall_keep;

    if (depth == 1 || shape == ScheduleShape::Uniform) {
        if (bottom_keep && std::abs(*bottom_keep - overall_keep) > 1e-12)
            throw std::invalid_argument(
                "schedule: bottom keep must equal the overall keep here; nearest feasible is " +
                std::to_string(overall_keep));
        s.keep.assign(depth, overall_keep);
        return s;
    }

    const double delta = std::min(overall_keep / 2.0, 1.0 - overall_keep);
    double bottom = shape == ScheduleShape::Pyramid ? overall_keep + delta : overall_keep - delta;
    if (bottom_keep) bottom = *bottom_keep;
    const double top = 2.0 * overall_keep - bottom;
    if (!(bottom > 0.0) || bottom > 1.0 || !(top > 0.0) || top > 1.0) {
        // Feasible endpoints must keep both ends of the sequence inside (0, 1].
        const double lo = std::max(1e-6, 2.0 * overall_keep - 1.0);
        const double hi = std::min(1.0, 2.0 * overall_keep - 1e-6);
        const double nearest = std::min(hi, std::max(lo, bottom));
        throw std::invalid_argument("schedule: bottom keep " + std::to_string(bottom) +
                                    " is infeasible for overall " + std::to_string(overall_keep) +
                                    "; nearest feasible is " + std::to_string(nearest));
    }
    const bool grows = shape == ScheduleShape::InvertedPyramid;
    if ((grows && bottom > overall_keep) || (!grows && bottom < overall_keep))
        throw std::invalid_argument("schedule: bottom keep is on the wrong side of the overall "
                                    "keep for this shape");

    s.keep.resize(depth);
    for (std::size_t i = 0; i < depth; ++i)
        s.keep[i] = bottom + (top - bottom) * static_cast<double>(i) /
                                 static_cast<double>(depth - 1);
    return s;
}

SparsitySchedule custom_schedule(std::vector<double> keep) {
    if (keep.empty()) throw std::invalid_argument("schedule: ratios must be nonempty");
    double sum = 0.0;
    for (double r : keep) {
        if (!(r > 0.0) || r > 1.0)
            throw std::invalid_argument("schedule: every ratio must be in (0, 1]");
        sum += r;
    }
    SparsitySchedule s;
    s.shape = ScheduleShape::Custom;
    s.overall_keep = sum / static_cast<double>(keep.size());
    s.keep = std::move(keep);
    return s;
}

namespace {

void check_stats_match(const Network& net, const std::vector<CovarianceModel>& stats) {
    const auto dims = net.level_dims();
    if (stats.size() != net.depth())
        throw std::invalid_argument("prune: need statistics for every layer pair");
    for (std::size_t l = 0; l < net.depth(); ++l) {
        if (stats[l].split != dims[l] || stats[l].dim() != dims[l] + dims[l + 1])
            throw std::invalid_argument("prune: statistics for layer " + std::to_string(l) +
                                        " do not match the network widths");
    }
}

}  // namespace

LayerwiseResult layerwise_prune_counts(const Network& net,
                                       const std::vector<CovarianceModel>& stats,
                                       const std::vector<std::size_t>& counts,
                                       const SelectorConfig& cfg) {
    net.validate();
    check_stats_match(net, stats);
    const auto dims = net.level_dims();
    const std::size_t L = net.depth();
    if (counts.size() != L)
        throw std::invalid_argument("prune: need one keep count per prunable level");
    for (std::size_t l = 0; l < L; ++l)
        if (counts[l] == 0 || counts[l] > dims[l])
            throw std::invalid_argument("prune: keep count for level " + std::to_string(l) +
                                        " is out of range");

    std::vector<std::vector<std::size_t>> kept(L + 1);
    kept[L].resize(dims[L]);
    std::iota(kept[L].begin(), kept[L].end(), 0);

    LayerwiseResult res;
    std::size_t order = 0;
    for (std::size_t l = L; l-- > 0;) {
        LevelTrace tr;
        tr.level = l;
        tr.order = order++;
        if (net.layers[l].residual) {
            // Both ends of a residual layer read the same dimensions, so the
            // upper mask propagates down unchanged.
            kept[l] = kept[l + 1];
            tr.shared_with_upper = true;
            tr.k = kept[l].size();
        } else {
            IndexSet upper;
            upper.reserve(kept[l + 1].size());
            for (std::size_t j : kept[l + 1]) upper.push_back(stats[l].split + j);
            Selection sel = run_selector(stats[l], upper, counts[l], cfg);
            kept[l] = sel.chosen_sorted();
            tr.k = counts[l];
            tr.selection = std::move(sel);
        }
        res.traces.push_back(std::move(tr));
    }
    res.masks = MaskSet::from_kept(dims, std::move(kept));
    return res;
}

LayerwiseResult layerwise_prune(const Network& net, const std::vector<CovarianceModel>& stats,
                                const SparsitySchedule& schedule, const SelectorConfig& cfg) {
    if (schedule.depth() != net.depth())
        throw std::invalid_argument("prune: schedule depth does not match the network");
    const auto dims = net.level_dims();
    std::vector<std::size_t> counts(net.depth());
    for (std::size_t l = 0; l < net.depth(); ++l) counts[l] = keep_count(schedule.keep[l], dims[l]);
    return layerwise_prune_counts(net, stats, counts, cfg);
}

MaskSet random_masks(const Network& net, const SparsitySchedule& schedule, std::uint64_t seed) {
    net.validate();
    if (schedule.depth() != net.depth())
        throw std::invalid_argument("prune: schedule depth does not match the network");
    const auto dims = net.level_dims();
    const std::size_t L = net.depth();
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> kept(L + 1);
    kept[L].resize(dims[L]);
    std::iota(kept[L].begin(), kept[L].end(), 0);
    for (std::size_t l = L; l-- > 0;) {
        if (net.layers[l].residual) {
            kept[l] = kept[l + 1];
        } else {
            kept[l] = rng.sample_without_replacement(dims[l], keep_count(schedule.keep[l], dims[l]));
        }
    }
    return MaskSet::from_kept(dims, std::move(kept));
}

Network retrain_pruned(const Network& net, const MaskSet& masks, const Dataset& data,
                       const TrainConfig& cfg) {
    net.validate();
    masks.validate_for(net);
    if (masks.all_ones())
        throw std::invalid_argument("retrain_pruned: masks keep everything; nothing to retrain");

    Network out = net;
    Rng rng(cfg.seed);
    // Reinitialize in layer order, row-major within each matrix, so the result
    // is a pure function of the seed.
    for (std::size_t l = 0; l < out.depth(); ++l) {
        LayerSpec& layer = out.layers[l];
        const auto& in_mask = masks.masks[l];
        const auto& out_mask = masks.masks[l + 1];
        const std::size_t in = layer.in_dim(), outw = layer.out_dim();
        const double bound = std::sqrt(6.0 / static_cast<double>(in + outw));
        for (std::size_t r = 0; r < outw; ++r) {
            for (std::size_t c = 0; c < in; ++c)
                if (!(out_mask[r] && in_mask[c])) layer.weight(r, c) = rng.uniform(-bound, bound);
            if (!out_mask[r]) layer.bias[r] = 0.0;
        }
    }
    const FreezeSpec freeze = FreezeSpec::preserved_frozen(net, masks);
    train(out, data, cfg, &freeze);
    return out;
}

IterativePlan make_iterative_plan(std::size_t iterations, double target_keep,
                                  const TrainConfig& retrain) {
    if (iterations == 0) throw std::invalid_argument("iterative plan: need at least one iteration");
    if (!(target_keep > 0.0) || target_keep >= 1.0)
        throw std::invalid_argument("iterative plan: target keep must be in (0, 1)");
    IterativePlan plan;
    plan.iterations = iterations;
    plan.retrain = retrain;
    plan.keep_ratios.resize(iterations);
    for (std::size_t i = 1; i <= iterations; ++i)
        plan.keep_ratios[i - 1] = 1.0 + (target_keep - 1.0) * static_cast<double>(i) /
                                            static_cast<double>(iterations);
    return plan;
}

IterativeResult iterative_prune(const Network& net, const Dataset& data,
                                const IterativePlan& plan, ScheduleShape shape,
                                const SelectorConfig& cfg, double ridge_scale,
                                std::size_t sample_cap, std::uint64_t seed) {
    net.validate();
    if (plan.iterations == 0 || plan.keep_ratios.size() != plan.iterations)
        throw std::invalid_argument("iterative prune: plan needs one keep ratio per iteration");
    for (std::size_t i = 0; i < plan.keep_ratios.size(); ++i) {
        const double r = plan.keep_ratios[i];
        if (!(r > 0.0) || r >= 1.0)
            throw std::invalid_argument("iterative prune: keep ratios must be in (0, 1)");
        if (i > 0 && r >= plan.keep_ratios[i - 1])
            throw std::invalid_argument("iterative prune: keep ratios must be strictly decreasing");
    }

    const auto orig_dims = net.level_dims();
    const std::size_t L = net.depth();

    IterativeResult result;
    result.net = net;
    Dataset working = data;

    // maps[l][j] = original index of the current network's dimension j.
    std::vector<std::vector<std::size_t>> maps(L + 1);
    for (std::size_t l = 0; l <= L; ++l) {
        maps[l].resize(orig_dims[l]);
        std::iota(maps[l].begin(), maps[l].end(), 0);
    }

    for (std::size_t it = 0; it < plan.iterations; ++it) {
        const double ratio = plan.keep_ratios[it];

        std::vector<LayerPairStats> pairs =
            collect(result.net, working, nullptr, sample_cap, seed + it);
        std::vector<CovarianceModel> covs;
        covs.reserve(pairs.size());
        for (const auto& p : pairs) covs.push_back(finalize(p, ridge_scale));

        // Per-level targets derive from the original widths so the endpoint
        // matches a one-shot prune at the same ratio; counts are clamped to
        // the current (already squeezed) widths.
        const SparsitySchedule sched = make_schedule(shape, ratio, L);
        const auto cur_dims = result.net.level_dims();
        std::vector<std::size_t> counts(L);
        for (std::size_t l = 0; l < L; ++l)
            counts[l] = std::min(keep_count(sched.keep[l], orig_dims[l]), cur_dims[l]);

        LayerwiseResult lw = layerwise_prune_counts(result.net, covs, counts, cfg);

        IterationRecord rec;
        rec.iteration = it + 1;
        rec.keep_ratio = ratio;
        rec.kept_current = lw.masks.kept;
        rec.kept_original.resize(L + 1);
        for (std::size_t l = 0; l <= L; ++l) {
            rec.kept_original[l].reserve(lw.masks.kept[l].size());
            for (std::size_t j : lw.masks.kept[l]) rec.kept_original[l].push_back(maps[l][j]);
        }

        result.net = squeeze(result.net, lw.masks);
        for (std::size_t l = 0; l <= L; ++l) maps[l] = rec.kept_original[l];
        working = restrict_dataset(working, lw.masks.kept[0]);

        try {
            train(result.net, working, plan.retrain);
        } catch (const TrainingDiverged& e) {
            result.diverged = true;
            result.error = e.what();
            result.history.push_back(std::move(rec));
            break;
        }
        const EvalResult ev = evaluate(result.net, working);
        rec.post_retrain_accuracy = ev.accuracy;
        rec.post_retrain_loss = ev.mean_loss;
        result.history.push_back(std::move(rec));
    }

    result.masks_original = MaskSet::from_kept(orig_dims, maps);
    return result;
}

std::string prune_manifest_json(const Network& net, const SparsitySchedule& schedule,
                                const SelectorConfig& cfg, const LayerwiseResult& result) {
    char num[64];
    std::string out = "{\"schedule\":{\"shape\":\"" + std::string(to_string(schedule.shape)) + "\"";
    std::snprintf(num, sizeof(num), "%.17g", schedule.overall_keep);
    out += ",\"overall_keep\":" + std::string(num);
    out += ",\"keep\":[";
    for (std::size_t i = 0; i < schedule.keep.size(); ++i) {
        if (i) out += ",";
        std::snprintf(num, sizeof(num), "%.17g", schedule.keep[i]);
        out += num;
    }
    out += "]},\"selector\":{\"mode\":\"" + std::string(to_string(cfg.mode)) + "\"";
    std::snprintf(num, sizeof(num), "%.17g", cfg.alpha);
    out += ",\"alpha\":" + std::string(num);
    std::snprintf(num, sizeof(num), "%.17g", cfg.beta);
    out += ",\"beta\":" + std::string(num);
    out += "},\"level_dims\":[";
    const auto dims = net.level_dims();
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(dims[i]);
    }
    out += "],\"levels\":[";
    for (std::size_t i = 0; i < result.traces.size(); ++i) {
        const LevelTrace& tr = result.traces[i];
        if (i) out += ",";
        out += "{\"level\":" + std::to_string(tr.level);
        out += ",\"order\":" + std::to_string(tr.order);
        out += ",\"k\":" + std::to_string(tr.k);
        out += tr.shared_with_upper ? ",\"shared\":true" : ",\"shared\":false";
        out += ",\"kept\":[";
        const auto& kept = result.masks.kept[tr.level];
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if (j) out += ",";
            out += std::to_string(kept[j]);
        }
        out += "]";
        if (!tr.shared_with_upper) out += ",\"selection\":" + selection_to_json(tr.selection, tr.level);
        out += "}";
    }
    out += "]}";
    return out;
}

}  // namespace mipr
