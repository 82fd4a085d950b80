// Command-line front end: dataset generation, training, statistics
// collection, pruning, retraining, evaluation, kernel benchmarks, and full
// experiment runs. Exit codes: 0 success, 2 configuration error, 3 runtime
// failure.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mipr/baselines.hpp"
#include "mipr/bench.hpp"
#include "mipr/datagen.hpp"
#include "mipr/experiment.hpp"
#include "mipr/model_io.hpp"
#include "mipr/pruner.hpp"
#include "mipr/stats.hpp"
#include "mipr/version.hpp"

namespace {

using namespace mipr;

struct GenDataArgs {
    GenSpec spec;
    std::uint64_t seed = 1;
    std::string out = "data";
    std::string classes_raw;
};

struct TrainArgs {
    std::string data_dir;
    std::string out = "model.mipr";
    std::vector<std::size_t> hidden = {16, 8};
    std::string activation = "relu";
    TrainConfig cfg;
    std::uint64_t seed = 1;
};

struct CollectArgs {
    std::string data_dir;
    std::string model;
    std::string out = "stats.mist";
    std::size_t sample_cap = 100000;
    std::uint64_t seed = 0;
};

struct PruneArgs {
    std::string model;
    std::string stats;
    std::string out = "pruned.mipr";
    std::string manifest;
    std::string method = "mi";
    std::string mode = "mrmr";
    std::string schedule = "uniform";
    double keep = 0.5;
    double alpha = 0.4;
    double beta = 0.0;
    std::optional<double> bottom_keep;
    std::uint64_t seed = 1;
    double ridge_scale = 1e-6;
    bool no_squeeze = false;
};

struct RetrainArgs {
    std::string model;  // saved with dimension masks
    std::string data_dir;
    std::string out = "retrained.mipr";
    TrainConfig cfg;
    std::uint64_t seed = 1;
};

struct EvalArgs {
    std::string model;
    std::string data_dir;
    std::string split = "test";
};

struct BenchArgs {
    std::vector<std::size_t> sizes = {256, 512, 1024};
    std::vector<double> keeps = {0.25, 0.5, 1.0};
    std::string out = "bench.csv";
    std::size_t trials = 30;
    std::size_t warmups = 5;
    bool f32 = false;
    std::uint64_t seed = 1234;
};

const Dataset& pick_split(const GeneratedData& data, const std::string& split) {
    if (split == "train") return data.train;
    if (split == "dev") return data.dev;
    if (split == "test") return data.test;
    throw std::invalid_argument("unknown split: " + split);
}

int cmd_gen_data(const GenDataArgs& a) {
    GenSpec spec = a.spec;
    if (!a.classes_raw.empty()) spec.classes = std::stoi(a.classes_raw);
    const GeneratedData data = gen_data(spec, a.seed);
    write_dataset_dir(data, spec, a.seed, a.out);
    std::printf("wrote %s (train %zu, dev %zu, test %zu, dims %zu, classes %d)\n", a.out.c_str(),
                data.train.size(), data.dev.size(), data.test.size(), data.train.inputs.cols,
                data.train.n_classes);
    return 0;
}

int cmd_train(const TrainArgs& a) {
    const GeneratedData data = read_dataset_dir(a.data_dir);
    Network net = make_mlp(data.train.inputs.cols, a.hidden,
                           static_cast<std::size_t>(data.train.n_classes),
                           activation_from_string(a.activation), a.seed);
    TrainConfig cfg = a.cfg;
    cfg.seed = a.seed;
    const TrainResult tr = train(net, data.train, cfg);
    save_model(net, a.out);
    const EvalResult dev = evaluate(net, data.dev);
    std::printf("trained %zu steps (final loss %.4f); dev accuracy %.4f; wrote %s\n", cfg.steps,
                tr.final_loss, dev.accuracy, a.out.c_str());
    return 0;
}

int cmd_collect(const CollectArgs& a) {
    const GeneratedData data = read_dataset_dir(a.data_dir);
    const LoadedModel lm = load_model(a.model);
    const auto stats =
        collect(lm.net, data.train, lm.masks ? &*lm.masks : nullptr, a.sample_cap, a.seed);
    save_stats(stats, a.out);
    std::printf("collected %zu layer pairs over %zu rows; wrote %s\n", stats.size(),
                stats.empty() ? 0 : stats.front().count(), a.out.c_str());
    return 0;
}

int cmd_prune(const PruneArgs& a) {
    const LoadedModel lm = load_model(a.model);
    const Network& net = lm.net;
    const std::size_t L = net.depth();

    if (a.method == "magnitude" || a.method == "movement") {
        if (a.method == "movement")
            throw std::invalid_argument("prune: movement needs training data; use `run`");
        const WeightMaskSet wm = magnitude_prune(net, 1.0 - a.keep);
        save_model(net, a.out, nullptr, &wm);
        std::printf("magnitude: zeroed %zu of %zu weights; wrote %s\n", wm.zero_count(),
                    total_weight_count(net), a.out.c_str());
        return 0;
    }

    const SparsitySchedule sched =
        make_schedule(schedule_shape_from_string(a.schedule), a.keep, L, a.bottom_keep);

    MaskSet masks;
    std::string manifest;
    if (a.method == "mi") {
        const auto pairs = load_stats(a.stats);
        std::vector<CovarianceModel> covs;
        covs.reserve(pairs.size());
        for (const auto& p : pairs) covs.push_back(finalize(p, a.ridge_scale));
        SelectorConfig sel;
        sel.mode = selector_mode_from_string(a.mode);
        sel.alpha = a.alpha;
        sel.beta = a.beta;
        const LayerwiseResult lw = layerwise_prune(net, covs, sched, sel);
        masks = lw.masks;
        manifest = prune_manifest_json(net, sched, sel, lw);
    } else if (a.method == "random") {
        masks = random_masks(net, sched, a.seed);
    } else {
        throw std::invalid_argument("prune: unknown method " + a.method);
    }

    if (a.no_squeeze) {
        save_model(net, a.out, &masks);
    } else {
        InputColumns cols;
        cols.original_dim = net.input_dim;
        cols.columns = masks.kept[0];
        save_model(squeeze(net, masks), a.out, nullptr, nullptr, &cols);
    }
    if (!a.manifest.empty() && !manifest.empty()) {
        std::ofstream mf(a.manifest, std::ios::trunc);
        if (!mf) throw std::runtime_error("prune: cannot open " + a.manifest);
        mf << manifest << "\n";
    }
    std::size_t kept_total = 0, dim_total = 0;
    const auto dims = net.level_dims();
    for (std::size_t l = 0; l < L; ++l) {
        kept_total += masks.kept[l].size();
        dim_total += dims[l];
    }
    std::printf("%s: kept %zu of %zu prunable dimensions; wrote %s\n", a.method.c_str(), kept_total,
                dim_total, a.out.c_str());
    return 0;
}

int cmd_retrain(const RetrainArgs& a) {
    const GeneratedData data = read_dataset_dir(a.data_dir);
    const LoadedModel lm = load_model(a.model);
    if (!lm.masks)
        throw std::invalid_argument(
            "retrain: model has no dimension masks; prune with --no-squeeze first");
    TrainConfig cfg = a.cfg;
    cfg.seed = a.seed;
    const Network out = retrain_pruned(lm.net, *lm.masks, data.train, cfg);
    save_model(out, a.out, &*lm.masks);
    const EvalResult dev = evaluate(out, data.dev);
    std::printf("retrained pruned dimensions for %zu steps; dev accuracy %.4f; wrote %s\n",
                cfg.steps, dev.accuracy, a.out.c_str());
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    const GeneratedData data = read_dataset_dir(a.data_dir);
    const LoadedModel lm = load_model(a.model);
    const Dataset& split = pick_split(data, a.split);
    EvalResult ev;
    if (lm.weight_masks) {
        const MaskedEval me = masked_eval(lm.net, *lm.weight_masks, split);
        ev.accuracy = me.accuracy;
        ev.mean_loss = me.mean_loss;
    } else if (split.inputs.cols != lm.net.input_dim && lm.input_columns &&
               split.inputs.cols == lm.input_columns->original_dim) {
        ev = evaluate(lm.net, restrict_dataset(split, lm.input_columns->columns));
    } else if (split.inputs.cols != lm.net.input_dim) {
        const auto dims = lm.net.level_dims();
        throw std::invalid_argument("eval: dataset width " + std::to_string(split.inputs.cols) +
                                    " does not match model input width " +
                                    std::to_string(dims[0]));
    } else {
        ev = evaluate(lm.net, split, lm.masks ? &*lm.masks : nullptr);
    }
    const FlopCount fc = count_flops(lm.net);
    std::printf("%s: accuracy %.4f, mean loss %.4f, flops/sample %.0f, params %zu\n",
                a.split.c_str(), ev.accuracy, ev.mean_loss, fc.total(), lm.net.param_count());
    return 0;
}

int cmd_bench(const BenchArgs& a) {
    TimingOptions opts;
    opts.trials = a.trials;
    opts.warmups = a.warmups;
    const auto rows = bench_kernels(a.sizes, a.keeps, opts, a.f32, a.seed);
    write_kernel_csv(rows, opts, a.out);
    for (const KernelRow& r : rows)
        std::printf("dim %zu keep %.2f: dense %.0f ns, squeezed %.0f ns (%.2fx), masked %.0f ns "
                    "(%.2fx)\n",
                    r.dim, r.keep, r.dense_ns, r.squeezed_ns, r.dense_ns / r.squeezed_ns,
                    r.masked_ns, r.dense_ns / r.masked_ns);
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

int cmd_run(const std::string& config_path) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const auto rows = run_experiment(cfg);
    std::printf("ran %zu cells; wrote %s/report.jsonl and %s/summary.csv\n", rows.size(),
                cfg.out_dir.c_str(), cfg.out_dir.c_str());
    return 0;
}

int cmd_report(const std::string& out_dir, const std::vector<std::uint64_t>& seeds) {
    const auto outcomes = run_direction_checks(seeds);
    std::filesystem::create_directories(out_dir);
    write_summary_csv({}, outcomes, out_dir + "/summary.csv");
    for (const DirectionSummary& s : summarize_directions(outcomes))
        std::printf("%-22s mean %.4f vs %.4f (%zu/%zu seeds)\n", s.check.c_str(), s.mean_lhs,
                    s.mean_rhs, s.passes, s.total);
    std::printf("wrote %s/summary.csv\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mutual-information structured pruning toolkit"};
    app.set_version_flag("--version", mipr::kVersion);
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* sc_gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
    sc_gen->add_option("--generator", gen.spec.generator,
                       "gaussian-blobs | planted-subspace | xor-like");
    sc_gen->add_option("--dims", gen.spec.dims, "input width");
    sc_gen->add_option("--classes", gen.classes_raw, "class count (default per generator)");
    sc_gen->add_option("--noise", gen.spec.noise, "blob noise stddev");
    sc_gen->add_option("--relevant-dims", gen.spec.relevant_dims, "planted subspace width");
    sc_gen->add_option("--margin", gen.spec.margin, "decision margin");
    sc_gen->add_option("--train-samples", gen.spec.train_samples);
    sc_gen->add_option("--dev-samples", gen.spec.dev_samples);
    sc_gen->add_option("--test-samples", gen.spec.test_samples);
    sc_gen->add_option("--seed", gen.seed);
    sc_gen->add_option("--out", gen.out, "output directory");

    TrainArgs tr;
    auto* sc_train = app.add_subcommand("train", "train a dense classifier");
    sc_train->add_option("--data", tr.data_dir, "dataset directory")->required();
    sc_train->add_option("--out", tr.out, "model output path");
    sc_train->add_option("--hidden", tr.hidden, "hidden layer widths");
    sc_train->add_option("--activation", tr.activation, "identity | relu | tanh");
    sc_train->add_option("--steps", tr.cfg.steps);
    sc_train->add_option("--batch-size", tr.cfg.batch_size);
    sc_train->add_option("--lr", tr.cfg.lr);
    std::string optimizer = "adam";
    sc_train->add_option("--optimizer", optimizer, "sgd | momentum | adam");
    sc_train->add_option("--seed", tr.seed);

    CollectArgs co;
    auto* sc_collect = app.add_subcommand("collect-stats", "collect activation statistics");
    sc_collect->add_option("--data", co.data_dir, "dataset directory")->required();
    sc_collect->add_option("--model", co.model, "model path")->required();
    sc_collect->add_option("--out", co.out, "stats output path");
    sc_collect->add_option("--sample-cap", co.sample_cap);
    sc_collect->add_option("--seed", co.seed);

    PruneArgs pr;
    auto* sc_prune = app.add_subcommand("prune", "prune a trained model");
    sc_prune->add_option("--model", pr.model, "model path")->required();
    sc_prune->add_option("--stats", pr.stats, "stats path (mi method)");
    sc_prune->add_option("--out", pr.out, "pruned model output path");
    sc_prune->add_option("--manifest", pr.manifest, "manifest JSON output path");
    sc_prune->add_option("--method", pr.method, "mi | random | magnitude");
    sc_prune->add_option("--mode", pr.mode, "selector: exact | mrmr");
    sc_prune->add_option("--schedule", pr.schedule, "uniform | pyramid | inverted");
    sc_prune->add_option("--keep", pr.keep, "overall keep ratio");
    sc_prune->add_option("--alpha", pr.alpha, "redundancy weight");
    sc_prune->add_option("--beta", pr.beta, "conditional redundancy weight");
    double bottom_keep_raw = -1.0;
    sc_prune->add_option("--bottom-keep", bottom_keep_raw, "pin the input-level keep ratio");
    sc_prune->add_option("--seed", pr.seed, "seed (random method)");
    sc_prune->add_option("--ridge-scale", pr.ridge_scale);
    sc_prune->add_flag("--no-squeeze", pr.no_squeeze,
                       "save the full-size model with masks instead of squeezing");

    RetrainArgs re;
    auto* sc_retrain = app.add_subcommand("retrain", "retrain pruned dimensions in place");
    sc_retrain->add_option("--model", re.model, "masked model path")->required();
    sc_retrain->add_option("--data", re.data_dir, "dataset directory")->required();
    sc_retrain->add_option("--out", re.out, "model output path");
    sc_retrain->add_option("--steps", re.cfg.steps);
    sc_retrain->add_option("--batch-size", re.cfg.batch_size);
    sc_retrain->add_option("--lr", re.cfg.lr);
    sc_retrain->add_option("--seed", re.seed);

    EvalArgs ev;
    auto* sc_eval = app.add_subcommand("eval", "evaluate a model on a dataset split");
    sc_eval->add_option("--model", ev.model, "model path")->required();
    sc_eval->add_option("--data", ev.data_dir, "dataset directory")->required();
    sc_eval->add_option("--split", ev.split, "train | dev | test");

    BenchArgs be;
    auto* sc_bench = app.add_subcommand("bench", "time dense vs squeezed vs masked kernels");
    sc_bench->add_option("--sizes", be.sizes, "matrix sizes");
    sc_bench->add_option("--keeps", be.keeps, "keep ratios");
    sc_bench->add_option("--out", be.out, "CSV output path");
    sc_bench->add_option("--trials", be.trials);
    sc_bench->add_option("--warmups", be.warmups);
    sc_bench->add_flag("--f32", be.f32, "time in single precision");
    sc_bench->add_option("--seed", be.seed);

    std::string run_config;
    auto* sc_run = app.add_subcommand("run", "run a full experiment from a JSON config");
    sc_run->add_option("--config", run_config, "experiment config path")->required();

    std::string report_out = "runs/directions";
    std::vector<std::uint64_t> report_seeds = {1, 2, 3, 4, 5};
    auto* sc_report = app.add_subcommand("report", "run qualitative direction checks");
    sc_report->add_option("--out", report_out, "output directory");
    sc_report->add_option("--seeds", report_seeds, "seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sc_gen) return cmd_gen_data(gen);
        if (*sc_train) {
            tr.cfg.optimizer = mipr::optimizer_from_string(optimizer);
            return cmd_train(tr);
        }
        if (*sc_collect) return cmd_collect(co);
        if (*sc_prune) {
            if (bottom_keep_raw >= 0.0) pr.bottom_keep = bottom_keep_raw;
            return cmd_prune(pr);
        }
        if (*sc_retrain) return cmd_retrain(re);
        if (*sc_eval) return cmd_eval(ev);
        if (*sc_bench) return cmd_bench(be);
        if (*sc_run) return cmd_run(run_config);
        if (*sc_report) return cmd_report(report_out, report_seeds);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}
