// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and runtime budgets are pinned here, not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipr/baselines.hpp"
#include "mipr/bench.hpp"
#include "mipr/datagen.hpp"
#include "mipr/experiment.hpp"
#include "mipr/mi.hpp"
#include "mipr/nn.hpp"
#include "mipr/pruner.hpp"
#include "mipr/rng.hpp"
#include "mipr/selector.hpp"
#include "mipr/stats.hpp"

using namespace mipr;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return std::string(buf);
}

Mat random_spd(Rng& rng, std::size_t n, double diag = 0.5) {
    Mat a(n, n + 2);
    for (double& v : a.data) v = rng.normal();
    Mat s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * a(j, k);
            s(i, j) = acc + (i == j ? diag : 0.0);
            s(j, i) = s(i, j);
        }
    return s;
}

// 1. Sampled bivariate Gaussians recover the closed-form MI within 0.02 nats.
Outcome criterion_gaussian_mi() {
    const auto t0 = std::chrono::steady_clock::now();
    const double rhos[] = {0.0, 0.5, 0.8, 0.95};
    double max_err = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double rho = rhos[i];
        Rng rng(90 + i);
        LayerPairStats st(0, 1, 1);
        for (std::size_t s = 0; s < 100000; ++s) {
            const double x = rng.normal();
            const double y = rho * x + std::sqrt(1.0 - rho * rho) * rng.normal();
            st.update_row(&x, &y);
        }
        const CovarianceModel cov = finalize(st);
        const double got = mutual_information(cov, IndexSet{0}, IndexSet{1});
        const double want = -0.5 * std::log(1.0 - rho * rho);
        max_err = std::max(max_err, std::fabs(got - want));
    }
    const double el = seconds_since(t0);
    return {max_err <= 0.02 && el < 10.0,
            fmt("max |MI - closed form| = %.4f nats (tol 0.02), %.1f s (budget 10 s)",
                max_err, el)};
}

// 2. Greedy objective within 0.95x of brute force; incremental == from-scratch.
Outcome criterion_selection_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_ratio = 1.0, max_gap = 0.0;
    for (std::size_t t = 0; t < 50; ++t) {
        Rng rng(500 + t);
        const std::size_t split = 4 + t % 7;            // lower width 4..10
        const std::size_t upper_n = 2 + t % 3;          // upper width 2..4
        const std::size_t k = 1 + t % std::min<std::size_t>(4, split);
        const Mat sigma = random_spd(rng, split + upper_n, 8.0);
        const CovarianceModel cov = CovarianceModel::from_matrix(sigma, split);
        IndexSet upper(upper_n);
        for (std::size_t i = 0; i < upper_n; ++i) upper[i] = split + i;

        const Selection sel = select_exact(cov, upper, k);
        const IndexSet best = brute_force_best_subset(cov, upper, k);
        const double best_obj = mutual_information(cov, best, upper);
        if (best_obj > 1e-12) worst_ratio = std::min(worst_ratio, sel.objective / best_obj);
        const double scratch = mutual_information(cov, sel.chosen_sorted(), upper);
        max_gap = std::max(max_gap, std::fabs(sel.objective - scratch));
    }
    const double el = seconds_since(t0);
    return {worst_ratio >= 0.95 && max_gap <= 1e-8 && el < 60.0,
            fmt("greedy/brute objective >= %.4f (tol 0.95), |incremental - scratch| <= %.2e "
                "(tol 1e-8), %.1f s (budget 60 s)",
                worst_ratio, max_gap, el)};
}

// 3. Squeezed forward == masked forward on 200 random triples; 4x4 -> 3x3
// worked example keeps exactly rows {1,2,3} x cols {0,1,3}.
Outcome criterion_squeeze_equivalence() {
    double max_rel = 0.0;
    for (std::size_t t = 0; t < 200; ++t) {
        Rng rng(3000 + t);
        const std::size_t d0 = 3 + t % 4;
        const std::size_t h = 3 + (t / 2) % 4;
        const std::size_t classes = 2 + t % 3;
        const Activation act = (t % 2 == 0) ? Activation::Tanh : Activation::Relu;
        const bool res = (t % 3 == 0);
        Network net = res ? make_mlp(d0, {h, h}, classes, act, 40 + t, {false, true, false})
                          : make_mlp(d0, {h, h}, classes, act, 40 + t);

        const std::vector<std::size_t> dims = net.level_dims();
        std::vector<std::vector<std::size_t>> kept(dims.size());
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const std::size_t k = 1 + rng.uniform_int(dims[l]);
            kept[l] = rng.sample_without_replacement(dims[l], k);
        }
        if (res) kept[2] = kept[1];  // residual layer shares one mask
        kept.back().resize(dims.back());
        for (std::size_t i = 0; i < dims.back(); ++i) kept.back()[i] = i;
        const MaskSet masks = MaskSet::from_kept(dims, kept);

        Mat x(5, d0);
        for (double& v : x.data) v = rng.normal();
        const Mat a = forward(net, x, &masks).logits();
        const Network small = squeeze(net, masks);
        const Mat b = forward(small, select_columns(x, masks.kept[0])).logits();
        for (std::size_t i = 0; i < a.data.size(); ++i) {
            const double rel = std::fabs(a.data[i] - b.data[i]) /
                               std::max({1.0, std::fabs(a.data[i]), std::fabs(b.data[i])});
            max_rel = std::max(max_rel, rel);
        }
    }

    Network demo = make_mlp(4, {4}, 2, Activation::Identity, 1);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) demo.layers[0].weight(r, c) = 10.0 * r + c;
    const MaskSet demo_masks =
        MaskSet::from_kept(demo.level_dims(), {{0, 1, 3}, {1, 2, 3}, {0, 1}});
    const Network demo_small = squeeze(demo, demo_masks);
    const std::vector<double> want = {10, 11, 13, 20, 21, 23, 30, 31, 33};
    const bool pattern_ok = demo_small.layers[0].weight.data == want;

    return {max_rel <= 1e-6 && pattern_ok,
            fmt("max relative gap over 200 triples = %.2e (tol 1e-6); 4x4 -> 3x3 surviving "
                "entries %s",
                max_rel, pattern_ok ? "exact" : "WRONG")};
}

// 4. Top-down pruning recovers the planted input dimensions in >= 4/5 seeds.
Outcome criterion_planted_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    GenSpec spec;
    spec.generator = "planted-subspace";
    spec.dims = 32;
    spec.relevant_dims = 4;
    spec.train_samples = 3000;
    spec.dev_samples = 300;
    spec.test_samples = 500;

    std::size_t hits = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const GeneratedData data = gen_data(spec, seed);
        Network net = make_mlp(spec.dims, {16, 8}, static_cast<std::size_t>(data.train.n_classes),
                               Activation::Relu, seed);
        TrainConfig tc;
        tc.steps = 800;
        tc.batch_size = 64;
        tc.lr = 0.01;
        tc.seed = seed;
        train(net, data.train, tc);

        std::vector<CovarianceModel> covs;
        for (const LayerPairStats& p : collect(net, data.train, nullptr, 100000, seed))
            covs.push_back(finalize(p));
        SelectorConfig sc;
        sc.mode = SelectorMode::ExactGreedy;
        const LayerwiseResult lw = layerwise_prune_counts(net, covs, {4, 8, 4}, sc);
        const bool ok = lw.masks.kept[0] == data.planted;
        hits += ok ? 1 : 0;
        per_seed += ok ? '+' : '-';
    }
    const double el = seconds_since(t0);
    return {hits >= 4 && el < 300.0,
            fmt("planted set recovered in %zu/5 seeds [%s] (need >= 4), %.0f s (budget 300 s)",
                hits, per_seed.c_str(), el)};
}

// 5. At D=1024, keep 0.5: squeezed <= 0.5x dense, masked >= 0.9x dense.
Outcome criterion_speedup() {
    TimingOptions opts;  // defaults: median of 30 trials
    const std::vector<KernelRow> rows = bench_kernels({1024}, {0.5}, opts);
    const KernelRow& r = rows.at(0);
    const double sq = r.squeezed_ns / r.dense_ns;
    const double mk = r.masked_ns / r.dense_ns;
    return {sq <= 0.5 && mk >= 0.9,
            fmt("squeezed/dense = %.3f (tol <= 0.5), masked/dense = %.3f (tol >= 0.9), "
                "medians of %zu trials at D=1024",
                sq, mk, opts.trials)};
}

// 6. Analytic gradients match central differences within 1e-4 relative.
Outcome criterion_gradient_check() {
    Network net = make_mlp(6, {10, 8}, 4, Activation::Tanh, 7);
    Rng rng(11);
    Batch batch;
    batch.inputs = Mat(8, 6);
    for (double& v : batch.inputs.data) v = rng.normal();
    for (std::size_t i = 0; i < 8; ++i)
        batch.labels.push_back(static_cast<int>(rng.uniform_int(4)));

    const Gradients g = backward(net, batch, forward(net, batch.inputs));
    const double h = 1e-5;
    double max_rel = 0.0;
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = softmax_cross_entropy(forward(net, batch.inputs).logits(), batch.labels);
        param = saved - h;
        const double dn = softmax_cross_entropy(forward(net, batch.inputs).logits(), batch.labels);
        param = saved;
        const double numeric = (up - dn) / (2.0 * h);
        const double rel = std::fabs(numeric - analytic) /
                           std::max(1.0, std::fabs(numeric) + std::fabs(analytic));
        max_rel = std::max(max_rel, rel);
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t i = 0; i < net.layers[l].weight.data.size(); ++i)
            probe(net.layers[l].weight.data[i], g.dweight[l].data[i]);
        for (std::size_t i = 0; i < net.layers[l].bias.size(); ++i)
            probe(net.layers[l].bias[i], g.dbias[l][i]);
    }
    return {max_rel < 1e-4, fmt("max relative gradient error = %.2e (tol 1e-4)", max_rel)};
}

// 7. Cross-cutting invariants.
Outcome criterion_invariants() {
    std::string failed;
    auto require = [&](bool ok, const char* name) {
        if (!ok) {
            if (!failed.empty()) failed += ", ";
            failed += name;
        }
    };

    {  // MI symmetry and nonnegativity
        bool sym = true, nonneg = true;
        for (std::size_t t = 0; t < 10; ++t) {
            Rng rng(70 + t);
            const CovarianceModel cov = CovarianceModel::from_matrix(random_spd(rng, 7), 4);
            const IndexSet a = {0, 2, 3}, b = {4, 5, 6};
            const double ab = mutual_information(cov, a, b);
            const double ba = mutual_information(cov, b, a);
            sym = sym && std::fabs(ab - ba) <= 1e-10;
            nonneg = nonneg && ab >= -1e-9 && clamp_mi(ab) >= 0.0;
            for (std::size_t d = 0; d < 4; ++d) {
                const double m = mutual_information(cov, IndexSet{d}, b);
                nonneg = nonneg && m >= -1e-9 && clamp_mi(m) >= 0.0;
            }
        }
        require(sym, "mi-symmetry");
        require(nonneg, "mi-nonnegativity");
    }

    {  // monotone greedy trace; argmax invariant under per-coordinate scaling
        bool monotone = true, scale_inv = true;
        for (std::size_t t = 0; t < 8; ++t) {
            Rng rng(170 + t);
            const Mat sigma = random_spd(rng, 8);
            const CovarianceModel cov = CovarianceModel::from_matrix(sigma, 5);
            const IndexSet upper = {5, 6, 7};
            const Selection sel = select_exact(cov, upper, 5);
            for (std::size_t i = 1; i < sel.trace.size(); ++i)
                monotone = monotone && sel.trace[i] >= sel.trace[i - 1] - 1e-9;

            Mat scaled = sigma;
            std::vector<double> s(8);
            for (double& v : s) v = rng.uniform(0.5, 2.0);
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j) scaled(i, j) *= s[i] * s[j];
            const Selection sel2 =
                select_exact(CovarianceModel::from_matrix(scaled, 5), upper, 3);
            const Selection sel1 = select_exact(cov, upper, 3);
            scale_inv = scale_inv && sel1.chosen == sel2.chosen;
        }
        require(monotone, "monotone-greedy-trace");
        require(scale_inv, "scaling-invariant-argmax");
    }

    {  // streaming covariance == two-pass
        Rng rng(55);
        const std::size_t n = 300;
        Mat rows(n, 5);
        for (double& v : rows.data) v = rng.normal();
        LayerPairStats st(0, 3, 2);
        for (std::size_t i = 0; i < n; ++i)
            st.update_row(&rows(i, 0), &rows(i, 3));
        Vec mean(5, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 5; ++j) mean[j] += rows(i, j) / n;
        bool ok = true;
        const Mat m2 = st.co_moment();
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = 0; b < 5; ++b) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    acc += (rows(i, a) - mean[a]) * (rows(i, b) - mean[b]);
                ok = ok && std::fabs(m2(a, b) - acc) <= 1e-9 * std::max(1.0, std::fabs(acc));
            }
        require(ok, "streaming-covariance");
    }

    {  // mask cardinality and schedule mean
        const Network net = make_mlp(8, {7, 6}, 3, Activation::Tanh, 5);
        const SparsitySchedule sched = make_schedule(ScheduleShape::Pyramid, 0.5, 3);
        const MaskSet rm = random_masks(net, sched, 21);
        const std::vector<std::size_t> dims = net.level_dims();
        bool card = rm.kept.back().size() == dims.back();
        for (std::size_t l = 0; l + 1 < dims.size(); ++l)
            card = card && rm.kept[l].size() == keep_count(sched.keep[l], dims[l]);
        require(card, "mask-cardinality");

        bool mean_ok = true;
        for (ScheduleShape shape : {ScheduleShape::Pyramid, ScheduleShape::InvertedPyramid}) {
            const SparsitySchedule s2 = make_schedule(shape, 0.4, 5);
            double m = 0.0;
            for (double r : s2.keep) {
                mean_ok = mean_ok && r >= 0.0 && r <= 1.0;
                m += r;
            }
            mean_ok = mean_ok && std::fabs(m / 5 - 0.4) <= 1e-12;
        }
        require(mean_ok, "schedule-mean");
    }

    {  // determinism: selections, generated data, reports
        Rng rng(31);
        const CovarianceModel cov = CovarianceModel::from_matrix(random_spd(rng, 7), 4);
        const Selection s1 = select_exact(cov, {4, 5, 6}, 3);
        const Selection s2 = select_exact(cov, {4, 5, 6}, 3);
        bool det = s1.chosen == s2.chosen &&
                   std::memcmp(&s1.objective, &s2.objective, sizeof(double)) == 0;

        GenSpec gs;
        gs.dims = 3;
        gs.train_samples = 64;
        gs.dev_samples = 8;
        gs.test_samples = 8;
        const GeneratedData d1 = gen_data(gs, 9);
        const GeneratedData d2 = gen_data(gs, 9);
        det = det && d1.train.inputs.data == d2.train.inputs.data &&
              d1.train.labels == d2.train.labels;

        const std::vector<ReportRow> rows = {
            {"mi", 0.5, 1, 0.9, 0.8, -1.0, 10, 20, 30, 40, 1.0, 0.5, 7}};
        TimingOptions topts;
        write_report_jsonl(rows, topts, "acceptance_report_a.jsonl");
        write_report_jsonl(rows, topts, "acceptance_report_b.jsonl");
        auto slurp = [](const char* p) {
            std::ifstream in(p);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const std::string ra = slurp("acceptance_report_a.jsonl");
        det = det && !ra.empty() && ra == slurp("acceptance_report_b.jsonl");
        require(det, "determinism");
    }

    return {failed.empty(),
            failed.empty() ? std::string("symmetry, nonnegativity, monotone trace, scaling "
                                         "argmax, streaming covariance, mask cardinality, "
                                         "schedule mean, determinism all hold")
                           : "violated: " + failed};
}

// 8. Qualitative direction checks pass in >= 4/5 seeds each.
Outcome criterion_directions() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<DirectionOutcome> outcomes = run_direction_checks({1, 2, 3, 4, 5});
    write_summary_csv({}, outcomes, "acceptance_direction_summary.csv");

    bool all_ok = true;
    std::string detail;
    for (const DirectionSummary& s : summarize_directions(outcomes)) {
        if (!detail.empty()) detail += ", ";
        detail += fmt("%s %zu/%zu", s.check.c_str(), s.passes, s.total);
        all_ok = all_ok && s.total == 5 && s.passes >= 4;
    }
    detail += fmt(" (need >= 4/5 each), %.0f s; acceptance_direction_summary.csv written",
                  seconds_since(t0));
    return {all_ok, detail};
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"gaussian-mi", criterion_gaussian_mi},
        {"selection-oracles", criterion_selection_oracles},
        {"squeeze-equivalence", criterion_squeeze_equivalence},
        {"planted-recovery", criterion_planted_recovery},
        {"structured-speedup", criterion_speedup},
        {"gradient-check", criterion_gradient_check},
        {"invariants", criterion_invariants},
        {"direction-checks", criterion_directions},
    };

    int failures = 0;
    int idx = 0;
    for (const Entry& e : entries) {
        ++idx;
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        std::printf("[%s] %d. %-20s %s\n", o.pass ? "PASS" : "FAIL", idx, e.name,
                    o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/8 acceptance criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
