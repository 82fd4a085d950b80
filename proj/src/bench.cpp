#include "mipr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#ifdef __linux__
#include <sched.h>
#endif

#include "mipr/rng.hpp"

namespace mipr {

namespace {

// Keeps the optimizer from discarding a computed value.
inline void do_not_optimize(const void* p) { asm volatile("" : : "g"(p) : "memory"); }

bool pin_to_current_cpu() {
#ifdef __linux__
    const int cpu = sched_getcpu();
    if (cpu < 0) return false;
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    return sched_setaffinity(0, sizeof(set), &set) == 0;
#else
    return false;
#endif
}

double now_ns() {
    return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   std::chrono::steady_clock::now().time_since_epoch())
                                   .count());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename T>
struct Kernel {
    std::vector<T> w;  // row-major dim x dim
    std::vector<T> x;
    std::vector<T> y;
    std::size_t dim = 0;

    void run() {
        const T* wp = w.data();
        const T* xp = x.data();
        T* yp = y.data();
        for (std::size_t r = 0; r < dim; ++r) {
            T s = 0;
            const T* row = wp + r * dim;
            for (std::size_t c = 0; c < dim; ++c) s += row[c] * xp[c];
            yp[r] = s;
        }
        do_not_optimize(yp);
    }
};

template <typename T>
KernelRow bench_one(std::size_t dim, double keep, const TimingOptions& opts, Rng& rng) {
    KernelRow row;
    row.dim = dim;
    row.keep = keep;
    row.f32 = sizeof(T) == 4;

    Kernel<T> dense;
    dense.dim = dim;
    dense.w.resize(dim * dim);
    dense.x.resize(dim);
    dense.y.resize(dim);
    for (auto& v : dense.w) v = static_cast<T>(rng.uniform(-1.0, 1.0));
    for (auto& v : dense.x) v = static_cast<T>(rng.uniform(-1.0, 1.0));

    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(keep * static_cast<double>(dim) + 0.5)));
    row.k = std::min(k, dim);

    // Squeezed operand: an actual submatrix of the dense one, as produced by
    // structured pruning.
    const auto kept_rows = rng.sample_without_replacement(dim, row.k);
    const auto kept_cols = rng.sample_without_replacement(dim, row.k);
    Kernel<T> squeezed;
    squeezed.dim = row.k;
    squeezed.w.resize(row.k * row.k);
    squeezed.x.resize(row.k);
    squeezed.y.resize(row.k);
    for (std::size_t r = 0; r < row.k; ++r)
        for (std::size_t c = 0; c < row.k; ++c)
            squeezed.w[r * row.k + c] = dense.w[kept_rows[r] * dim + kept_cols[c]];
    for (std::size_t c = 0; c < row.k; ++c) squeezed.x[c] = dense.x[kept_cols[c]];

    // Masked operand: same shape as dense with the complement fraction zeroed.
    Kernel<T> masked = dense;
    const std::size_t zeros = dim * dim - static_cast<std::size_t>(std::llround(
                                              keep * static_cast<double>(dim * dim)));
    const auto zero_at = rng.sample_without_replacement(dim * dim, zeros);
    for (std::size_t i : zero_at) masked.w[i] = 0;

    row.dense_ns = median_time_ns([&] { dense.run(); }, opts);
    row.squeezed_ns = median_time_ns([&] { squeezed.run(); }, opts);
    row.masked_ns = median_time_ns([&] { masked.run(); }, opts);
    return row;
}

}  // namespace

std::string timing_methodology(const TimingOptions& opts) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "median of %zu trials after %zu warmups; inner reps sized so a trial >= %.0f us; "
                  "steady_clock; best-effort cpu pinning",
                  opts.trials, opts.warmups, opts.min_trial_us);
    return buf;
}

double median_time_ns(const std::function<void()>& fn, const TimingOptions& opts) {
    if (opts.trials == 0) throw std::invalid_argument("bench: need at least one trial");
    if (opts.pin_thread) pin_to_current_cpu();

    for (std::size_t i = 0; i < opts.warmups; ++i) fn();

    // Size the inner repetition count so one trial is long enough for the
    // clock to be trustworthy.
    const double t0 = now_ns();
    fn();
    const double once = std::max(now_ns() - t0, 1.0);
    const std::size_t reps = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(opts.min_trial_us * 1000.0 / once)));

    std::vector<double> samples;
    samples.reserve(opts.trials);
    for (std::size_t t = 0; t < opts.trials; ++t) {
        const double start = now_ns();
        for (std::size_t r = 0; r < reps; ++r) fn();
        samples.push_back((now_ns() - start) / static_cast<double>(reps));
    }
    return median_of(std::move(samples));
}

std::vector<KernelRow> bench_kernels(const std::vector<std::size_t>& sizes,
                                     const std::vector<double>& keeps,
                                     const TimingOptions& opts, bool use_f32,
                                     std::uint64_t seed) {
    if (sizes.empty() || keeps.empty())
        throw std::invalid_argument("bench: need at least one size and one keep ratio");
    for (std::size_t d : sizes)
        if (d < 64) throw std::invalid_argument("bench: sizes below 64 are all noise");
    for (double kp : keeps)
        if (!(kp > 0.0) || kp > 1.0)
            throw std::invalid_argument("bench: keep ratios must be in (0, 1]");

    Rng rng(seed);
    std::vector<KernelRow> rows;
    for (std::size_t d : sizes)
        for (double kp : keeps)
            rows.push_back(use_f32 ? bench_one<float>(d, kp, opts, rng)
                                   : bench_one<double>(d, kp, opts, rng));
    return rows;
}

void write_kernel_csv(const std::vector<KernelRow>& rows, const TimingOptions& opts,
                      const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_kernel_csv: cannot open " + path);
    out << "dim,keep,k,dtype,dense_ns,squeezed_ns,masked_ns,squeezed_speedup,masked_speedup\n";
    char buf[256];
    for (const KernelRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%zu,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.dim,
                      r.keep, r.k, r.f32 ? "f32" : "f64", r.dense_ns, r.squeezed_ns, r.masked_ns,
                      r.dense_ns / r.squeezed_ns, r.dense_ns / r.masked_ns);
        out << buf;
    }
    out << "# methodology: " << timing_methodology(opts) << "\n";
}

double median_forward_us(const Network& net, const Mat& batch, const TimingOptions& opts) {
    double sink = 0.0;
    const double ns = median_time_ns(
        [&] {
            const ForwardResult fwd = forward(net, batch);
            sink += fwd.logits()(0, 0);
            do_not_optimize(&sink);
        },
        opts);
    return ns / 1000.0;
}

}  // namespace mipr
