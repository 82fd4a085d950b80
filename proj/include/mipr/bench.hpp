#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mipr/linalg.hpp"
#include "mipr/nn.hpp"

namespace mipr {

struct TimingOptions {
    std::size_t trials = 30;     // >= 30 for reported medians
    std::size_t warmups = 5;
    double min_trial_us = 100.0; // inner repetitions are sized to reach this
    bool pin_thread = true;      // best-effort CPU affinity
};

// One-line description of how timings are produced, embedded in reports.
std::string timing_methodology(const TimingOptions& opts);

// Median wall-clock nanoseconds of one call to fn. Runs `warmups` untimed
// calls, auto-scales inner repetitions so one trial lasts at least
// min_trial_us, then reports the median over `trials` trials.
double median_time_ns(const std::function<void()>& fn, const TimingOptions& opts);

struct KernelRow {
    std::size_t dim = 0;
    double keep = 1.0;
    std::size_t k = 0;          // squeezed width
    double dense_ns = 0.0;      // D x D matrix-vector product
    double squeezed_ns = 0.0;   // k x k matrix-vector product
    double masked_ns = 0.0;     // D x D product with (1-keep) of entries zeroed
    bool f32 = false;
};

// Times the same matrix-vector kernel over dense, squeezed, and weight-masked
// operands for every (size, keep) pair. The masked variant runs the identical
// dense kernel: zeros are multiplied, not skipped.
std::vector<KernelRow> bench_kernels(const std::vector<std::size_t>& sizes,
                                     const std::vector<double>& keeps,
                                     const TimingOptions& opts, bool use_f32 = false,
                                     std::uint64_t seed = 1234);

// CSV report with a trailing comment line recording the methodology.
void write_kernel_csv(const std::vector<KernelRow>& rows, const TimingOptions& opts,
                      const std::string& path);

// Median microseconds for one forward pass of `net` over `batch`.
double median_forward_us(const Network& net, const Mat& batch, const TimingOptions& opts);

}  // namespace mipr
