#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mipr/linalg.hpp"
#include "mipr/nn.hpp"

namespace mipr {

// Streaming mean / co-moment accumulator over the concatenated activations of
// one layer pair: joint indices [0, lower_dim) address the lower level and
// [lower_dim, lower_dim + upper_dim) the upper level. Single pass, Welford
// update per row, Chan combination for merges. Only the upper triangle of the
// co-moment is maintained; the matrix is symmetric by construction.
class LayerPairStats {
public:
    LayerPairStats(std::size_t level, std::size_t lower_dim, std::size_t upper_dim);

    void update_row(const double* lower, const double* upper);
    void merge(const LayerPairStats& other);

    std::size_t level() const { return level_; }
    std::size_t lower_dim() const { return d_lo_; }
    std::size_t upper_dim() const { return d_hi_; }
    std::size_t dim() const { return d_lo_ + d_hi_; }
    std::size_t count() const { return n_; }
    const Vec& mean() const { return mean_; }

    // Full symmetric co-moment matrix (sum of centered outer products).
    Mat co_moment() const;

    // Raw upper-triangle accessor used by serialization.
    const Mat& co_moment_upper() const { return m2_; }
    void restore(std::size_t n, Vec mean, Mat m2_upper);

private:
    std::size_t level_, d_lo_, d_hi_;
    std::size_t n_ = 0;
    Vec mean_;
    Mat m2_;  // upper triangle only
    Vec x_, dx_;
};

// Finalized Gaussian model of one layer pair: covariance with a ridge term,
// population-normalized (1/n). `split` marks where upper-level indices begin.
struct CovarianceModel {
    Vec mean;
    Mat sigma;
    std::size_t split = 0;
    double ridge = 0.0;

    std::size_t dim() const { return sigma.rows; }

    // Wrap an explicit covariance (tests and synthetic inputs). Validates
    // shape and positive definiteness.
    static CovarianceModel from_matrix(Mat sigma, std::size_t split, Vec mean = {});
};

// Covariance = co-moment / n plus ridge lambda * I with
// lambda = ridge_scale * trace(sigma) / dim (falling back to ridge_scale alone
// when the trace is not positive). The ridge is escalated tenfold, a few
// retries only, if the factorization still fails.
CovarianceModel finalize(const LayerPairStats& stats, double ridge_scale = 1e-6);

// log det of the principal submatrix sigma[set, set].
double logdet_principal(const CovarianceModel& cov, const IndexSet& set);

// One pass over the dataset (optionally subsampled to `sample_cap` rows drawn
// deterministically from `seed`): runs the network and feeds every layer pair
// accumulator the same row subset. Masked collection uses the masked forward.
std::vector<LayerPairStats> collect(const Network& net, const Dataset& data,
                                    const MaskSet* masks = nullptr,
                                    std::size_t sample_cap = 100000,
                                    std::uint64_t seed = 0);

// Stats dump: magic "MIST", version, per-pair raw accumulators, CRC32.
// Dumps hold raw counts/moments so they stay mergeable offline.
void save_stats(const std::vector<LayerPairStats>& stats, const std::string& path);
std::vector<LayerPairStats> load_stats(const std::string& path);

}  // namespace mipr
