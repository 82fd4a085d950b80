#include "mipr/mi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mipr {

namespace {

constexpr double kLog2PiE = 2.8378770664093453;  // ln(2*pi*e)

void check_disjoint(const IndexSet& a, const IndexSet& b, const char* what) {
    if (!disjoint(a, b)) throw std::invalid_argument(std::string(what) + ": sets must be disjoint");
}

}  // namespace

double gaussian_entropy(const CovarianceModel& cov, const IndexSet& set) {
    validate_index_set(set, cov.dim(), "gaussian_entropy");
    return 0.5 * (static_cast<double>(set.size()) * kLog2PiE + logdet_principal(cov, set));
}

double mutual_information(const CovarianceModel& cov, const IndexSet& a, const IndexSet& b) {
    validate_index_set(a, cov.dim(), "mutual_information");
    validate_index_set(b, cov.dim(), "mutual_information");
    check_disjoint(a, b, "mutual_information");
    const IndexSet ab = set_union(a, b);
    return 0.5 * (logdet_principal(cov, a) + logdet_principal(cov, b) - logdet_principal(cov, ab));
}

double conditional_mi(const CovarianceModel& cov, const IndexSet& a, const IndexSet& b,
                      const IndexSet& z) {
    validate_index_set(a, cov.dim(), "conditional_mi");
    validate_index_set(b, cov.dim(), "conditional_mi");
    validate_index_set(z, cov.dim(), "conditional_mi");
    check_disjoint(a, b, "conditional_mi");
    check_disjoint(a, z, "conditional_mi");
    check_disjoint(b, z, "conditional_mi");
    const IndexSet az = set_union(a, z);
    const IndexSet bz = set_union(b, z);
    const IndexSet abz = set_union(az, b);
    return 0.5 * (logdet_principal(cov, az) + logdet_principal(cov, bz) -
                  logdet_principal(cov, z) - logdet_principal(cov, abz));
}

double clamp_mi(double v) { return (v < 0.0 && v >= -1e-9) ? 0.0 : v; }

double CholFactor::solve_pivot(std::size_t idx, Vec* w_out) const {
    if (idx >= cov_->dim()) throw std::invalid_argument("chol_factor: index out of range");
    const std::size_t k = idx_.size();
    Vec w(k);
    double ss = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        const double* Lr = rows_.data() + r * (r + 1) / 2;
        double s = cov_->sigma(idx_[r], idx);
        for (std::size_t c = 0; c < r; ++c) s -= Lr[c] * w[c];
        w[r] = s / Lr[r];
        ss += w[r] * w[r];
    }
    if (w_out) *w_out = std::move(w);
    return cov_->sigma(idx, idx) - ss;
}

double CholFactor::pivot(std::size_t idx) const {
    const double p = solve_pivot(idx, nullptr);
    if (!(p > 0.0))
        throw std::runtime_error("chol_factor: non-positive pivot (covariance not PD enough)");
    return p;
}

void CholFactor::extend(std::size_t idx) {
    for (std::size_t existing : idx_)
        if (existing == idx) throw std::invalid_argument("chol_factor: index already present");
    Vec w;
    const double p = solve_pivot(idx, &w);
    if (!(p > 0.0))
        throw std::runtime_error("chol_factor: non-positive pivot (covariance not PD enough)");
    rows_.insert(rows_.end(), w.begin(), w.end());
    rows_.push_back(std::sqrt(p));
    idx_.push_back(idx);
    logdet_ += std::log(p);
}

GreedyState::GreedyState(const CovarianceModel& cov, IndexSet upper_set)
    : cov_(&cov), upper_(std::move(upper_set)), f_s_(cov), f_a_(cov), f_as_(cov) {
    validate_index_set(upper_, cov.dim(), "greedy_state: upper set");
    taken_.assign(cov.dim(), 0);
    for (std::size_t i : upper_) {
        f_a_.extend(i);
        f_as_.extend(i);
        taken_[i] = 1;
    }
    logdet_a_ = f_a_.logdet();
}

void GreedyState::check_candidate(std::size_t d) const {
    if (d >= cov_->dim()) throw std::invalid_argument("greedy_state: candidate out of range");
    if (taken_[d])
        throw std::invalid_argument("greedy_state: candidate already in the selection or upper set");
}

double GreedyState::objective() const {
    if (selected_.empty()) return 0.0;
    return 0.5 * (logdet_a_ + f_s_.logdet() - f_as_.logdet());
}

double GreedyState::gain(std::size_t d) const {
    check_candidate(d);
    return 0.5 * (std::log(f_s_.pivot(d)) - std::log(f_as_.pivot(d)));
}

double GreedyState::extend(std::size_t d) {
    const double g = gain(d);
    f_s_.extend(d);
    f_as_.extend(d);
    selected_.push_back(d);
    taken_[d] = 1;
    return g;
}

double GreedyState::relevance(std::size_t d) const {
    check_candidate(d);
    return 0.5 * (std::log(cov_->sigma(d, d)) - std::log(f_a_.pivot(d)));
}

double GreedyState::redundancy(std::size_t d) const {
    check_candidate(d);
    if (selected_.empty()) return 0.0;
    return 0.5 * (std::log(cov_->sigma(d, d)) - std::log(f_s_.pivot(d)));
}

double GreedyState::conditional_redundancy(std::size_t d) const {
    check_candidate(d);
    if (selected_.empty()) return 0.0;
    return 0.5 * (std::log(f_a_.pivot(d)) - std::log(f_as_.pivot(d)));
}

IndexSet brute_force_best_subset(const CovarianceModel& cov, const IndexSet& upper_set,
                                 std::size_t k) {
    validate_index_set(upper_set, cov.dim(), "brute_force: upper set");
    const std::size_t lower = cov.split;
    for (std::size_t i : upper_set)
        if (i < lower)
            throw std::invalid_argument("brute_force: upper set must live above the split");
    if (k == 0 || k > lower) throw std::invalid_argument("brute_force: k out of range");
    if (lower > 16) throw std::invalid_argument("brute_force: lower side wider than 16");
    double combos = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        combos *= static_cast<double>(lower - i) / static_cast<double>(i + 1);
    if (combos > 1e5) throw std::invalid_argument("brute_force: too many subsets");

    IndexSet comb(k);
    for (std::size_t i = 0; i < k; ++i) comb[i] = i;
    IndexSet best;
    double best_val = 0.0;
    bool first = true;
    while (true) {
        const double val = mutual_information(cov, upper_set, comb);
        if (first || val > best_val) {
            best = comb;
            best_val = val;
            first = false;
        }
        // Next combination in lexicographic order.
        bool advanced = false;
        for (std::size_t i = k; i-- > 0;) {
            if (comb[i] != i + lower - k) {
                ++comb[i];
                for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
                advanced = true;
                break;
            }
        }
        if (!advanced) return best;
    }
}

}  // namespace mipr
