#pragma once

#include <cstddef>
#include <vector>

#include "mipr/linalg.hpp"
#include "mipr/stats.hpp"

namespace mipr {

// Differential Gaussian quantities over index sets of a CovarianceModel, in
// nats:
//   H(S)        = (|S| * ln(2*pi*e) + logdet sigma[S]) / 2
//   I(A;B)      = (logdet sigma[A] + logdet sigma[B] - logdet sigma[A+B]) / 2
//   I(A;B | Z)  = (logdet sigma[A+Z] + logdet sigma[B+Z]
//                  - logdet sigma[Z] - logdet sigma[A+B+Z]) / 2
// All sets must be sorted, deduplicated, and pairwise disjoint.
double gaussian_entropy(const CovarianceModel& cov, const IndexSet& set);
double mutual_information(const CovarianceModel& cov, const IndexSet& a, const IndexSet& b);
double conditional_mi(const CovarianceModel& cov, const IndexSet& a, const IndexSet& b,
                      const IndexSet& z);

// Rounds tiny negative MI values (>= -1e-9, pure floating-point noise) up to
// zero. Applied only at reporting boundaries; greedy comparisons always use
// the raw values.
double clamp_mi(double v);

// Cholesky factor of sigma[S] for an incrementally grown index set S.
// Appending index d costs O(|S|^2): one forward substitution against the
// existing factor plus a Schur pivot
//   pivot(d) = sigma_dd - w^T w,   w = L^{-1} sigma[S, d]
// and logdet grows by ln(pivot). pivot() scores a candidate without
// committing it.
class CholFactor {
public:
    explicit CholFactor(const CovarianceModel& cov) : cov_(&cov) {}

    double pivot(std::size_t idx) const;
    void extend(std::size_t idx);
    double logdet() const { return logdet_; }
    std::size_t size() const { return idx_.size(); }
    const std::vector<std::size_t>& indices() const { return idx_; }

private:
    double solve_pivot(std::size_t idx, Vec* w_out) const;

    const CovarianceModel* cov_;
    std::vector<std::size_t> idx_;
    std::vector<double> rows_;  // packed lower-triangular rows
    double logdet_ = 0.0;
};

// Greedy maximization state for I(A; S) with a fixed conditioning set A and a
// growing selection S. Three factors are maintained (S, A, and A+S), so one
// candidate is scored in O(|S|^2 + |A+S|^2) without refactorizing:
//   gain(d)     = ( ln pivot_S(d) - ln pivot_{A+S}(d) ) / 2
//   relevance   = I(A; {d})  = ( ln sigma_dd - ln pivot_A(d) ) / 2
//   redundancy  = I({d}; S)  = ( ln sigma_dd - ln pivot_S(d) ) / 2
//   cond. red.  = I({d}; S | A) = ( ln pivot_A(d) - ln pivot_{A+S}(d) ) / 2
class GreedyState {
public:
    GreedyState(const CovarianceModel& cov, IndexSet upper_set);

    double objective() const;          // I(A; S); 0 while S is empty
    double gain(std::size_t d) const;  // increase of I(A; S) if d were added
    double extend(std::size_t d);      // commits d, returns the realized gain

    double relevance(std::size_t d) const;
    double redundancy(std::size_t d) const;               // 0 while S is empty
    double conditional_redundancy(std::size_t d) const;   // 0 while S is empty

    // Raw Schur pivots against the three factors, for callers composing their
    // own scores.
    double lower_pivot(std::size_t d) const { return f_s_.pivot(d); }
    double upper_pivot(std::size_t d) const { return f_a_.pivot(d); }
    double joint_pivot(std::size_t d) const { return f_as_.pivot(d); }

    const std::vector<std::size_t>& selected() const { return selected_; }
    const IndexSet& upper_set() const { return upper_; }
    const CovarianceModel& cov() const { return *cov_; }

private:
    void check_candidate(std::size_t d) const;

    const CovarianceModel* cov_;
    IndexSet upper_;
    CholFactor f_s_, f_a_, f_as_;
    std::vector<std::size_t> selected_;
    std::vector<std::uint8_t> taken_;
    double logdet_a_ = 0.0;
};

// Exhaustive argmax_{|S|=k} I(upper_set; S) over subsets of the lower side
// [0, split). Guarded to small problems: split <= 16 and C(split, k) <= 1e5.
// Ties break toward the lexicographically smallest subset.
IndexSet brute_force_best_subset(const CovarianceModel& cov, const IndexSet& upper_set,
                                 std::size_t k);

}  // namespace mipr
