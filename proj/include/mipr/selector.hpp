#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mipr/mi.hpp"
#include "mipr/stats.hpp"

namespace mipr {

enum class SelectorMode { ExactGreedy, Mrmr };

const char* to_string(SelectorMode m);
SelectorMode selector_mode_from_string(const std::string& s);

struct SelectorConfig {
    SelectorMode mode = SelectorMode::Mrmr;
    double alpha = 0.4;  // redundancy weight
    double beta = 0.0;   // conditional-redundancy weight
};

// Result of selecting k lower-level dimensions against a fixed upper set.
// `chosen` is in selection order; `trace` records, per step, the objective
// I(A; S) after the step (exact mode) or the winning score (mrmr mode).
struct Selection {
    SelectorMode mode = SelectorMode::ExactGreedy;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<std::size_t> chosen;
    std::vector<double> trace;
    double objective = 0.0;  // I(A; S) of the final selection

    IndexSet chosen_sorted() const;
};

// Exact greedy: each step adds the candidate maximizing the joint objective
// I(A; S + d). Candidates are the lower-side indices [0, split); ties break
// toward the lowest index. Deterministic for fixed inputs.
Selection select_exact(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k);

// Relevance / redundancy surrogate: each step adds the candidate maximizing
//   score(d) = I(A; d) - alpha * I(d; S) + beta * I(d; S | A)
// which at alpha = 1, beta = 1 telescopes back to the exact greedy objective.
Selection select_mrmr(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k,
                      double alpha, double beta);

Selection run_selector(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k,
                       const SelectorConfig& cfg);

// One-line JSON record of a selection for manifests and logs.
std::string selection_to_json(const Selection& sel, std::size_t level);

}  // namespace mipr
