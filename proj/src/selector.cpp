#include "mipr/selector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mipr {

const char* to_string(SelectorMode m) {
    switch (m) {
        case SelectorMode::ExactGreedy: return "exact";
        case SelectorMode::Mrmr: return "mrmr";
    }
    return "?";
}

SelectorMode selector_mode_from_string(const std::string& s) {
    if (s == "exact") return SelectorMode::ExactGreedy;
    if (s == "mrmr") return SelectorMode::Mrmr;
    throw std::invalid_argument("unknown selector mode: " + s);
}

IndexSet Selection::chosen_sorted() const {
    IndexSet s = chosen;
    std::sort(s.begin(), s.end());
    return s;
}

namespace {

void check_selection_args(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k) {
    validate_index_set(upper_set, cov.dim(), "selector: upper set");
    for (std::size_t i : upper_set)
        if (i < cov.split)
            throw std::invalid_argument("selector: upper set must live above the split");
    if (k == 0 || k > cov.split)
        throw std::invalid_argument("selector: k must be in [1, lower width]");
}

}  // namespace

Selection select_exact(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k) {
    check_selection_args(cov, upper_set, k);
    GreedyState st(cov, upper_set);
    Selection sel;
    sel.mode = SelectorMode::ExactGreedy;

    std::vector<std::uint8_t> chosen_mask(cov.split, 0);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = cov.split;
        double best_gain = 0.0;
        for (std::size_t d = 0; d < cov.split; ++d) {
            if (chosen_mask[d]) continue;
            const double g = st.gain(d);
            if (best == cov.split || g > best_gain) {
                best = d;
                best_gain = g;
            }
        }
        st.extend(best);
        chosen_mask[best] = 1;
        sel.chosen.push_back(best);
        sel.trace.push_back(st.objective());
    }
    sel.objective = st.objective();
    return sel;
}

Selection select_mrmr(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k,
                      double alpha, double beta) {
    check_selection_args(cov, upper_set, k);
    GreedyState st(cov, upper_set);
    Selection sel;
    sel.mode = SelectorMode::Mrmr;
    sel.alpha = alpha;
    sel.beta = beta;

    // The conditioning set never changes, so per-candidate relevance and the
    // pivot against the upper factor are computed once.
    Vec ln_piv_a(cov.split), rel(cov.split);
    for (std::size_t d = 0; d < cov.split; ++d) {
        ln_piv_a[d] = std::log(st.upper_pivot(d));
        rel[d] = 0.5 * (std::log(cov.sigma(d, d)) - ln_piv_a[d]);
    }

    std::vector<std::uint8_t> chosen_mask(cov.split, 0);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = cov.split;
        double best_score = 0.0;
        for (std::size_t d = 0; d < cov.split; ++d) {
            if (chosen_mask[d]) continue;
            double redundancy = 0.0, cond_redundancy = 0.0;
            if (step > 0) {
                redundancy = 0.5 * (std::log(cov.sigma(d, d)) - std::log(st.lower_pivot(d)));
                cond_redundancy = 0.5 * (ln_piv_a[d] - std::log(st.joint_pivot(d)));
            }
            const double score = rel[d] - alpha * redundancy + beta * cond_redundancy;
            if (best == cov.split || score > best_score) {
                best = d;
                best_score = score;
            }
        }
        st.extend(best);
        chosen_mask[best] = 1;
        sel.chosen.push_back(best);
        sel.trace.push_back(best_score);
    }
    sel.objective = st.objective();
    return sel;
}

Selection run_selector(const CovarianceModel& cov, const IndexSet& upper_set, std::size_t k,
                       const SelectorConfig& cfg) {
    switch (cfg.mode) {
        case SelectorMode::ExactGreedy: return select_exact(cov, upper_set, k);
        case SelectorMode::Mrmr: return select_mrmr(cov, upper_set, k, cfg.alpha, cfg.beta);
    }
    throw std::invalid_argument("selector: unknown mode");
}

std::string selection_to_json(const Selection& sel, std::size_t level) {
    std::string out = "{\"level\":" + std::to_string(level);
    out += ",\"mode\":\"" + std::string(to_string(sel.mode)) + "\"";
    char num[64];
    std::snprintf(num, sizeof(num), "%.17g", sel.alpha);
    out += ",\"alpha\":" + std::string(num);
    std::snprintf(num, sizeof(num), "%.17g", sel.beta);
    out += ",\"beta\":" + std::string(num);
    out += ",\"chosen\":[";
    for (std::size_t i = 0; i < sel.chosen.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(sel.chosen[i]);
    }
    out += "],\"trace\":[";
    for (std::size_t i = 0; i < sel.trace.size(); ++i) {
        if (i) out += ",";
        std::snprintf(num, sizeof(num), "%.17g", sel.trace[i]);
        out += num;
    }
    out += "],\"objective\":";
    std::snprintf(num, sizeof(num), "%.17g", sel.objective);
    out += num;
    out += "}";
    return out;
}

}  // namespace mipr
