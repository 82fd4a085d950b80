#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mipr {

using Vec = std::vector<double>;

// Sorted, deduplicated list of indices into a vector space.
using IndexSet = std::vector<std::size_t>;

// Dense row-major matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }

    static Mat identity(std::size_t n);
};

Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, const Vec& x);
Mat transpose(const Mat& a);

// a[row_idx, col_idx]; index sets must be within bounds.
Mat submatrix(const Mat& a, const IndexSet& row_idx, const IndexSet& col_idx);
Mat select_columns(const Mat& a, const IndexSet& col_idx);
Vec gather(const Vec& v, const IndexSet& idx);

bool all_finite(const Mat& a);
bool all_finite(const Vec& v);

// Cholesky factor L with A = L * L^T for symmetric positive definite A.
// Throws std::runtime_error if a pivot is not strictly positive.
Mat cholesky(const Mat& a);

// log(det(A)) for symmetric positive definite A, via Cholesky.
double logdet_pd(const Mat& a);

// Solve L y = b for lower-triangular L (forward substitution).
Vec solve_lower(const Mat& L, const Vec& b);

// Throws std::invalid_argument unless `set` is sorted, deduplicated, nonempty
// and within [0, dim). `what` names the argument in the error message.
void validate_index_set(const IndexSet& set, std::size_t dim, const std::string& what);

// True when the two sorted sets share no element.
bool disjoint(const IndexSet& a, const IndexSet& b);

// Merge two sorted disjoint sets into one sorted set.
IndexSet set_union(const IndexSet& a, const IndexSet& b);

}  // namespace mipr
