#include "mipr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mipr {

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Mat out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* outr = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ar[k];
            if (aik == 0.0) continue;
            const double* br = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) outr[j] += aik * br[j];
        }
    }
    return out;
}

Vec matvec(const Mat& a, const Vec& x) {
    if (a.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += ar[j] * x[j];
        y[i] = s;
    }
    return y;
}

Mat transpose(const Mat& a) {
    Mat out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

Mat submatrix(const Mat& a, const IndexSet& row_idx, const IndexSet& col_idx) {
    Mat out(row_idx.size(), col_idx.size());
    for (std::size_t i = 0; i < row_idx.size(); ++i) {
        if (row_idx[i] >= a.rows) throw std::invalid_argument("submatrix: row index out of range");
        const double* ar = a.row(row_idx[i]);
        double* outr = out.row(i);
        for (std::size_t j = 0; j < col_idx.size(); ++j) {
            if (col_idx[j] >= a.cols) throw std::invalid_argument("submatrix: column index out of range");
            outr[j] = ar[col_idx[j]];
        }
    }
    return out;
}

Mat select_columns(const Mat& a, const IndexSet& col_idx) {
    Mat out(a.rows, col_idx.size());
    for (std::size_t j = 0; j < col_idx.size(); ++j)
        if (col_idx[j] >= a.cols) throw std::invalid_argument("select_columns: index out of range");
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* outr = out.row(i);
        for (std::size_t j = 0; j < col_idx.size(); ++j) outr[j] = ar[col_idx[j]];
    }
    return out;
}

Vec gather(const Vec& v, const IndexSet& idx) {
    Vec out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= v.size()) throw std::invalid_argument("gather: index out of range");
        out[i] = v[idx[i]];
    }
    return out;
}

bool all_finite(const Mat& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

Mat cholesky(const Mat& a) {
    if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix is not square");
    const std::size_t n = a.rows;
    Mat L(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            const double* Li = L.row(i);
            const double* Lj = L.row(j);
            for (std::size_t k = 0; k < j; ++k) s -= Li[k] * Lj[k];
            if (i == j) {
                if (!(s > 0.0)) throw std::runtime_error("cholesky: matrix is not positive definite");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return L;
}

double logdet_pd(const Mat& a) {
    const Mat L = cholesky(a);
    double s = 0.0;
    for (std::size_t i = 0; i < L.rows; ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

Vec solve_lower(const Mat& L, const Vec& b) {
    if (L.rows != L.cols || L.rows != b.size())
        throw std::invalid_argument("solve_lower: dimension mismatch");
    Vec y(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        double s = b[i];
        const double* Li = L.row(i);
        for (std::size_t j = 0; j < i; ++j) s -= Li[j] * y[j];
        y[i] = s / Li[i];
    }
    return y;
}

void validate_index_set(const IndexSet& set, std::size_t dim, const std::string& what) {
    if (set.empty()) throw std::invalid_argument(what + ": index set is empty");
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i] >= dim) throw std::invalid_argument(what + ": index out of range");
        if (i > 0 && set[i] <= set[i - 1])
            throw std::invalid_argument(what + ": index set must be sorted and deduplicated");
    }
}

bool disjoint(const IndexSet& a, const IndexSet& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return false;
        if (a[i] < b[j])
            ++i;
        else
            ++j;
    }
    return true;
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
    IndexSet out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace mipr
