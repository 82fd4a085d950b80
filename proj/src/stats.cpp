#include "mipr/stats.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mipr {

LayerPairStats::LayerPairStats(std::size_t level, std::size_t lower_dim, std::size_t upper_dim)
    : level_(level), d_lo_(lower_dim), d_hi_(upper_dim) {
    if (lower_dim == 0 || upper_dim == 0)
        throw std::invalid_argument("stats: zero-width layer pair");
    mean_.assign(dim(), 0.0);
    m2_ = Mat(dim(), dim());
    x_.resize(dim());
    dx_.resize(dim());
}

void LayerPairStats::update_row(const double* lower, const double* upper) {
    const std::size_t d = dim();
    for (std::size_t i = 0; i < d_lo_; ++i) x_[i] = lower[i];
    for (std::size_t i = 0; i < d_hi_; ++i) x_[d_lo_ + i] = upper[i];

    ++n_;
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < d; ++i) {
        dx_[i] = x_[i] - mean_[i];
        mean_[i] += dx_[i] * inv_n;
    }
    // dx holds x - old mean; x_ is reused for x - new mean. Welford's pairwise
    // form keeps the accumulator exact in one pass.
    for (std::size_t i = 0; i < d; ++i) x_[i] -= mean_[i];
    for (std::size_t i = 0; i < d; ++i) {
        const double di = dx_[i];
        double* mi = m2_.row(i);
        for (std::size_t j = i; j < d; ++j) mi[j] += di * x_[j];
    }
}

void LayerPairStats::merge(const LayerPairStats& other) {
    if (other.level_ != level_ || other.d_lo_ != d_lo_ || other.d_hi_ != d_hi_)
        throw std::invalid_argument("stats: merging accumulators of different shapes");
    if (other.n_ == 0) return;
    if (n_ == 0) {
        n_ = other.n_;
        mean_ = other.mean_;
        m2_ = other.m2_;
        return;
    }
    const std::size_t d = dim();
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double n = na + nb;
    for (std::size_t i = 0; i < d; ++i) dx_[i] = other.mean_[i] - mean_[i];
    for (std::size_t i = 0; i < d; ++i) mean_[i] += dx_[i] * (nb / n);
    const double w = na * nb / n;
    for (std::size_t i = 0; i < d; ++i) {
        double* mi = m2_.row(i);
        const double* oi = other.m2_.row(i);
        for (std::size_t j = i; j < d; ++j) mi[j] += oi[j] + dx_[i] * dx_[j] * w;
    }
    n_ += other.n_;
}

Mat LayerPairStats::co_moment() const {
    const std::size_t d = dim();
    Mat out(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) = i <= j ? m2_(i, j) : m2_(j, i);
    return out;
}

void LayerPairStats::restore(std::size_t n, Vec mean, Mat m2_upper) {
    if (mean.size() != dim() || m2_upper.rows != dim() || m2_upper.cols != dim())
        throw std::invalid_argument("stats: restore shape mismatch");
    n_ = n;
    mean_ = std::move(mean);
    m2_ = std::move(m2_upper);
}

CovarianceModel CovarianceModel::from_matrix(Mat sigma, std::size_t split, Vec mean) {
    if (sigma.rows != sigma.cols || sigma.rows == 0)
        throw std::invalid_argument("covariance: matrix must be square and nonempty");
    if (split >= sigma.rows)
        throw std::invalid_argument("covariance: split must leave both sides nonempty");
    for (std::size_t i = 0; i < sigma.rows; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-12 * (1.0 + std::abs(sigma(i, j))))
                throw std::invalid_argument("covariance: matrix is not symmetric");
    try {
        cholesky(sigma);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("covariance: matrix is not positive definite");
    }
    CovarianceModel cm;
    if (mean.empty()) mean.assign(sigma.rows, 0.0);
    if (mean.size() != sigma.rows) throw std::invalid_argument("covariance: mean size mismatch");
    cm.mean = std::move(mean);
    cm.sigma = std::move(sigma);
    cm.split = split;
    return cm;
}

CovarianceModel finalize(const LayerPairStats& stats, double ridge_scale) {
    if (stats.count() < 2)
        throw std::invalid_argument("finalize: need at least two samples");
    if (ridge_scale < 0.0) throw std::invalid_argument("finalize: negative ridge scale");
    const std::size_t d = stats.dim();
    Mat sigma = stats.co_moment();
    const double inv_n = 1.0 / static_cast<double>(stats.count());
    for (double& v : sigma.data) v *= inv_n;

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += sigma(i, i);
    // Degenerate (e.g. constant) activations give a zero trace; fall back to a
    // unit scale so the ridge still produces a usable model.
    const double scale = trace > 0.0 ? trace / static_cast<double>(d) : 1.0;
    double lambda = ridge_scale * scale;

    for (int attempt = 0; attempt < 4; ++attempt) {
        Mat ridged = sigma;
        for (std::size_t i = 0; i < d; ++i) ridged(i, i) += lambda;
        try {
            cholesky(ridged);
            CovarianceModel cm;
            cm.mean = stats.mean();
            cm.sigma = std::move(ridged);
            cm.split = stats.lower_dim();
            cm.ridge = lambda;
            return cm;
        } catch (const std::runtime_error&) {
            lambda = std::max(lambda * 10.0, 1e-12 * scale);
        }
    }
    throw std::runtime_error("finalize: covariance is not positive definite even after ridging");
}

double logdet_principal(const CovarianceModel& cov, const IndexSet& set) {
    validate_index_set(set, cov.dim(), "logdet_principal");
    const Mat sub = submatrix(cov.sigma, set, set);
    return logdet_pd(sub);
}

std::vector<LayerPairStats> collect(const Network& net, const Dataset& data,
                                    const MaskSet* masks, std::size_t sample_cap,
                                    std::uint64_t seed) {
    net.validate();
    if (data.size() == 0) throw std::invalid_argument("collect: empty dataset");
    if (data.inputs.cols != net.input_dim)
        throw std::invalid_argument("collect: dataset width does not match the network");
    if (sample_cap == 0) throw std::invalid_argument("collect: sample cap must be positive");

    std::vector<std::size_t> rows;
    if (data.size() > sample_cap) {
        Rng rng(seed);
        rows = rng.sample_without_replacement(data.size(), sample_cap);
    } else {
        rows.resize(data.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }

    const auto dims = net.level_dims();
    std::vector<LayerPairStats> pairs;
    pairs.reserve(net.depth());
    for (std::size_t l = 0; l < net.depth(); ++l)
        pairs.emplace_back(l, dims[l], dims[l + 1]);

    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < rows.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, rows.size());
        Mat block(end - start, net.input_dim);
        for (std::size_t i = start; i < end; ++i) {
            const double* src = data.inputs.row(rows[i]);
            std::copy(src, src + net.input_dim, block.row(i - start));
        }
        const ForwardResult fwd = forward(net, block, masks);
        for (std::size_t lvl = 0; lvl < fwd.activations.size(); ++lvl) {
            const Mat& a = fwd.activations[lvl];
            for (std::size_t i = 0; i < a.rows; ++i) {
                const double* r = a.row(i);
                for (std::size_t j = 0; j < a.cols; ++j)
                    if (!std::isfinite(r[j]))
                        throw std::runtime_error(
                            "collect: non-finite activation at level " + std::to_string(lvl) +
                            ", dataset row " + std::to_string(rows[start + i]));
            }
        }
        for (std::size_t l = 0; l < net.depth(); ++l) {
            const Mat& lo = fwd.activations[l];
            const Mat& hi = fwd.activations[l + 1];
            for (std::size_t i = 0; i < lo.rows; ++i)
                pairs[l].update_row(lo.row(i), hi.row(i));
        }
    }
    return pairs;
}

namespace {

constexpr char kStatsMagic[4] = {'M', 'I', 'S', 'T'};
constexpr std::uint32_t kStatsVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

class StatsReader {
public:
    StatsReader(const std::string& buf, std::size_t limit) : buf_(buf), limit_(limit) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > limit_) throw std::runtime_error("stats file: truncated");
    }
    const std::string& buf_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_stats(const std::vector<LayerPairStats>& stats, const std::string& path) {
    std::string buf;
    buf.append(kStatsMagic, 4);
    put_u32(buf, kStatsVersion);
    put_u32(buf, static_cast<std::uint32_t>(stats.size()));
    for (const auto& s : stats) {
        put_u64(buf, s.level());
        put_u64(buf, s.lower_dim());
        put_u64(buf, s.upper_dim());
        put_u64(buf, s.count());
        for (double v : s.mean()) put_f64(buf, v);
        const Mat& m2 = s.co_moment_upper();
        for (std::size_t i = 0; i < s.dim(); ++i)
            for (std::size_t j = i; j < s.dim(); ++j) put_f64(buf, m2(i, j));
    }
    const std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_stats: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_stats: write failed for " + path);
}

std::vector<LayerPairStats> load_stats(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_stats: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 16) throw std::runtime_error("stats file: truncated");
    if (std::memcmp(buf.data(), kStatsMagic, 4) != 0)
        throw std::runtime_error("stats file: bad magic");

    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[buf.size() - 4 + i]))
                  << (8 * i);
    const std::uint32_t crc = static_cast<std::uint32_t>(::crc32(
        0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));

    StatsReader r(buf, buf.size() - 4);
    r.u32();  // magic
    if (r.u32() != kStatsVersion) throw std::runtime_error("stats file: unsupported version");
    const std::uint32_t n_pairs = r.u32();
    std::vector<LayerPairStats> out;
    for (std::uint32_t p = 0; p < n_pairs; ++p) {
        const std::size_t level = static_cast<std::size_t>(r.u64());
        const std::size_t d_lo = static_cast<std::size_t>(r.u64());
        const std::size_t d_hi = static_cast<std::size_t>(r.u64());
        if (d_lo == 0 || d_hi == 0 || d_lo > (1u << 24) || d_hi > (1u << 24))
            throw std::runtime_error("stats file: implausible dimensions");
        const std::size_t n = static_cast<std::size_t>(r.u64());
        LayerPairStats s(level, d_lo, d_hi);
        Vec mean(s.dim());
        for (double& v : mean) v = r.f64();
        Mat m2(s.dim(), s.dim());
        for (std::size_t i = 0; i < s.dim(); ++i)
            for (std::size_t j = i; j < s.dim(); ++j) m2(i, j) = r.f64();
        s.restore(n, std::move(mean), std::move(m2));
        out.push_back(std::move(s));
    }
    if (r.pos() != buf.size() - 4) throw std::runtime_error("stats file: trailing bytes");
    if (stored != crc) throw std::runtime_error("stats file: checksum mismatch");
    return out;
}

}  // namespace mipr
