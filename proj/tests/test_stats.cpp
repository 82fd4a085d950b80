#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "mipr/nn.hpp"
#include "mipr/rng.hpp"
#include "mipr/stats.hpp"

using namespace mipr;

namespace {

// Independent two-pass oracle: mean, then sum of centered outer products.
struct TwoPass {
    Vec mean;
    Mat m2;
};

TwoPass two_pass(const std::vector<Vec>& rows) {
    const std::size_t n = rows.size();
    const std::size_t d = rows[0].size();
    TwoPass out;
    out.mean.assign(d, 0.0);
    for (const Vec& r : rows)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += r[j];
    for (double& m : out.mean) m /= static_cast<double>(n);
    out.m2 = Mat(d, d);
    for (const Vec& r : rows)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                out.m2(i, j) += (r[i] - out.mean[i]) * (r[j] - out.mean[j]);
    return out;
}

std::vector<Vec> random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> rows(n, Vec(d));
    for (auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) r[j] = rng.normal(0.5 * static_cast<double>(j), 1.5);
        // Correlate a pair of coordinates so the covariance is not diagonal.
        if (d >= 2) r[1] = 0.7 * r[0] + 0.3 * r[1];
    }
    return rows;
}

void feed(LayerPairStats& s, const std::vector<Vec>& rows) {
    const std::size_t lo = s.lower_dim();
    for (const Vec& r : rows) s.update_row(r.data(), r.data() + lo);
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mipr_stats_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("streaming moments equal the two-pass oracle") {
    const auto rows = random_rows(500, 6, 42);
    LayerPairStats s(0, 4, 2);
    feed(s, rows);
    CHECK(s.count() == 500);
    const TwoPass oracle = two_pass(rows);
    const Mat m2 = s.co_moment();
    for (std::size_t j = 0; j < 6; ++j)
        CHECK(s.mean()[j] == doctest::Approx(oracle.mean[j]).epsilon(1e-12));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(m2(i, j) == doctest::Approx(oracle.m2(i, j)).epsilon(1e-9));
            CHECK(m2(i, j) == m2(j, i));  // exact symmetry by construction
        }
}

TEST_CASE("merging split halves equals one pass over everything") {
    const auto rows = random_rows(301, 5, 7);  // odd count to exercise uneven halves
    LayerPairStats whole(1, 3, 2), left(1, 3, 2), right(1, 3, 2);
    feed(whole, rows);
    feed(left, std::vector<Vec>(rows.begin(), rows.begin() + 100));
    feed(right, std::vector<Vec>(rows.begin() + 100, rows.end()));
    left.merge(right);
    CHECK(left.count() == whole.count());
    const Mat a = left.co_moment();
    const Mat b = whole.co_moment();
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(left.mean()[j] == doctest::Approx(whole.mean()[j]).epsilon(1e-12));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(a(i, j) == doctest::Approx(b(i, j)).epsilon(1e-9));

    // Merging an empty accumulator is a no-op.
    LayerPairStats empty(1, 3, 2);
    const Mat before = left.co_moment();
    left.merge(empty);
    CHECK(left.co_moment().data == before.data);
}

TEST_CASE("finalize applies the documented ridge and population normalization") {
    const auto rows = random_rows(200, 4, 9);
    LayerPairStats s(0, 2, 2);
    feed(s, rows);
    const CovarianceModel cov = finalize(s, 1e-6);
    CHECK(cov.split == 2);
    CHECK(cov.dim() == 4);

    const TwoPass oracle = two_pass(rows);
    Mat expected(4, 4);
    double trace = 0.0;
    for (std::size_t i = 0; i < 4; ++i) trace += oracle.m2(i, i) / 200.0;
    const double lambda = 1e-6 * trace / 4.0;
    CHECK(cov.ridge == doctest::Approx(lambda).epsilon(1e-9));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double base = oracle.m2(i, j) / 200.0;
            const double want = base + (i == j ? lambda : 0.0);
            CHECK(cov.sigma(i, j) == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("finalize escalates the ridge for degenerate data") {
    // Identical rows: zero covariance, trace zero. The ridge fallback must
    // still produce a positive-definite matrix.
    LayerPairStats s(0, 2, 1);
    const Vec row = {1.0, 2.0, 3.0};
    for (int i = 0; i < 50; ++i) s.update_row(row.data(), row.data() + 2);
    const CovarianceModel cov = finalize(s, 1e-6);
    CHECK(cov.ridge > 0.0);
    CHECK(std::isfinite(logdet_principal(cov, {0, 1, 2})));

    // Duplicated coordinate: singular without the ridge.
    LayerPairStats dup(0, 2, 1);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.normal();
        const Vec r = {x, x, rng.normal()};
        dup.update_row(r.data(), r.data() + 2);
    }
    const CovarianceModel dcov = finalize(dup, 1e-6);
    CHECK(std::isfinite(logdet_principal(dcov, {0, 1, 2})));
}

TEST_CASE("finalize requires observations") {
    LayerPairStats s(0, 2, 1);
    CHECK_THROWS_AS(finalize(s), std::invalid_argument);
}

TEST_CASE("logdet_principal matches a direct factorization of the submatrix") {
    const auto rows = random_rows(300, 5, 11);
    LayerPairStats s(0, 3, 2);
    feed(s, rows);
    const CovarianceModel cov = finalize(s);
    const IndexSet set = {0, 2, 4};
    const Mat sub = submatrix(cov.sigma, set, set);
    CHECK(logdet_principal(cov, set) == doctest::Approx(logdet_pd(sub)).epsilon(1e-10));
}

TEST_CASE("CovarianceModel::from_matrix validates shape and definiteness") {
    Mat ok(2, 2);
    ok.data = {2, 0.5, 0.5, 1};
    CHECK_NOTHROW(CovarianceModel::from_matrix(ok, 1));
    Mat asym(2, 2);
    asym.data = {2, 0.4, 0.5, 1};
    CHECK_THROWS_AS(CovarianceModel::from_matrix(asym, 1), std::invalid_argument);
    Mat indef(2, 2);
    indef.data = {1, 2, 2, 1};
    CHECK_THROWS_AS(CovarianceModel::from_matrix(indef, 1), std::invalid_argument);
    CHECK_THROWS_AS(CovarianceModel::from_matrix(ok, 3), std::invalid_argument);
}

TEST_CASE("collect walks every layer pair with consistent dimensions") {
    const Network net = make_mlp(4, {6, 5}, 3, Activation::Tanh, 21);
    Rng rng(2);
    Dataset data;
    data.n_classes = 3;
    data.inputs = Mat(120, 4);
    for (double& v : data.inputs.data) v = rng.normal();
    data.labels.assign(120, 0);
    for (std::size_t i = 0; i < 120; ++i) data.labels[i] = static_cast<int>(i % 3);

    const auto stats = collect(net, data);
    REQUIRE(stats.size() == 3);  // one per layer pair
    const auto dims = net.level_dims();
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(stats[l].level() == l);
        CHECK(stats[l].lower_dim() == dims[l]);
        CHECK(stats[l].upper_dim() == dims[l + 1]);
        CHECK(stats[l].count() == 120);
    }

    // The lower block of pair 0 is the raw input: its moments must match the
    // two-pass oracle on the dataset itself.
    std::vector<Vec> rows(120, Vec(4));
    for (std::size_t i = 0; i < 120; ++i)
        for (std::size_t j = 0; j < 4; ++j) rows[i][j] = data.inputs(i, j);
    const TwoPass oracle = two_pass(rows);
    const Mat m2 = stats[0].co_moment();
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(m2(i, j) == doctest::Approx(oracle.m2(i, j)).epsilon(1e-9));

    // Deterministic subsampling: equal caps agree, a different cap differs.
    const auto a = collect(net, data, nullptr, 50, 123);
    const auto b = collect(net, data, nullptr, 50, 123);
    CHECK(a[0].count() == 50);
    CHECK(a[0].co_moment().data == b[0].co_moment().data);
}

TEST_CASE("masked collection sees zeros at dropped positions") {
    const Network net = make_mlp(4, {5}, 2, Activation::Tanh, 33);
    const MaskSet masks = MaskSet::from_kept(net.level_dims(), {{0, 1, 2, 3}, {1, 4}, {0, 1}});
    Rng rng(5);
    Dataset data;
    data.n_classes = 2;
    data.inputs = Mat(80, 4);
    for (double& v : data.inputs.data) v = rng.normal();
    data.labels.assign(80, 0);

    const auto stats = collect(net, data, &masks);
    // Upper block of pair 0 holds level-1 activations; dropped dims 0,2,3 are
    // exactly zero, so their mean and variance vanish.
    const Mat m2 = stats[0].co_moment();
    for (std::size_t d : {0u, 2u, 3u}) {
        CHECK(stats[0].mean()[4 + d] == 0.0);
        CHECK(m2(4 + d, 4 + d) == 0.0);
    }
    CHECK(m2(4 + 1, 4 + 1) > 0.0);
}

TEST_CASE("stats files round-trip the raw accumulators") {
    TempDir tmp;
    const auto rows = random_rows(150, 5, 17);
    LayerPairStats a(0, 3, 2), b(1, 2, 3);
    feed(a, rows);
    for (const Vec& r : rows) b.update_row(r.data(), r.data() + 2);
    const std::string path = tmp.file("stats.mist");
    save_stats({a, b}, path);
    const auto loaded = load_stats(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].level() == 0);
    CHECK(loaded[1].level() == 1);
    CHECK(loaded[0].count() == a.count());
    CHECK(loaded[0].mean() == a.mean());
    CHECK(loaded[0].co_moment_upper().data == a.co_moment_upper().data);
    CHECK(loaded[1].co_moment_upper().data == b.co_moment_upper().data);

    // Loaded accumulators stay mergeable: continue feeding and compare with a
    // single-pass accumulator over the concatenation.
    LayerPairStats cont = loaded[0];
    const auto more = random_rows(80, 5, 18);
    feed(cont, more);
    LayerPairStats whole(0, 3, 2);
    feed(whole, rows);
    feed(whole, more);
    const Mat ca = cont.co_moment(), cb = whole.co_moment();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(ca(i, j) == doctest::Approx(cb(i, j)).epsilon(1e-9));

    // Corruption is detected.
    std::ifstream in(path, std::ios::binary);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    buf[buf.size() / 2] = static_cast<char>(buf[buf.size() / 2] ^ 0x01);
    const std::string bad = tmp.file("bad.mist");
    std::ofstream out(bad, std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.close();
    CHECK_THROWS(load_stats(bad));
}
