#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "shiftgen/metrics.hpp"
#include "test_util.hpp"

using namespace shiftgen;
using namespace shiftgen::metrics;

namespace {

Matrix column(std::initializer_list<double> vals) {
    Matrix m(vals.size(), 1);
    std::size_t i = 0;
    for (double v : vals) m(i++, 0) = v;
    return m;
}

// Independent O(n^2) estimator written from the U/V statistic definitions.
double mmd_brute(const Matrix& x, const Matrix& y, double sigma, bool unbiased) {
    auto k = [&](VecView a, VecView b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::exp(-s / (2.0 * sigma * sigma));
    };
    const double m = static_cast<double>(x.rows()), n = static_cast<double>(y.rows());
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.rows(); ++j)
            if (!unbiased || i != j) xx += k(x.row(i), x.row(j));
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j)
            if (!unbiased || i != j) yy += k(y.row(i), y.row(j));
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j) xy += k(x.row(i), y.row(j));
    if (unbiased) return xx / (m * (m - 1)) + yy / (n * (n - 1)) - 2.0 * xy / (m * n);
    return xx / (m * m) + yy / (n * n) - 2.0 * xy / (m * n);
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("median heuristic on enumerable point sets") {
    CHECK(median_heuristic(column({0.0}), column({2.0})) == doctest::Approx(2.0));
    // pairwise distances of {0,1,2} are {1,1,2}
    CHECK(median_heuristic(column({0.0, 1.0}), column({2.0})) == doctest::Approx(1.0));
}

TEST_CASE("median heuristic rejects coincident points") {
    CHECK_THROWS_AS(median_heuristic(column({1.0, 1.0}), column({1.0})), NumericalError);
}

TEST_CASE("median heuristic scales linearly with the cloud") {
    Rng rng(2);
    const Matrix x = testutil::random_cloud(rng, 40, 3);
    const Matrix y = testutil::random_cloud(rng, 30, 3);
    const double base = median_heuristic(x, y);
    Matrix xs = x, ys = y;
    for (double& v : xs.data()) v *= 5.0;
    for (double& v : ys.data()) v *= 5.0;
    CHECK(median_heuristic(xs, ys) == doctest::Approx(5.0 * base));
}

TEST_CASE("median heuristic subsample is deterministic for large pools") {
    Rng rng(3);
    const Matrix x = testutil::random_cloud(rng, 2600, 2);
    const Matrix y = testutil::random_cloud(rng, 900, 2);
    const double a = median_heuristic(x, y);
    const double b = median_heuristic(x, y);
    CHECK(a == b);
    CHECK(a > 0.0);
}

TEST_CASE("subsample_rows keeps small inputs and strides large ones") {
    Rng rng(4);
    const Matrix x = testutil::random_cloud(rng, 10, 2);
    CHECK(subsample_rows(x, 10).rows() == 10);
    const Matrix s = subsample_rows(x, 4);
    CHECK(s.rows() <= 4);
    CHECK(s.row_vec(0) == x.row_vec(0));  // first row always kept
}

TEST_CASE("mmd between a sample and itself") {
    Rng rng(5);
    const Matrix x = testutil::random_cloud(rng, 25, 3);
    CHECK(std::fabs(mmd(x, x, {.sigma = 1.3, .unbiased = false})) < 1e-12);
}

TEST_CASE("mmd hand-expanded two-point case") {
    const Matrix x = column({0.0, 2.0});
    const double got = mmd(x, x, {.sigma = 1.0, .unbiased = true});
    CHECK(got == doctest::Approx(std::exp(-2.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("mmd estimators match an independent brute-force oracle") {
    Rng rng(6);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix x = testutil::random_cloud(rng, 12 + rep, 2);
        const Matrix y = testutil::random_cloud(rng, 9 + rep, 2, 0.5);
        for (bool unb : {false, true}) {
            const double got = mmd(x, y, {.sigma = 0.9, .unbiased = unb});
            const double want = mmd_brute(x, y, 0.9, unb);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("mmd is symmetric and the biased estimator is nonnegative") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix x = testutil::random_cloud(rng, 15, 2);
        const Matrix y = testutil::random_cloud(rng, 11, 2, 1.0 + rep * 0.2);
        const MmdConfig cfg{.sigma = 1.0, .unbiased = (rep % 2 == 0)};
        CHECK(mmd(x, y, cfg) == doctest::Approx(mmd(y, x, cfg)).epsilon(1e-12));
        CHECK(mmd(x, y, {.sigma = 1.0, .unbiased = false}) >= 0.0);
    }
}

TEST_CASE("mmd null scale at n=2000") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(100 + seed);
        const Matrix x = testutil::random_cloud(rng, 2000, 1);
        const Matrix y = testutil::random_cloud(rng, 2000, 1);
        worst = std::max(worst, std::fabs(mmd(x, y, {.sigma = 1.0, .unbiased = true})));
    }
    CHECK(worst < 0.01);
}

TEST_CASE("mmd input validation") {
    const Matrix x = column({0.0, 1.0});
    CHECK_THROWS_AS(mmd(x, x, {.sigma = 0.0, .unbiased = false}), std::invalid_argument);
    CHECK_THROWS_AS(mmd(column({0.0}), x, {.sigma = 1.0, .unbiased = true}),
                    std::invalid_argument);
}

TEST_CASE("ks statistic on enumerable cases") {
    const Matrix a = column({0.0, 1.0});
    CHECK(ks_per_coordinate(a, a)[0] == 0.0);
    CHECK(ks_per_coordinate(column({0.0}), column({1.0}))[0] == doctest::Approx(1.0));
    CHECK(ks_per_coordinate(a, column({0.5, 1.5}))[0] == doctest::Approx(0.5));
}

TEST_CASE("ks values stay in [0,1] and ignore monotone reparameterization") {
    Rng rng(8);
    const Matrix x = testutil::random_cloud(rng, 60, 3);
    const Matrix y = testutil::random_cloud(rng, 45, 3, 0.7);
    const Vec base = ks_per_coordinate(x, y);
    Matrix xe = x, ye = y;
    for (double& v : xe.data()) v = std::exp(v);
    for (double& v : ye.data()) v = std::exp(v);
    const Vec after = ks_per_coordinate(xe, ye);
    for (std::size_t c = 0; c < base.size(); ++c) {
        CHECK(base[c] >= 0.0);
        CHECK(base[c] <= 1.0);
        CHECK(after[c] == doctest::Approx(base[c]).epsilon(1e-12));
    }
}

TEST_CASE("corr_diff of a sample with itself is zero") {
    Rng rng(9);
    const Matrix x = testutil::random_cloud(rng, 50, 4);
    const auto cmp = corr_diff(x, x);
    CHECK(cmp.frobenius == 0.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(cmp.corr_x(i, i) == 1.0);
}

TEST_CASE("corr_diff separates correlated from independent pairs") {
    Rng rng(10);
    const std::size_t n = 5000;
    Matrix corr(n, 2), indep(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        corr(i, 0) = z;
        corr(i, 1) = z;  // perfectly correlated
        indep(i, 0) = rng.normal();
        indep(i, 1) = rng.normal();
    }
    const auto cmp = corr_diff(corr, indep);
    CHECK(cmp.corr_x(0, 1) == doctest::Approx(1.0));
    CHECK(std::fabs(cmp.corr_y(0, 1)) < 0.05);
    CHECK(cmp.frobenius == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("corr_diff null check on independent coordinates") {
    Rng rng(11);
    const auto cmp =
        corr_diff(testutil::random_cloud(rng, 5000, 3), testutil::random_cloud(rng, 5000, 3));
    CHECK(cmp.frobenius < 0.1);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(cmp.corr_x(i, j) <= 1.0);
            CHECK(cmp.corr_x(i, j) >= -1.0);
        }
}

TEST_CASE("corr_diff names a zero-variance coordinate") {
    Matrix x(3, 2);
    x(0, 0) = 1.0;
    x(1, 0) = 2.0;
    x(2, 0) = 3.0;  // column 1 stays constant at 0
    CHECK_THROWS_WITH_AS(corr_diff(x, x), doctest::Contains("coordinate 1"), DataError);
}

TEST_CASE("ecdf export writes sorted per-coordinate tables") {
    Matrix x(2, 2);
    x(0, 0) = 3.0;
    x(0, 1) = -1.0;
    x(1, 0) = 1.0;
    x(1, 1) = 4.0;
    const auto path = std::filesystem::temp_directory_path() / "shiftgen_ecdf.csv";
    write_ecdf_csv(path, x);
    const Csv back = read_csv(path);
    REQUIRE(back.columns == std::vector<std::string>{"coordinate", "value", "cdf"});
    REQUIRE(back.values.rows() == 4);
    // coordinate 0: values sorted to {1,3} with cdf {0.5,1}
    CHECK(back.values(0, 1) == 1.0);
    CHECK(back.values(0, 2) == 0.5);
    CHECK(back.values(1, 1) == 3.0);
    CHECK(back.values(1, 2) == 1.0);
    std::filesystem::remove(path);
}

TEST_CASE("permutation test accepts the null and rejects a clear shift") {
    const TwoSampleStat mean_gap = [](const Matrix& a, const Matrix& b) {
        return std::fabs(testutil::mean_of(a.data()) - testutil::mean_of(b.data()));
    };
    Rng rng(12);
    const Matrix x = testutil::random_cloud(rng, 60, 1);
    const Matrix same = testutil::random_cloud(rng, 60, 1);
    Matrix shifted = testutil::random_cloud(rng, 60, 1);
    for (double& v : shifted.data()) v += 3.0;

    Rng perm_rng(13);
    const auto null_res = permutation_test(x, same, mean_gap, 200, perm_rng);
    CHECK(null_res.p_value > 0.05);
    const auto alt_res = permutation_test(x, shifted, mean_gap, 200, perm_rng);
    CHECK(alt_res.p_value <= 0.01);
    CHECK(alt_res.statistic == doctest::Approx(3.0).epsilon(0.2));
}

TEST_CASE("permutation test is reproducible under the same seed") {
    const TwoSampleStat stat = [](const Matrix& a, const Matrix& b) {
        return std::fabs(testutil::mean_of(a.data()) - testutil::mean_of(b.data()));
    };
    Rng rng(14);
    const Matrix x = testutil::random_cloud(rng, 30, 2);
    const Matrix y = testutil::random_cloud(rng, 30, 2, 1.2);
    Rng r1(99), r2(99);
    const auto a = permutation_test(x, y, stat, 100, r1);
    const auto b = permutation_test(x, y, stat, 100, r2);
    CHECK(a.p_value == b.p_value);
    CHECK(a.statistic == b.statistic);
}

TEST_SUITE_END();
