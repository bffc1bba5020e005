#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shiftgen/transport.hpp"
#include "test_util.hpp"

using namespace shiftgen;
using namespace shiftgen::transport;

namespace {

// Exhaustive minimum over all n! pairings, n <= 8.
double brute_force_w2(const Matrix& x, const Matrix& y) {
    std::vector<std::size_t> perm(x.rows());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) s += sq_dist(x.row(i), y.row(perm[i]));
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / static_cast<double>(x.rows()));
}

Matrix translated(const Matrix& x, VecView tau) {
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += tau[j];
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("transport");

TEST_CASE("w2_1d on enumerable cases") {
    CHECK(w2_1d({0.0, 1.0}, {1.0, 2.0}) == doctest::Approx(1.0));
    CHECK(w2_1d({0.3, -1.0, 2.0}, {0.3, -1.0, 2.0}) == 0.0);
    CHECK(w2_1d({0.0}, {3.0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(w2_1d({0.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("w2_1d equals the brute-force pairing minimum") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng.below(5);
        Matrix x(n, 1), y(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            x(i, 0) = rng.normal();
            y(i, 0) = 0.5 + 1.3 * rng.normal();
        }
        CHECK(w2_1d(x.data(), y.data()) ==
              doctest::Approx(brute_force_w2(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("w2_assignment on identical clouds") {
    Rng rng(32);
    const Matrix x = testutil::random_cloud(rng, 9, 3);
    const Assignment a = w2_assignment(x, x);
    CHECK(a.cost == 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) CHECK(a.permutation[i] == i);
}

TEST_CASE("w2_assignment equals exhaustive enumeration for n <= 8") {
    Rng rng(33);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng.below(7);
        const Matrix x = testutil::random_cloud(rng, n, 2);
        const Matrix y = testutil::random_cloud(rng, n, 2, 0.8);
        const Assignment a = w2_assignment(x, y);
        CHECK(a.cost == doctest::Approx(brute_force_w2(x, y)).epsilon(1e-12));
        std::vector<std::size_t> sorted = a.permutation;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);  // bijection
    }
}

TEST_CASE("w2_assignment of a translated cloud is the translation norm") {
    Rng rng(34);
    const Matrix x = testutil::random_cloud(rng, 40, 3);
    const Vec tau{0.7, -0.4, 1.1};
    const Assignment a = w2_assignment(x, translated(x, tau));
    CHECK(a.cost == doctest::Approx(norm2(tau)).epsilon(1e-12));
    for (std::size_t i = 0; i < x.rows(); ++i) CHECK(a.permutation[i] == i);
}

TEST_CASE("w2_assignment is symmetric and satisfies the triangle inequality") {
    Rng rng(35);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix x = testutil::random_cloud(rng, 12, 2);
        const Matrix y = testutil::random_cloud(rng, 12, 2, 0.6);
        const Matrix z = testutil::random_cloud(rng, 12, 2, 1.4);
        const double xy = w2_assignment(x, y).cost;
        CHECK(xy == doctest::Approx(w2_assignment(y, x).cost).epsilon(1e-12));
        CHECK(w2_assignment(x, z).cost <= xy + w2_assignment(y, z).cost + 1e-9);
    }
}

TEST_CASE("w2_assignment input validation") {
    const Matrix a(3, 2), b(4, 2);
    CHECK_THROWS_AS(w2_assignment(a, b), std::invalid_argument);
    CHECK_THROWS_AS(w2_assignment(Matrix(513, 1), Matrix(513, 1)), std::invalid_argument);
}

TEST_CASE("sinkhorn on identical clouds approaches zero cost at small reg") {
    Rng rng(36);
    const Matrix x = testutil::random_cloud(rng, 15, 2);
    const SinkhornResult res = sinkhorn(x, x, 1e-3, 5000, 1e-9);
    CHECK(res.cost < 1e-2);
}

TEST_CASE("sinkhorn cost is near the exact assignment cost") {
    Rng rng(37);
    for (int rep = 0; rep < 3; ++rep) {
        const Matrix x = testutil::random_cloud(rng, 20, 2);
        const Matrix y = testutil::random_cloud(rng, 20, 2, 0.9);
        const SinkhornResult res = sinkhorn(x, y, 0.05, 5000, 1e-9);
        const double exact = w2_assignment(x, y).cost;
        CHECK(res.cost * res.cost - exact * exact >= -1e-9);  // plan is feasible
        CHECK(std::fabs(res.cost * res.cost - exact * exact) < 0.1);
    }
}

TEST_CASE("sinkhorn marginals satisfy the coupling contract") {
    Rng rng(38);
    const Matrix x = testutil::random_cloud(rng, 14, 2);
    const Matrix y = testutil::random_cloud(rng, 9, 2, 1.1);
    const SinkhornResult res = sinkhorn(x, y, 1.0, 4000, 1e-10);
    REQUIRE(res.converged);
    const Matrix& p = res.coupling.plan;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) {
            CHECK(p(i, j) >= 0.0);
            s += p(i, j);
        }
        CHECK(std::fabs(s - res.coupling.row_marginals[i]) < 1e-9);
    }
    for (std::size_t j = 0; j < p.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.rows(); ++i) s += p(i, j);
        CHECK(std::fabs(s - res.coupling.col_marginals[j]) < 1e-9);
    }
}

TEST_CASE("sinkhorn single pass keeps the plan strictly positive") {
    Rng rng(39);
    const Matrix x = testutil::random_cloud(rng, 8, 2);
    const Matrix y = testutil::random_cloud(rng, 8, 2, 0.7);
    const SinkhornResult res = sinkhorn(x, y, 0.5, 1, 1e-12);
    CHECK_FALSE(res.converged);
    for (double v : res.coupling.plan.data()) CHECK(v > 0.0);
}

TEST_CASE("sinkhorn traces: dual ascends, violations shrink, cost settles") {
    Rng rng(40);
    const Matrix x = testutil::random_cloud(rng, 16, 2);
    const Matrix y = testutil::random_cloud(rng, 16, 2, 1.3);
    const SinkhornResult res = sinkhorn(x, y, 2.0, 3000, 1e-12);
    REQUIRE(res.converged);
    REQUIRE(res.cost_trace.size() == res.iterations);
    REQUIRE(res.dual_trace.size() == res.iterations);
    // each scaling pass is an exact block maximization of the dual
    for (std::size_t i = 0; i + 1 < res.dual_trace.size(); ++i)
        CHECK(res.dual_trace[i + 1] >= res.dual_trace[i] - 1e-12);
    for (std::size_t i = 0; i + 1 < res.violation_trace.size(); ++i)
        CHECK(res.violation_trace[i + 1] <= res.violation_trace[i] + 1e-12);
    const std::size_t k = res.cost_trace.size();
    if (k >= 2) CHECK(std::fabs(res.cost_trace[k - 1] - res.cost_trace[k - 2]) < 1e-6);
}

TEST_CASE("sym_eig reconstructs random SPD matrices") {
    Rng rng(41);
    for (std::size_t d : {2, 3, 6, 10}) {
        const Matrix a = testutil::random_spd(rng, d);
        const SymEig e = sym_eig(a);
        Matrix recon(d, d);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    recon(i, j) += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
        CHECK(frobenius_norm(recon - a) < 1e-10 * std::max(1.0, frobenius_norm(a)));
        const Matrix vtv = transpose(e.vectors) * e.vectors;
        CHECK(frobenius_norm(vtv - Matrix::identity(d)) < 1e-12);
    }
}

TEST_CASE("sym_sqrt squares back to the input") {
    Matrix diag(2, 2);
    diag(0, 0) = 4.0;
    diag(1, 1) = 9.0;
    const Matrix r = sym_sqrt(diag);
    CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-12));

    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix a = testutil::random_spd(rng, 4);
        const Matrix s = sym_sqrt(a);
        CHECK(frobenius_norm(s * s - a) < 1e-10 * std::max(1.0, frobenius_norm(a)));
    }
}

TEST_CASE("sym_sqrt rejects an indefinite matrix") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    a(1, 1) = 1.0;  // eigenvalues 3, -1
    CHECK_THROWS_AS(sym_sqrt(a), NumericalError);
}

TEST_CASE("w2_gaussian closed-form cases") {
    const auto std1 = FullGaussian::standard(1);
    CHECK(w2_gaussian(FullGaussian::standard(3), FullGaussian::standard(3)) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w2_gaussian(std1, FullGaussian::diagonal({2.0}, Vec{1.0})) == doctest::Approx(2.0));
    CHECK(w2_gaussian(std1, FullGaussian::diagonal({0.0}, Vec{4.0})) == doctest::Approx(1.0));
}

TEST_CASE("w2_gaussian is symmetric and translation-covariant") {
    Rng rng(43);
    for (int rep = 0; rep < 10; ++rep) {
        const FullGaussian a(rng.normals(3), testutil::random_spd(rng, 3));
        const FullGaussian b(rng.normals(3), testutil::random_spd(rng, 3));
        CHECK(w2_gaussian(a, b) == doctest::Approx(w2_gaussian(b, a)).epsilon(1e-9));
        // pure translation of equal covariances
        const Vec tau = rng.normals(3);
        const FullGaussian at(a.mean(), a.covariance());
        const FullGaussian bt(vec_add(a.mean(), tau), a.covariance());
        CHECK(w2_gaussian(at, bt) == doctest::Approx(norm2(tau)).epsilon(1e-9));
    }
}

TEST_CASE("w2_gaussian agrees with the assignment solver on samples") {
    Rng rng(44);
    const FullGaussian a({0.0, 0.0}, Matrix::identity(2));
    Matrix cov(2, 2);
    cov(0, 0) = 2.0;
    cov(0, 1) = 0.6;
    cov(1, 0) = 0.6;
    cov(1, 1) = 1.0;
    const FullGaussian b({1.5, -0.5}, cov);
    const Matrix xs = sample_gaussian(rng, a, 400);
    const Matrix ys = sample_gaussian(rng, b, 400);
    const double empirical = w2_assignment(xs, ys).cost;
    CHECK(std::fabs(empirical - w2_gaussian(a, b)) < 0.2);
}

TEST_CASE("ot_map_gaussian trivial and scalar cases") {
    const FullGaussian a = FullGaussian::standard(2);
    const AffineMap id = ot_map_gaussian(a, a);
    CHECK(frobenius_norm(id.linear - Matrix::identity(2)) < 1e-10);
    CHECK(norm2(id.offset) < 1e-10);

    const AffineMap dbl = ot_map_gaussian(FullGaussian::diagonal({0.0}, Vec{1.0}),
                                          FullGaussian::diagonal({0.0}, Vec{4.0}));
    CHECK(dbl.linear(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("ot_map_gaussian pushes the source law onto the target") {
    Rng rng(45);
    for (int rep = 0; rep < 5; ++rep) {
        const FullGaussian a(rng.normals(3), testutil::random_spd(rng, 3));
        const FullGaussian b(rng.normals(3), testutil::random_spd(rng, 3));
        const AffineMap t = ot_map_gaussian(a, b);
        // exact algebra: A Sigma_a A^T = Sigma_b and map(m_a) = m_b
        const Matrix pushed_cov = t.linear * a.covariance() * transpose(t.linear);
        CHECK(frobenius_norm(pushed_cov - b.covariance()) <
              1e-8 * std::max(1.0, frobenius_norm(b.covariance())));
        CHECK(norm2(vec_sub(t.apply(a.mean()), b.mean())) < 1e-9);
    }
}

TEST_CASE("ot_map_gaussian Monte Carlo pushforward") {
    Rng rng(46);
    const FullGaussian a({1.0, -1.0}, Matrix::identity(2));
    Matrix cov(2, 2);
    cov(0, 0) = 1.5;
    cov(0, 1) = -0.4;
    cov(1, 0) = -0.4;
    cov(1, 1) = 0.8;
    const FullGaussian b({0.0, 2.0}, cov);
    const Matrix mapped = ot_map_gaussian(a, b).apply_rows(sample_gaussian(rng, a, 10000));
    const auto [m, c] = mean_cov(mapped);
    CHECK(norm2(vec_sub(m, b.mean())) < 0.05);
    CHECK(frobenius_norm(c - b.covariance()) < 0.1);
}

TEST_CASE("dynamic_transport_cost of simple fields") {
    Rng rng(47);
    const Matrix ref = testutil::random_cloud(rng, 200, 2);
    const VectorField zero = [](VecView x, double) { return Vec(x.size(), 0.0); };
    CHECK(dynamic_transport_cost(zero, ref, 16) == 0.0);

    const Vec c{1.0, -2.0};
    const VectorField constant = [&](VecView, double) { return c; };
    CHECK(dynamic_transport_cost(constant, ref, 16) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("dynamic_transport_cost attains the Bures optimum for affine flows") {
    // displacement interpolation N(0,1) -> N(0,4): x_t = (1+t) x0, v(y,t) = y/(1+t)
    Rng rng(48);
    Matrix ref(4000, 1);
    for (std::size_t i = 0; i < ref.rows(); ++i) ref(i, 0) = rng.normal();
    const VectorField v = [](VecView y, double t) { return Vec{y[0] / (1.0 + t)}; };
    const double action = dynamic_transport_cost(v, ref, 64);
    const double w2 = w2_gaussian(FullGaussian::diagonal({0.0}, Vec{1.0}),
                                  FullGaussian::diagonal({0.0}, Vec{4.0}));
    CHECK(action == doctest::Approx(w2 * w2).epsilon(0.1));
    CHECK(action >= w2 * w2 - 0.1);

    // straight translation N(0,1) -> N(2,1): constant speed 2, action 4
    const VectorField shift = [](VecView, double) { return Vec{2.0}; };
    CHECK(dynamic_transport_cost(shift, ref, 16) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_SUITE_END();
