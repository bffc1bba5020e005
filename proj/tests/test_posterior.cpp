#include "shiftgen/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "shiftgen/flowmatch.hpp"
#include "shiftgen/gaussian.hpp"
#include "shiftgen/rng.hpp"
#include "shiftgen/types.hpp"
#include "test_util.hpp"

using namespace shiftgen;
using namespace shiftgen::post;

namespace {

Matrix mat1(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

LinearGaussianLikelihood scalar_lik(double h, double sigma2, double y) {
    return {mat1(h), sigma2, Vec{y}};
}

void sample_moments(const Matrix& s, double* mean, double* var) {
    double mu = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) mu += s(i, 0);
    mu /= static_cast<double>(s.rows());
    double v = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) v += (s(i, 0) - mu) * (s(i, 0) - mu);
    v /= static_cast<double>(s.rows() - 1);
    *mean = mu;
    *var = v;
}

// Coordinatewise z + z^3/3; strictly increasing, Newton-invertible.
struct CubicGen final : Generator {
    std::size_t d;
    explicit CubicGen(std::size_t dim) : d(dim) {}
    std::size_t dim() const override { return d; }
    Vec forward(VecView z) const override {
        Vec out(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) out[i] = z[i] + z[i] * z[i] * z[i] / 3.0;
        return out;
    }
    Vec inverse(VecView x) const override {
        Vec out(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            double t = x[i];
            for (int it = 0; it < 60; ++it)
                t -= (t + t * t * t / 3.0 - x[i]) / (1.0 + t * t);
            out[i] = t;
        }
        return out;
    }
};

}  // namespace

TEST_SUITE_BEGIN("posterior");

TEST_CASE("affine generator round trips and validates its shape") {
    Matrix a(2, 2);
    a(0, 0) = 2.0;
    a(1, 0) = -0.5;
    a(1, 1) = 1.5;
    const AffineGenerator gen(a, Vec{0.3, -1.0});

    const Vec z = {0.7, -0.4};
    const Vec x = gen.forward(z);
    CHECK(x[0] == doctest::Approx(2.0 * 0.7 + 0.3).epsilon(1e-15));
    CHECK(x[1] == doctest::Approx(-0.5 * 0.7 + 1.5 * -0.4 - 1.0).epsilon(1e-15));

    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec p = rng.normals(2);
        const Vec back = gen.inverse(gen.forward(p));
        CHECK(std::abs(back[0] - p[0]) < 1e-12);
        CHECK(std::abs(back[1] - p[1]) < 1e-12);
    }

    const AffineGenerator id = AffineGenerator::identity(3);
    const Vec q = {1.0, -2.0, 0.5};
    const Vec fq = id.forward(q);
    for (std::size_t i = 0; i < 3; ++i) CHECK(fq[i] == q[i]);

    Matrix upper(2, 2);
    upper(0, 0) = 1.0;
    upper(0, 1) = 0.5;
    upper(1, 1) = 1.0;
    CHECK_THROWS_AS(AffineGenerator(upper, Vec{0.0, 0.0}), std::invalid_argument);
    Matrix zero_diag(2, 2);
    zero_diag(0, 0) = 1.0;
    CHECK_THROWS_AS(AffineGenerator(zero_diag, Vec{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(AffineGenerator(Matrix(2, 3), Vec{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(AffineGenerator(mat1(1.0), Vec{}), std::invalid_argument);
}

TEST_CASE("affine generator prior is the pushforward Gaussian") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 0) = 0.5;
    a(1, 1) = 0.8;
    const AffineGenerator gen(a, Vec{0.3, -0.2});
    const FullGaussian prior = gen.prior();
    CHECK(prior.mean()[0] == 0.3);
    CHECK(prior.mean()[1] == -0.2);
    // A A^T entrywise
    CHECK(prior.covariance()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(prior.covariance()(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(prior.covariance()(1, 1) == doctest::Approx(0.25 + 0.64).epsilon(1e-15));

    const AffineGenerator wide(mat1(2.0), Vec{0.0});
    CHECK(wide.prior().covariance()(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(wide.jacobian(Vec{0.0})(0, 0) == 2.0);
}

TEST_CASE("default jacobian finite differences track a smooth map") {
    const CubicGen gen(3);
    Rng rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        const Vec z = rng.normals(3);
        const Matrix j = gen.jacobian(z);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) {
                const double expect = r == c ? 1.0 + z[r] * z[r] : 0.0;
                CHECK(std::abs(j(r, c) - expect) < 1e-6);
            }
        const Vec back = gen.inverse(gen.forward(z));
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(back[i] - z[i]) < 1e-10);
    }
}

TEST_CASE("data-fidelity gradient closed forms and finite differences") {
    // observing the state exactly leaves no residual
    const LinearGaussianLikelihood exact{Matrix::identity(2), 1.0, Vec{0.4, -0.7}};
    const Vec g0 = neg_log_lik_grad(exact, Vec{0.4, -0.7});
    CHECK(g0[0] == 0.0);
    CHECK(g0[1] == 0.0);

    const Vec g1 = neg_log_lik_grad(scalar_lik(1.0, 1.0, 1.0), Vec{0.0});
    CHECK(g1[0] == doctest::Approx(-1.0).epsilon(1e-15));

    Rng rng(5);
    Matrix h(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) h(i, j) = rng.normal();
    const LinearGaussianLikelihood lik{h, 0.7, Vec{0.5, -0.2, 1.1}};
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = rng.normals(2);
        const Vec g = neg_log_lik_grad(lik, x);
        for (std::size_t j = 0; j < 2; ++j) {
            const double fd = testutil::central_diff(
                [&](double v) {
                    Vec probe(x);
                    probe[j] = v;
                    return neg_log_lik(lik, probe);
                },
                x[j], 1e-6);
            CHECK(std::abs(g[j] - fd) < 1e-8);
        }
    }

    CHECK_THROWS_AS(neg_log_lik_grad(scalar_lik(1.0, 0.0, 1.0), Vec{0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(neg_log_lik_grad(scalar_lik(1.0, -1.0, 1.0), Vec{0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(neg_log_lik_grad(lik, Vec{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(neg_log_lik_grad(LinearGaussianLikelihood{h, 1.0, Vec{0.0}}, Vec{0.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("latent gradient obeys the chain rule through the generator") {
    Matrix a(2, 2);
    a(0, 0) = 1.4;
    a(1, 0) = -0.3;
    a(1, 1) = 0.9;
    const AffineGenerator affine(a, Vec{0.2, 0.1});
    const CubicGen cubic(2);
    const LinearGaussianLikelihood lik{Matrix::identity(2), 0.6, Vec{0.8, -0.3}};

    Rng rng(11);
    for (int rep = 0; rep < 8; ++rep) {
        const Vec z = rng.normals(2);
        for (const Generator* gen : {static_cast<const Generator*>(&affine),
                                     static_cast<const Generator*>(&cubic)}) {
            const Vec g = latent_grad(*gen, lik, z);
            for (std::size_t j = 0; j < 2; ++j) {
                const double fd = testutil::central_diff(
                    [&](double v) {
                        Vec probe(z);
                        probe[j] = v;
                        return neg_log_lik(lik, gen->forward(probe));
                    },
                    z[j], 1e-5);
                CHECK(std::abs(g[j] - fd) < 1e-5);
            }
        }
    }
}

TEST_CASE("oracle posterior conjugate hand case and proportionality") {
    const AffineGenerator id = AffineGenerator::identity(1);
    const FullGaussian post = oracle_posterior(id, scalar_lik(1.0, 1.0, 1.0));
    CHECK(post.mean()[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(post.covariance()(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    // log posterior = log prior - data fidelity + constant, checked at
    // several states for a correlated two-dimensional configuration
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 0) = 0.5;
    a(1, 1) = 0.8;
    const AffineGenerator gen(a, Vec{0.3, -0.2});
    const LinearGaussianLikelihood lik{Matrix::identity(2), 0.5, Vec{1.0, 0.0}};
    const FullGaussian oracle = oracle_posterior(gen, lik);
    const FullGaussian prior = gen.prior();
    Rng rng(13);
    std::optional<double> shift;
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = rng.normals(2);
        const double lhs = oracle.log_density(x);
        const double rhs = prior.log_density(x) - neg_log_lik(lik, x);
        if (!shift) shift = lhs - rhs;
        CHECK(lhs - rhs == doctest::Approx(*shift).epsilon(1e-10));
    }
}

TEST_CASE("oracle posterior limits: weak noise prior and blind observation") {
    const AffineGenerator gen(mat1(1.5), Vec{0.5});
    const FullGaussian weak = oracle_posterior(gen, scalar_lik(1.0, 1e12, 3.0));
    CHECK(weak.mean()[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(weak.covariance()(0, 0) == doctest::Approx(2.25).epsilon(1e-9));

    const FullGaussian blind = oracle_posterior(gen, scalar_lik(0.0, 1.0, 123.0));
    CHECK(blind.mean()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(blind.covariance()(0, 0) == doctest::Approx(2.25).epsilon(1e-12));

    // collapsed prior scale underflows the precision solve
    CHECK_THROWS_AS(oracle_posterior(AffineGenerator(mat1(1e-200), Vec{0.0}),
                                     scalar_lik(1.0, 1.0, 0.0)),
                    NumericalError);
}

TEST_CASE("langevin matches the conjugate posterior for the identity prior") {
    LangevinConfig cfg;
    cfg.step = 1e-3;
    cfg.steps = 200000;
    cfg.seed = 0;
    const Matrix s = latent_langevin(AffineGenerator::identity(1), scalar_lik(1.0, 1.0, 1.0), cfg);
    CHECK(s.rows() == 16000);
    double mean = 0.0, var = 0.0;
    sample_moments(s, &mean, &var);
    CHECK(std::abs(mean - 0.5) < 0.03);
    CHECK(std::abs(var - 0.5) < 0.03);
}

TEST_CASE("langevin matches the conjugate posterior for a widened prior") {
    LangevinConfig cfg;
    cfg.step = 1e-3;
    cfg.steps = 200000;
    cfg.seed = 0;
    const AffineGenerator gen(mat1(2.0), Vec{0.0});
    const Matrix s = latent_langevin(gen, scalar_lik(1.0, 1.0, 1.0), cfg);
    double mean = 0.0, var = 0.0;
    sample_moments(s, &mean, &var);
    CHECK(std::abs(mean - 0.8) < 0.05);
    CHECK(std::abs(var - 0.8) < 0.05);
}

TEST_CASE("langevin falls back to the prior under an uninformative likelihood") {
    LangevinConfig cfg;
    cfg.step = 0.01;
    cfg.steps = 200000;
    cfg.seed = 0;
    const AffineGenerator gen(mat1(1.5), Vec{0.5});
    const Matrix s = latent_langevin(gen, scalar_lik(1.0, 1e6, 0.0), cfg);
    double mean = 0.0, var = 0.0;
    sample_moments(s, &mean, &var);
    CHECK(std::abs(mean - 0.5) < 0.15);
    CHECK(std::abs(var - 2.25) < 0.35);
}

TEST_CASE("langevin tracks the full oracle posterior in two dimensions") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 0) = 0.5;
    a(1, 1) = 0.8;
    const AffineGenerator gen(a, Vec{0.3, -0.2});
    const LinearGaussianLikelihood lik{Matrix::identity(2), 0.5, Vec{1.0, 0.0}};
    const FullGaussian oracle = oracle_posterior(gen, lik);

    LangevinConfig cfg;
    cfg.step = 2e-3;
    cfg.steps = 300000;
    cfg.seed = 1;
    const Matrix s = latent_langevin(gen, lik, cfg);
    const auto [mu, cov] = mean_cov(s);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(mu[i] - oracle.mean()[i]) < 0.05);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(cov(i, j) - oracle.covariance()(i, j)) < 0.05);
}

TEST_CASE("langevin bookkeeping: thinning arithmetic, determinism, validation") {
    const AffineGenerator id = AffineGenerator::identity(2);
    const LinearGaussianLikelihood lik{Matrix::identity(2), 1.0, Vec{0.0, 0.0}};

    LangevinConfig cfg;
    cfg.step = 0.01;
    cfg.steps = 10;
    cfg.burn_in = 4;
    cfg.thin = 3;
    const Matrix s = latent_langevin(id, lik, cfg);
    CHECK(s.rows() == 2);  // kept indices 4 and 7 of 0..9
    CHECK(s.cols() == 2);

    LangevinConfig dflt;
    dflt.step = 0.01;
    dflt.steps = 10;
    const Matrix one = latent_langevin(id, lik, dflt);
    CHECK(one.rows() == 1);  // default burn-in 2, thinning 10

    const Matrix again = latent_langevin(id, lik, cfg);
    CHECK(frobenius_norm(s - again) == 0.0);
    LangevinConfig other = cfg;
    other.seed = 77;
    CHECK(frobenius_norm(latent_langevin(id, lik, other) - s) > 0.0);

    LangevinConfig bad = cfg;
    bad.step = 0.0;
    CHECK_THROWS_AS(latent_langevin(id, lik, bad), std::invalid_argument);
    bad = cfg;
    bad.steps = 0;
    CHECK_THROWS_AS(latent_langevin(id, lik, bad), std::invalid_argument);
    bad = cfg;
    bad.thin = 0;
    CHECK_THROWS_AS(latent_langevin(id, lik, bad), std::invalid_argument);
    bad = cfg;
    bad.burn_in = 10;
    CHECK_THROWS_AS(latent_langevin(id, lik, bad), std::invalid_argument);
}

TEST_CASE("langevin aborts on an unstable step size") {
    LangevinConfig cfg;
    cfg.step = 1e3;
    cfg.steps = 500;
    cfg.burn_in = 0;
    cfg.thin = 1;
    CHECK_THROWS_AS(
        latent_langevin(AffineGenerator::identity(1), scalar_lik(1.0, 0.5, 1.0), cfg),
        NumericalError);
}

TEST_CASE("halving the step and doubling the length shrinks the moment error") {
    const AffineGenerator id = AffineGenerator::identity(1);
    const LinearGaussianLikelihood lik = scalar_lik(1.0, 0.02, 1.0);
    const double target_var = 1.0 / 51.0;  // precision 1 + 1/0.02

    Vec medians;
    for (int level = 0; level < 3; ++level) {
        Vec errs;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            LangevinConfig cfg;
            cfg.step = 1e-2 / static_cast<double>(1 << level);
            cfg.steps = static_cast<std::size_t>(20000 * (1 << level));
            cfg.thin = 5;
            cfg.seed = seed;
            const Matrix s = latent_langevin(id, lik, cfg);
            double mean = 0.0, var = 0.0;
            sample_moments(s, &mean, &var);
            errs.push_back(std::abs(var - target_var));
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[4] + errs[5]));
    }
    CHECK(medians[0] > medians[1]);
    CHECK(medians[1] > medians[2]);
}

TEST_CASE("discretization bias matches the exact stationary law of the chain") {
    // identity prior with sigma2 = 0.5 gives latent drift factor (1 - 3h);
    // the chain's stationary variance is 2h / (1 - (1 - 3h)^2) exactly
    const auto chain_var = [](double h) { return 2.0 * h / (1.0 - (1.0 - 3.0 * h) * (1.0 - 3.0 * h)); };

    double prev_bias = 1e300;
    for (double h : {1e-2, 1e-3, 1e-4}) {
        // second-moment recursion fixpoint agrees with the closed form
        double v = 0.0;
        for (int it = 0; it < 2000000; ++it) {
            const double next = (1.0 - 3.0 * h) * (1.0 - 3.0 * h) * v + 2.0 * h;
            if (std::abs(next - v) < 1e-18) {
                v = next;
                break;
            }
            v = next;
        }
        CHECK(v == doctest::Approx(chain_var(h)).epsilon(1e-10));
        const double bias = chain_var(h) - 1.0 / 3.0;
        CHECK(bias > 0.0);
        CHECK(bias < prev_bias);
        prev_bias = bias;
    }

    // at a coarse step the sampled variance sits on the biased stationary
    // value, visibly away from the true posterior variance
    LangevinConfig cfg;
    cfg.step = 0.1;
    cfg.steps = 200000;
    cfg.thin = 1;
    cfg.seed = 0;
    const Matrix s = latent_langevin(AffineGenerator::identity(1), scalar_lik(1.0, 0.5, 1.0), cfg);
    double mean = 0.0, var = 0.0;
    sample_moments(s, &mean, &var);
    CHECK(std::abs(var - chain_var(0.1)) < 0.01);
    CHECK(var > 0.37);  // true posterior variance is 1/3
}

TEST_CASE("flow adapter wraps a trained model as an invertible generator") {
    Rng rng(21);
    Matrix cov(2, 2);
    cov(0, 0) = 1.0;
    cov(0, 1) = 0.4;
    cov(1, 0) = 0.4;
    cov(1, 1) = 0.7;
    const FullGaussian target(Vec{1.0, -0.5}, cov);
    const Matrix data = sample_gaussian(rng, target, 1500);
    const flow::FmTrainConfig cfg{.epochs = 250, .batch = 128, .lr = 2e-3, .hidden = {32, 32}};
    const flow::TrainResult res = flow::train_fm(data, FullGaussian::standard(2), cfg, rng);
    REQUIRE_FALSE(res.diverged);

    const FlowAdapter adapter(res.model, 96);
    Rng probe(31);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec z = probe.normals(2);
        const Vec back = adapter.inverse(adapter.forward(z));
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(back[i] - z[i]) < 1e-6);
    }

    // pushforward of the reference recovers the training law's location
    Matrix lat = sample_gaussian(probe, FullGaussian::standard(2), 400);
    Vec mu(2, 0.0);
    for (std::size_t i = 0; i < lat.rows(); ++i) {
        const Vec x = adapter.forward(lat.row(i));
        mu[0] += x[0];
        mu[1] += x[1];
    }
    mu[0] /= 400.0;
    mu[1] /= 400.0;
    CHECK(std::abs(mu[0] - 1.0) < 0.15);
    CHECK(std::abs(mu[1] + 0.5) < 0.15);

    // chain rule through the adapter's finite-difference Jacobian
    const LinearGaussianLikelihood lik{Matrix::identity(2), 0.7, Vec{0.5, 0.2}};
    const Vec z0 = {0.3, -0.6};
    const Vec g = latent_grad(adapter, lik, z0);
    for (std::size_t j = 0; j < 2; ++j) {
        const double fd = testutil::central_diff(
            [&](double v) {
                Vec zp(z0);
                zp[j] = v;
                return neg_log_lik(lik, adapter.forward(zp));
            },
            z0[j], 1e-5);
        CHECK(std::abs(g[j] - fd) < 1e-5);
    }

    // a short chain through the flow produces the advertised sample count
    LangevinConfig lc;
    lc.step = 5e-3;
    lc.steps = 400;
    lc.burn_in = 100;
    lc.thin = 3;
    lc.seed = 2;
    const Matrix s = latent_langevin(adapter, lik, lc);
    CHECK(s.rows() == 100);
    CHECK(s.all_finite());

    // an untrained single-step euler map fails the round-trip gate
    Rng raw_rng(5);
    flow::FlowModel raw = flow::make_flow_model(2, 0, {16, 16}, raw_rng);
    raw.default_integrator = OdeMethod::euler;
    CHECK_THROWS_AS(FlowAdapter(raw, 1), NumericalError);

    // contextual models have no fixed map to invert
    Rng ctx_rng(6);
    const flow::FlowModel ctx = flow::make_flow_model(2, 1, {8, 8}, ctx_rng);
    CHECK_THROWS_AS(FlowAdapter(ctx, 16), std::invalid_argument);
}

TEST_CASE("error transfer with an exact model prior is sampler-limited") {
    const FullGaussian prior = FullGaussian::standard(1);
    const LinearGaussianLikelihood lik = scalar_lik(1.0, 1.0, 1.0);
    LangevinConfig cfg;
    cfg.step = 2e-3;
    cfg.steps = 60000;
    cfg.seed = 0;
    Rng rng(99);
    const Matrix exact = sample_gaussian(rng, prior, 4000);
    const ErrorTransferReport r = error_transfer_report(prior, exact, lik, cfg);
    CHECK(r.prior_disc < 0.06);
    CHECK(r.post_disc < 2.0 * r.sampler_disc);
    CHECK(r.post_disc > 0.5 * r.sampler_disc);
    CHECK(r.oracle.mean()[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("error transfer grows under a shifted model prior") {
    const FullGaussian prior = FullGaussian::standard(1);
    const LinearGaussianLikelihood lik = scalar_lik(1.0, 1.0, 1.0);
    LangevinConfig cfg;
    cfg.step = 2e-3;
    cfg.steps = 60000;
    cfg.seed = 0;
    Rng rng(99);
    const Matrix exact = sample_gaussian(rng, prior, 4000);
    Matrix shifted = exact;
    for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, 0) += 0.5;

    const ErrorTransferReport base = error_transfer_report(prior, exact, lik, cfg);
    const ErrorTransferReport moved = error_transfer_report(prior, shifted, lik, cfg);
    // the shifted prior's TV to the truth is 2 Phi(1/4) - 1
    CHECK(std::abs(moved.prior_disc - 0.1974) < 0.05);
    CHECK(moved.post_disc > base.post_disc);
    CHECK(moved.post_disc > moved.sampler_disc);

    // with a blind observation the posterior inherits the prior gap
    const ErrorTransferReport blind =
        error_transfer_report(prior, shifted, scalar_lik(0.0, 1.0, 0.0), cfg);
    CHECK(std::abs(blind.post_disc - blind.prior_disc) < 0.08);
}

TEST_CASE("error transfer in two dimensions uses assignment W2") {
    const FullGaussian prior = FullGaussian::standard(2);
    Rng rng(7);
    Matrix samples = sample_gaussian(rng, prior, 1500);
    for (std::size_t i = 0; i < samples.rows(); ++i) samples(i, 0) += 1.0;
    const LinearGaussianLikelihood lik{Matrix::identity(2), 1.0, Vec{0.0, 0.0}};
    LangevinConfig cfg;
    cfg.step = 2e-3;
    cfg.steps = 60000;
    cfg.seed = 0;
    const ErrorTransferReport r = error_transfer_report(prior, samples, lik, cfg);
    CHECK(r.prior_disc > 0.6);
    CHECK(r.prior_disc < 1.3);
    CHECK(r.post_disc > r.sampler_disc);
    CHECK(r.post_disc < r.prior_disc);  // the likelihood pulls the shift halfway back

    CHECK_THROWS_AS(error_transfer_report(prior, Matrix(5, 3), lik, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(error_transfer_report(prior, Matrix(1, 2), lik, cfg),
                    std::invalid_argument);
}

TEST_SUITE_END();
