#include "shiftgen/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "shiftgen/linalg.hpp"
#include "shiftgen/metrics.hpp"
#include "shiftgen/rng.hpp"
#include "shiftgen/transport.hpp"

namespace shiftgen::post {

namespace {

void check_likelihood(const LinearGaussianLikelihood& lik, std::size_t d) {
    if (!(lik.sigma2 > 0.0))
        throw std::invalid_argument("likelihood: sigma2 must be positive");
    if (lik.h.cols() != d)
        throw std::invalid_argument("likelihood: H has " + std::to_string(lik.h.cols()) +
                                    " columns for state dimension " + std::to_string(d));
    if (lik.h.rows() != lik.y.size())
        throw std::invalid_argument("likelihood: H rows and y length differ");
    if (!lik.h.all_finite())
        throw std::invalid_argument("likelihood: H must be finite");
    for (double v : lik.y)
        if (!std::isfinite(v)) throw std::invalid_argument("likelihood: y must be finite");
}

Matrix symmetrized(const Matrix& a) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = i + 1; j < out.cols(); ++j) {
            const double v = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

// Total variation between a one-column sample cloud and a scalar Gaussian,
// binned on a grid wide enough to cover both; the uncovered Gaussian tail
// counts toward the distance.
double grid_tv(const Matrix& samples, double mean, double var) {
    const std::size_t bins = 64;
    const double sd = std::sqrt(var);
    double lo = mean - 8.0 * sd;
    double hi = mean + 8.0 * sd;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        lo = std::min(lo, samples(i, 0));
        hi = std::max(hi, samples(i, 0));
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    Vec counts(bins, 0.0);
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        auto idx = static_cast<std::size_t>(
            std::clamp((samples(i, 0) - lo) / width, 0.0, static_cast<double>(bins - 1)));
        counts[idx] += 1.0;
    }
    const double inv_n = 1.0 / static_cast<double>(samples.rows());
    const auto cdf = [&](double x) {
        return 0.5 * (1.0 + std::erf((x - mean) / (sd * std::sqrt(2.0))));
    };
    double tv = 0.0;
    double covered = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double q = cdf(lo + width * static_cast<double>(b + 1)) -
                         cdf(lo + width * static_cast<double>(b));
        tv += std::abs(counts[b] * inv_n - q);
        covered += q;
    }
    return 0.5 * tv + 0.5 * (1.0 - covered);
}

// W2 between clouds, subsampled so the cubic assignment stays cheap.
double w2_capped(const Matrix& a, const Matrix& b) {
    return transport::w2_assignment(metrics::subsample_rows(a, 256),
                                    metrics::subsample_rows(b, 256)).cost;
}

}  // namespace

Matrix Generator::jacobian(VecView z) const {
    const std::size_t d = dim();
    if (z.size() != d) throw std::invalid_argument("jacobian: point dimension mismatch");
    const double h = 1e-4;
    Matrix j(d, d);
    Vec probe(z.begin(), z.end());
    for (std::size_t c = 0; c < d; ++c) {
        probe[c] = z[c] + h;
        const Vec hi = forward(probe);
        probe[c] = z[c] - h;
        const Vec lo = forward(probe);
        probe[c] = z[c];
        for (std::size_t r = 0; r < d; ++r) j(r, c) = (hi[r] - lo[r]) / (2.0 * h);
    }
    return j;
}

AffineGenerator::AffineGenerator(Matrix linear, Vec offset)
    : linear_(std::move(linear)), offset_(std::move(offset)) {
    if (offset_.empty()) throw std::invalid_argument("affine generator: empty offset");
    if (linear_.rows() != offset_.size() || linear_.cols() != offset_.size())
        throw std::invalid_argument("affine generator: linear part must be d x d");
    for (std::size_t i = 0; i < linear_.rows(); ++i) {
        for (std::size_t j = i + 1; j < linear_.cols(); ++j)
            if (linear_(i, j) != 0.0)
                throw std::invalid_argument("affine generator: linear part must be lower triangular");
        if (linear_(i, i) == 0.0)
            throw std::invalid_argument("affine generator: zero diagonal at row " +
                                        std::to_string(i));
    }
    if (!linear_.all_finite())
        throw std::invalid_argument("affine generator: linear part must be finite");
}

AffineGenerator AffineGenerator::identity(std::size_t d) {
    return AffineGenerator(Matrix::identity(d), Vec(d, 0.0));
}

Vec AffineGenerator::forward(VecView z) const {
    Vec out = matvec(linear_, z);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset_[i];
    return out;
}

Vec AffineGenerator::inverse(VecView x) const {
    if (x.size() != offset_.size())
        throw std::invalid_argument("affine generator: point dimension mismatch");
    Vec shifted(x.begin(), x.end());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= offset_[i];
    return solve_lower(linear_, shifted);
}

FullGaussian AffineGenerator::prior() const {
    return FullGaussian(offset_, symmetrized(linear_ * transpose(linear_)));
}

FlowAdapter::FlowAdapter(flow::FlowModel model, std::size_t ode_steps)
    : model_(std::move(model)), ode_steps_(ode_steps) {
    if (model_.dim == 0) throw std::invalid_argument("flow adapter: zero-dimensional model");
    if (model_.context_dim != 0)
        throw std::invalid_argument("flow adapter: contextual models are not supported");
    if (ode_steps_ == 0) throw std::invalid_argument("flow adapter: ode_steps must be positive");
    Rng rng(0xF10A);
    double worst = 0.0;
    for (int probe = 0; probe < 8; ++probe) {
        const Vec z = rng.normals(model_.dim);
        const Vec back = inverse(forward(z));
        for (std::size_t i = 0; i < z.size(); ++i)
            worst = std::max(worst, std::abs(back[i] - z[i]));
    }
    if (!(worst <= 1e-6))
        throw NumericalError("flow adapter: round trip error " + format_shortest(worst) +
                             " exceeds 1e-6");
}

Vec FlowAdapter::forward(VecView z) const {
    return flow::integrate(model_, z, {model_.default_integrator, ode_steps_, true});
}

Vec FlowAdapter::inverse(VecView x) const {
    return flow::integrate(model_, x, {model_.default_integrator, ode_steps_, false});
}

double neg_log_lik(const LinearGaussianLikelihood& lik, VecView x) {
    check_likelihood(lik, x.size());
    const Vec hx = matvec(lik.h, x);
    double sq = 0.0;
    for (std::size_t i = 0; i < hx.size(); ++i) {
        const double r = hx[i] - lik.y[i];
        sq += r * r;
    }
    return 0.5 * sq / lik.sigma2;
}

Vec neg_log_lik_grad(const LinearGaussianLikelihood& lik, VecView x) {
    check_likelihood(lik, x.size());
    Vec resid = matvec(lik.h, x);
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= lik.y[i];
    Vec out(x.size(), 0.0);
    for (std::size_t i = 0; i < lik.h.rows(); ++i)
        for (std::size_t j = 0; j < lik.h.cols(); ++j) out[j] += lik.h(i, j) * resid[i];
    for (double& v : out) v /= lik.sigma2;
    return out;
}

Vec latent_grad(const Generator& gen, const LinearGaussianLikelihood& lik, VecView z) {
    const Vec gx = neg_log_lik_grad(lik, gen.forward(z));
    const Matrix j = gen.jacobian(z);
    Vec out(z.size(), 0.0);
    for (std::size_t r = 0; r < j.rows(); ++r)
        for (std::size_t c = 0; c < j.cols(); ++c) out[c] += j(r, c) * gx[r];
    return out;
}

Matrix latent_langevin(const Generator& gen, const LinearGaussianLikelihood& lik,
                       const LangevinConfig& cfg) {
    const std::size_t d = gen.dim();
    check_likelihood(lik, d);
    if (!(cfg.step > 0.0)) throw std::invalid_argument("langevin: step must be positive");
    if (cfg.steps == 0) throw std::invalid_argument("langevin: need at least one step");
    if (cfg.thin == 0) throw std::invalid_argument("langevin: thinning must be positive");
    const std::size_t burn = cfg.burn_in.value_or(cfg.steps / 5);
    if (burn >= cfg.steps) throw std::invalid_argument("langevin: burn-in must be below steps");

    const std::size_t kept = (cfg.steps - burn + cfg.thin - 1) / cfg.thin;
    Matrix out(kept, d);
    Rng rng(cfg.seed);
    Vec z = rng.normals(d);
    const double noise = std::sqrt(2.0 * cfg.step);
    std::size_t row = 0;
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        if (k >= burn && (k - burn) % cfg.thin == 0) {
            out.set_row(row, gen.forward(z));
            ++row;
        }
        const Vec g = latent_grad(gen, lik, z);
        bool finite = true;
        for (std::size_t i = 0; i < d; ++i) {
            z[i] -= cfg.step * (z[i] + g[i]);
            z[i] += noise * rng.normal();
            finite = finite && std::isfinite(z[i]);
        }
        if (!finite)
            throw NumericalError("langevin: non-finite state at step " + std::to_string(k));
    }
    return out;
}

FullGaussian oracle_posterior(const AffineGenerator& gen,
                              const LinearGaussianLikelihood& lik) {
    const std::size_t d = gen.dim();
    check_likelihood(lik, d);
    const Matrix prior_prec = symmetrized(inverse(gen.prior().covariance()));
    const Matrix ht = transpose(lik.h);
    Matrix lambda = prior_prec + (1.0 / lik.sigma2) * (ht * lik.h);
    const Matrix cov = symmetrized(inverse(symmetrized(lambda)));
    Vec rhs = matvec(prior_prec, gen.offset());
    const Vec hty = matvec(ht, lik.y);
    for (std::size_t i = 0; i < d; ++i) rhs[i] += hty[i] / lik.sigma2;
    return FullGaussian(matvec(cov, rhs), cov);
}

ErrorTransferReport error_transfer_report(const FullGaussian& true_prior,
                                          const Matrix& model_prior_samples,
                                          const LinearGaussianLikelihood& lik,
                                          const LangevinConfig& cfg) {
    const std::size_t d = true_prior.dim();
    check_likelihood(lik, d);
    if (model_prior_samples.cols() != d)
        throw std::invalid_argument("error transfer: sample dimension mismatch");
    if (model_prior_samples.rows() < 2)
        throw std::invalid_argument("error transfer: need at least two model prior samples");

    const FullGaussian model_fit = fit_gaussian(model_prior_samples);
    const AffineGenerator model_gen(cholesky(model_fit.covariance()), model_fit.mean());
    const AffineGenerator true_gen(cholesky(true_prior.covariance()), true_prior.mean());

    const Matrix post_model = latent_langevin(model_gen, lik, cfg);
    LangevinConfig ref_cfg = cfg;
    ref_cfg.seed = cfg.seed + 1;
    const Matrix post_ref = latent_langevin(true_gen, lik, ref_cfg);

    ErrorTransferReport report;
    report.oracle = oracle_posterior(true_gen, lik);
    if (d == 1) {
        report.prior_disc =
            grid_tv(model_prior_samples, true_prior.mean()[0], true_prior.covariance()(0, 0));
        const double om = report.oracle.mean()[0];
        const double ov = report.oracle.covariance()(0, 0);
        report.post_disc = grid_tv(post_model, om, ov);
        report.sampler_disc = grid_tv(post_ref, om, ov);
    } else {
        Rng rng(cfg.seed + 2);
        const Matrix prior_draws = sample_gaussian(rng, true_prior, model_prior_samples.rows());
        report.prior_disc = w2_capped(model_prior_samples, prior_draws);
        const Matrix oracle_draws = sample_gaussian(rng, report.oracle, post_model.rows());
        report.post_disc = w2_capped(post_model, oracle_draws);
        const Matrix oracle_draws2 = sample_gaussian(rng, report.oracle, post_ref.rows());
        report.sampler_disc = w2_capped(post_ref, oracle_draws2);
    }
    return report;
}

}  // namespace shiftgen::post
