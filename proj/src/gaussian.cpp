#include "shiftgen/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace shiftgen {

FullGaussian::FullGaussian(Vec mean, Matrix covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
    if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
        throw std::invalid_argument("FullGaussian: mean/covariance dimensions disagree");
    for (std::size_t i = 0; i < cov_.rows(); ++i)
        for (std::size_t j = i + 1; j < cov_.cols(); ++j)
            if (std::fabs(cov_(i, j) - cov_(j, i)) > 1e-12)
                throw std::invalid_argument("FullGaussian: covariance not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
    chol_ = cholesky(cov_);
}

FullGaussian FullGaussian::standard(std::size_t d) {
    return FullGaussian(Vec(d, 0.0), Matrix::identity(d));
}

FullGaussian FullGaussian::diagonal(Vec mean, VecView variances) {
    Matrix cov(mean.size(), mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) cov(i, i) = variances[i];
    return FullGaussian(std::move(mean), std::move(cov));
}

double FullGaussian::log_density(VecView x) const {
    const std::size_t d = dim();
    Vec centered(d);
    for (std::size_t i = 0; i < d; ++i) centered[i] = x[i] - mean_[i];
    const Vec y = solve_lower(chol_, centered);  // quad form = ||L^{-1}(x-m)||^2
    const double quad = dot(y, y);
    return -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) +
                   chol_logdet(chol_) + quad);
}

Matrix sample_gaussian(Rng& rng, const FullGaussian& g, std::size_t n) {
    if (n < 1) throw std::invalid_argument("sample_gaussian: n must be >= 1");
    const std::size_t d = g.dim();
    Matrix out(n, d);
    Vec z(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
        for (std::size_t j = 0; j < d; ++j) {
            double s = g.mean()[j];
            for (std::size_t k = 0; k <= j; ++k) s += g.chol()(j, k) * z[k];
            out(i, j) = s;
        }
    }
    return out;
}

std::pair<Vec, Matrix> mean_cov(const Matrix& samples) {
    const std::size_t n = samples.rows(), d = samples.cols();
    if (n < 2) throw std::invalid_argument("mean_cov: need at least 2 rows");
    Vec mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += samples(i, j);
    for (double& v : mean) v /= static_cast<double>(n);
    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double da = samples(i, a) - mean[a];
            for (std::size_t b = a; b < d; ++b) cov(a, b) += da * (samples(i, b) - mean[b]);
        }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= static_cast<double>(n - 1);
            cov(b, a) = cov(a, b);
        }
    return {std::move(mean), std::move(cov)};
}

FullGaussian fit_gaussian(const Matrix& samples, double ridge) {
    auto [mean, cov] = mean_cov(samples);
    for (std::size_t i = 0; i < cov.rows(); ++i) cov(i, i) += ridge;
    return FullGaussian(std::move(mean), std::move(cov));
}

double kl_gaussian(const FullGaussian& a, const FullGaussian& b) {
    const std::size_t d = a.dim();
    if (b.dim() != d) throw std::invalid_argument("kl_gaussian: dimensions disagree");
    // 0.5 [ tr(Σb^{-1} Σa) + (mb-ma)^T Σb^{-1} (mb-ma) - d + logdet Σb - logdet Σa ]
    double trace = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        Vec col(d);
        for (std::size_t i = 0; i < d; ++i) col[i] = a.covariance()(i, j);
        Vec y = solve_lower_t(b.chol(), solve_lower(b.chol(), col));
        trace += y[j];
    }
    Vec dm(d);
    for (std::size_t i = 0; i < d; ++i) dm[i] = a.mean()[i] - b.mean()[i];
    const Vec w = solve_lower(b.chol(), dm);
    const double quad = dot(w, w);
    return 0.5 * (trace + quad - static_cast<double>(d) + chol_logdet(b.chol()) -
                  chol_logdet(a.chol()));
}

}  // namespace shiftgen
