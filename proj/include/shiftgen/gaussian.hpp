#pragma once

#include <utility>

#include "shiftgen/linalg.hpp"
#include "shiftgen/rng.hpp"

namespace shiftgen {

/// Multivariate Gaussian with a cached Cholesky factor of the covariance.
/// Construction validates symmetry (1e-12) and positive definiteness.
class FullGaussian {
public:
    FullGaussian(Vec mean, Matrix covariance);

    static FullGaussian standard(std::size_t d);
    /// Diagonal covariance from per-coordinate variances.
    static FullGaussian diagonal(Vec mean, VecView variances);

    std::size_t dim() const { return mean_.size(); }
    const Vec& mean() const { return mean_; }
    const Matrix& covariance() const { return cov_; }
    const Matrix& chol() const { return chol_; }

    double log_density(VecView x) const;

private:
    Vec mean_;
    Matrix cov_;
    Matrix chol_;
};

/// n i.i.d. draws, one per row: mean + L z with z standard normal.
Matrix sample_gaussian(Rng& rng, const FullGaussian& g, std::size_t n);

/// Sample mean and unbiased sample covariance (divisor n-1); needs >= 2 rows.
std::pair<Vec, Matrix> mean_cov(const Matrix& samples);

/// Moment-matched Gaussian of a cloud; a small ridge keeps the covariance
/// factorizable when the cloud is (near-)degenerate.
FullGaussian fit_gaussian(const Matrix& samples, double ridge = 1e-9);

/// KL(a || b) between Gaussians, closed form.
double kl_gaussian(const FullGaussian& a, const FullGaussian& b);

}  // namespace shiftgen
