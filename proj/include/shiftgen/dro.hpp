#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "shiftgen/matrix.hpp"

namespace shiftgen::dro {

/// Decision loss l(theta, x) with analytic gradients in both arguments.
class DecisionLoss {
  public:
    virtual ~DecisionLoss() = default;
    virtual std::size_t param_dim() const = 0;
    virtual double value(VecView theta, VecView x) const = 0;
    virtual Vec grad_theta(VecView theta, VecView x) const = 0;
    virtual Vec grad_x(VecView theta, VecView x) const = 0;
};

/// l(theta, x) = a^T x with no decision parameter; its worst-case transport
/// has the closed form x + lambda a.
class LinearLoss : public DecisionLoss {
  public:
    explicit LinearLoss(Vec direction);
    std::size_t param_dim() const override { return 0; }
    double value(VecView theta, VecView x) const override;
    Vec grad_theta(VecView theta, VecView x) const override;
    Vec grad_x(VecView theta, VecView x) const override;
    const Vec& direction() const { return a_; }

  private:
    Vec a_;
};

/// Smoothed downside shortfall of a long-only portfolio:
/// l(theta, x) = (1/beta) log(1 + exp(beta (q - w^T x))), w = softmax(theta).
class PortfolioShortfall : public DecisionLoss {
  public:
    PortfolioShortfall(std::size_t assets, double threshold = 0.0, double sharpness = 10.0);
    std::size_t param_dim() const override { return assets_; }
    double value(VecView theta, VecView x) const override;
    Vec grad_theta(VecView theta, VecView x) const override;
    Vec grad_x(VecView theta, VecView x) const override;

  private:
    std::size_t assets_;
    double q_;
    double beta_;
};

/// Worst relative error between the analytic gradients and central finite
/// differences of value(), over every probe row; the self-check used by
/// tests and reports.
double gradient_check(const DecisionLoss& loss, VecView theta, const Matrix& probes,
                      double h = 1e-5);

struct GdaConfig {
    double lambda = 0.1;  // perturbation scale, > 0
    double tau = 0.05;    // theta step, >= 0
    double eta = 0.01;    // particle step, >= 0
    std::size_t iters = 200;
    std::size_t inner_iters = 5;  // ascent sweeps per outer step, >= 1
};

struct TransportResult {
    Matrix base;
    Matrix transported;
    Vec theta;
    Matrix theta_trace;      // iters+1 rows, row 0 = theta0
    Vec objective_trace;     // penalized objective, aligned with theta_trace
    Vec stat_theta_trace;    // ||mean grad_theta||
    Vec stat_map_trace;      // empirical L2 norm of the map gradient
    bool diverged = false;
};

/// Mean over particles of l(theta, x'_i) - ||x'_i - x_i||^2 / (2 lambda).
double penalized_objective(const DecisionLoss& loss, VecView theta, const Matrix& base,
                           const Matrix& transported, double lambda);

/// Per-particle ascent direction grad_x l(theta, x'_i) - (x'_i - x_i) / lambda.
Matrix grad_map(const DecisionLoss& loss, VecView theta, const Matrix& base,
                const Matrix& transported, double lambda);

/// Mean over particles of grad_theta l(theta, x'_i).
Vec grad_theta(const DecisionLoss& loss, VecView theta, const Matrix& transported);

/// (||grad_theta||_2, sqrt(mean of squared row norms of grad_map)).
std::pair<double, double> stationarity_norm(const DecisionLoss& loss, VecView theta,
                                            const Matrix& base, const Matrix& transported,
                                            double lambda);

/// Alternating scheme: one theta descent step, then inner_iters particle
/// ascent sweeps, starting from transported = base.  Aborts with diverged
/// set (traces kept) on non-finite iterates.
TransportResult gda_run(const DecisionLoss& loss, Vec theta0, const Matrix& base,
                        const GdaConfig& cfg);

/// Numerically stable softmax; strictly positive, sums to 1.
Vec softmax_weights(VecView theta);

struct WealthPath {
    Vec wealth;  // after each period, initial wealth 1 not included
    bool bankrupt = false;
};

/// Cumulative wealth of holding the fixed weights over the return rows.
/// A period factor <= 0 stops the path early with the bankruptcy flag set.
WealthPath backtest(VecView weights, const Matrix& returns);

struct Standardization {
    Vec mean;
    Vec scale;
};

/// Column means and standard deviations of the training sample; columns
/// with (near) zero variance are a DataError.
Standardization fit_standardization(const Matrix& train);
Matrix apply_standardization(const Standardization& s, const Matrix& x);

}  // namespace shiftgen::dro
