#include "shiftgen/dro.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "shiftgen/types.hpp"

namespace shiftgen::dro {

LinearLoss::LinearLoss(Vec direction) : a_(std::move(direction)) {
    if (a_.empty()) throw std::invalid_argument("LinearLoss: empty direction");
}

double LinearLoss::value(VecView, VecView x) const {
    if (x.size() != a_.size()) throw std::invalid_argument("LinearLoss: dimension mismatch");
    return dot(a_, x);
}

Vec LinearLoss::grad_theta(VecView, VecView) const { return {}; }

Vec LinearLoss::grad_x(VecView, VecView x) const {
    if (x.size() != a_.size()) throw std::invalid_argument("LinearLoss: dimension mismatch");
    return a_;
}

PortfolioShortfall::PortfolioShortfall(std::size_t assets, double threshold, double sharpness)
    : assets_(assets), q_(threshold), beta_(sharpness) {
    if (assets_ == 0) throw std::invalid_argument("PortfolioShortfall: no assets");
    if (!(beta_ > 0.0)) throw std::invalid_argument("PortfolioShortfall: sharpness must be > 0");
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_portfolio_args(std::size_t assets, VecView theta, VecView x) {
    if (theta.size() != assets || x.size() != assets)
        throw std::invalid_argument("PortfolioShortfall: dimension mismatch");
}

}  // namespace

double PortfolioShortfall::value(VecView theta, VecView x) const {
    check_portfolio_args(assets_, theta, x);
    const Vec w = softmax_weights(theta);
    return softplus(beta_ * (q_ - dot(w, x))) / beta_;
}

Vec PortfolioShortfall::grad_theta(VecView theta, VecView x) const {
    check_portfolio_args(assets_, theta, x);
    const Vec w = softmax_weights(theta);
    const double s = dot(w, x);
    const double slope = sigmoid(beta_ * (q_ - s));
    Vec g(assets_);
    for (std::size_t j = 0; j < assets_; ++j) g[j] = -slope * w[j] * (x[j] - s);
    return g;
}

Vec PortfolioShortfall::grad_x(VecView theta, VecView x) const {
    check_portfolio_args(assets_, theta, x);
    const Vec w = softmax_weights(theta);
    const double slope = sigmoid(beta_ * (q_ - dot(w, x)));
    return vec_scale(-slope, w);
}

double gradient_check(const DecisionLoss& loss, VecView theta, const Matrix& probes, double h) {
    double worst = 0.0;
    const auto record = [&worst](double analytic, double numeric) {
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    Vec th(theta.begin(), theta.end());
    for (std::size_t i = 0; i < probes.rows(); ++i) {
        Vec x = probes.row_vec(i);
        const Vec gx = loss.grad_x(th, x);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double keep = x[j];
            x[j] = keep + h;
            const double up = loss.value(th, x);
            x[j] = keep - h;
            const double down = loss.value(th, x);
            x[j] = keep;
            record(gx[j], (up - down) / (2.0 * h));
        }
        const Vec gt = loss.grad_theta(th, x);
        for (std::size_t j = 0; j < th.size(); ++j) {
            const double keep = th[j];
            th[j] = keep + h;
            const double up = loss.value(th, x);
            th[j] = keep - h;
            const double down = loss.value(th, x);
            th[j] = keep;
            record(gt[j], (up - down) / (2.0 * h));
        }
    }
    return worst;
}

namespace {

void check_cloud_pair(const Matrix& base, const Matrix& transported) {
    if (base.rows() != transported.rows() || base.cols() != transported.cols())
        throw std::invalid_argument("dro: base/transported shape mismatch");
    if (base.rows() == 0) throw std::invalid_argument("dro: empty particle cloud");
}

}  // namespace

double penalized_objective(const DecisionLoss& loss, VecView theta, const Matrix& base,
                           const Matrix& transported, double lambda) {
    check_cloud_pair(base, transported);
    if (!(lambda > 0.0)) throw std::invalid_argument("penalized_objective: lambda must be > 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < base.rows(); ++i) {
        acc += loss.value(theta, transported.row(i));
        acc -= sq_dist(transported.row(i), base.row(i)) / (2.0 * lambda);
    }
    return acc / static_cast<double>(base.rows());
}

Matrix grad_map(const DecisionLoss& loss, VecView theta, const Matrix& base,
                const Matrix& transported, double lambda) {
    check_cloud_pair(base, transported);
    if (!(lambda > 0.0)) throw std::invalid_argument("grad_map: lambda must be > 0");
    Matrix g(base.rows(), base.cols());
    for (std::size_t i = 0; i < base.rows(); ++i) {
        const Vec gx = loss.grad_x(theta, transported.row(i));
        for (std::size_t j = 0; j < base.cols(); ++j)
            g(i, j) = gx[j] - (transported(i, j) - base(i, j)) / lambda;
    }
    return g;
}

Vec grad_theta(const DecisionLoss& loss, VecView theta, const Matrix& transported) {
    if (transported.rows() == 0) throw std::invalid_argument("grad_theta: empty cloud");
    Vec g(loss.param_dim(), 0.0);
    for (std::size_t i = 0; i < transported.rows(); ++i) {
        const Vec gi = loss.grad_theta(theta, transported.row(i));
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += gi[j];
    }
    return vec_scale(1.0 / static_cast<double>(transported.rows()), g);
}

std::pair<double, double> stationarity_norm(const DecisionLoss& loss, VecView theta,
                                            const Matrix& base, const Matrix& transported,
                                            double lambda) {
    const Vec gt = grad_theta(loss, theta, transported);
    const Matrix gm = grad_map(loss, theta, base, transported, lambda);
    double mean_sq = 0.0;
    for (std::size_t i = 0; i < gm.rows(); ++i) {
        const auto row = gm.row(i);
        mean_sq += dot(row, row);
    }
    mean_sq /= static_cast<double>(gm.rows());
    return {norm2(gt), std::sqrt(mean_sq)};
}

TransportResult gda_run(const DecisionLoss& loss, Vec theta0, const Matrix& base,
                        const GdaConfig& cfg) {
    if (theta0.size() != loss.param_dim())
        throw std::invalid_argument("gda_run: theta0 size mismatch");
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("gda_run: lambda must be > 0");
    if (cfg.tau < 0.0 || cfg.eta < 0.0)
        throw std::invalid_argument("gda_run: step sizes must be >= 0");
    if (cfg.inner_iters == 0) throw std::invalid_argument("gda_run: inner_iters must be >= 1");

    TransportResult res;
    res.base = base;
    res.transported = base;
    res.theta = std::move(theta0);
    res.theta_trace = Matrix(cfg.iters + 1, res.theta.size());
    res.theta_trace.set_row(0, res.theta);

    const auto record = [&loss, &res, &cfg]() {
        res.objective_trace.push_back(
            penalized_objective(loss, res.theta, res.base, res.transported, cfg.lambda));
        const auto [nt, nm] =
            stationarity_norm(loss, res.theta, res.base, res.transported, cfg.lambda);
        res.stat_theta_trace.push_back(nt);
        res.stat_map_trace.push_back(nm);
        return std::isfinite(res.objective_trace.back());
    };
    if (!record()) {
        res.diverged = true;
        return res;
    }

    for (std::size_t it = 0; it < cfg.iters; ++it) {
        const Vec gt = grad_theta(loss, res.theta, res.transported);
        for (std::size_t j = 0; j < res.theta.size(); ++j) res.theta[j] -= cfg.tau * gt[j];
        for (std::size_t sweep = 0; sweep < cfg.inner_iters; ++sweep) {
            const Matrix gm =
                grad_map(loss, res.theta, res.base, res.transported, cfg.lambda);
            for (std::size_t i = 0; i < gm.rows(); ++i)
                for (std::size_t j = 0; j < gm.cols(); ++j)
                    res.transported(i, j) += cfg.eta * gm(i, j);
        }
        res.theta_trace.set_row(it + 1, res.theta);
        if (!record() || !res.transported.all_finite()) {
            res.diverged = true;
            return res;
        }
    }
    return res;
}

Vec softmax_weights(VecView theta) {
    if (theta.empty()) throw std::invalid_argument("softmax_weights: empty input");
    const double peak = *std::max_element(theta.begin(), theta.end());
    Vec w(theta.size());
    double total = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        w[j] = std::exp(theta[j] - peak);
        total += w[j];
    }
    for (double& v : w) v /= total;
    return w;
}

WealthPath backtest(VecView weights, const Matrix& returns) {
    if (weights.size() != returns.cols())
        throw std::invalid_argument("backtest: weights dimension mismatch");
    WealthPath path;
    double wealth = 1.0;
    for (std::size_t t = 0; t < returns.rows(); ++t) {
        const double factor = 1.0 + dot(weights, returns.row(t));
        if (factor <= 0.0) {
            path.bankrupt = true;
            return path;
        }
        wealth *= factor;
        path.wealth.push_back(wealth);
    }
    return path;
}

Standardization fit_standardization(const Matrix& train) {
    if (train.rows() < 2) throw std::invalid_argument("fit_standardization: need >= 2 rows");
    Standardization s;
    s.mean.resize(train.cols());
    s.scale.resize(train.cols());
    for (std::size_t j = 0; j < train.cols(); ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < train.rows(); ++i) m += train(i, j);
        m /= static_cast<double>(train.rows());
        double v = 0.0;
        for (std::size_t i = 0; i < train.rows(); ++i)
            v += (train(i, j) - m) * (train(i, j) - m);
        v /= static_cast<double>(train.rows() - 1);
        if (v < 1e-12)
            throw DataError("fit_standardization: column " + std::to_string(j) +
                            " has (near) zero variance");
        s.mean[j] = m;
        s.scale[j] = std::sqrt(v);
    }
    return s;
}

Matrix apply_standardization(const Standardization& s, const Matrix& x) {
    if (x.cols() != s.mean.size())
        throw std::invalid_argument("apply_standardization: column mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            out(i, j) = (x(i, j) - s.mean[j]) / s.scale[j];
    return out;
}

}  // namespace shiftgen::dro
