#include "shiftgen/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shiftgen/types.hpp"
#include "shiftgen/linalg.hpp"
#include "shiftgen/ode.hpp"

namespace shiftgen::diffusion {

VpSchedule::VpSchedule(Vec betas) : betas_(std::move(betas)) {
    alpha_bars_.reserve(betas_.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
        if (!(betas_[i] > 0.0 && betas_[i] < 1.0))
            throw std::invalid_argument("VpSchedule: beta outside (0, 1) at step " +
                                        std::to_string(i + 1));
        prod *= 1.0 - betas_[i];
        alpha_bars_.push_back(prod);
    }
}

VpSchedule VpSchedule::constant(double beta, std::size_t n) { return VpSchedule(Vec(n, beta)); }

double VpSchedule::ou_time(std::size_t i) const { return -0.5 * std::log(alpha_bars_[i]); }

double VpSchedule::terminal_ou_time() const {
    return betas_.empty() ? 0.0 : ou_time(betas_.size() - 1);
}

std::vector<Matrix> forward_chain(const Matrix& x0, const VpSchedule& schedule, Rng& rng) {
    std::vector<Matrix> chain;
    chain.reserve(schedule.steps() + 1);
    chain.push_back(x0);
    for (std::size_t s = 0; s < schedule.steps(); ++s) {
        const double keep = std::sqrt(1.0 - schedule.beta(s));
        const double mix = std::sqrt(schedule.beta(s));
        const Matrix& prev = chain.back();
        Matrix next(x0.rows(), x0.cols());
        for (std::size_t i = 0; i < x0.rows(); ++i)
            for (std::size_t j = 0; j < x0.cols(); ++j)
                next(i, j) = keep * prev(i, j) + mix * rng.normal();
        chain.push_back(std::move(next));
    }
    return chain;
}

FullGaussian ou_marginal(const FullGaussian& start, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("ou_marginal: time must be >= 0");
    const double decay = std::exp(-t);
    Vec mean = vec_scale(decay, start.mean());
    Matrix cov = (decay * decay) * start.covariance();
    const double mixed_in = 1.0 - decay * decay;
    for (std::size_t i = 0; i < cov.rows(); ++i) cov(i, i) += mixed_in;
    return FullGaussian(std::move(mean), std::move(cov));
}

Vec analytic_score(const Mixture& mixture, VecView x) {
    if (mixture.empty()) throw std::invalid_argument("analytic_score: empty mixture");
    double total = 0.0;
    for (const auto& [w, g] : mixture) {
        if (w < 0.0) throw std::invalid_argument("analytic_score: negative weight");
        if (g.dim() != x.size())
            throw std::invalid_argument("analytic_score: component dimension mismatch");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("analytic_score: weights must sum to 1");

    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(mixture.size(), neg_inf);
    std::vector<Vec> grads(mixture.size());
    double peak = neg_inf;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const auto& [w, g] = mixture[i];
        if (w == 0.0) continue;
        logs[i] = std::log(w) + g.log_density(x);
        Vec centered(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) centered[j] = x[j] - g.mean()[j];
        grads[i] = vec_scale(-1.0, solve_lower_t(g.chol(), solve_lower(g.chol(), centered)));
        peak = std::max(peak, logs[i]);
    }
    if (!std::isfinite(peak)) throw NumericalError("analytic_score: mixture density vanished");

    double mass = 0.0;
    for (double l : logs) mass += std::exp(l - peak);
    Vec score(x.size(), 0.0);
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        if (logs[i] == neg_inf) continue;
        const double resp = std::exp(logs[i] - peak) / mass;
        for (std::size_t j = 0; j < x.size(); ++j) score[j] += resp * grads[i][j];
    }
    return score;
}

ScoreFn mixture_score(Mixture mixture) {
    // samplers query the same handful of times for every particle, so the
    // diffused mixture is memoized per time
    return [mixture = std::move(mixture),
            cache = std::map<double, Mixture>{}](VecView x, double t) mutable {
        auto [it, fresh] = cache.try_emplace(t);
        if (fresh) {
            it->second.reserve(mixture.size());
            for (const auto& [w, g] : mixture) it->second.emplace_back(w, ou_marginal(g, t));
        }
        return analytic_score(it->second, x);
    };
}

namespace {

void check_score_model(const ScoreModel& model) {
    const std::size_t want = assembled_dim(model.dim, true, 0);
    if (model.net.input_dim() != want || model.net.output_dim() != model.dim)
        throw std::invalid_argument("ScoreModel: net shape inconsistent with dim");
}

}  // namespace

ScoreFn model_score(const ScoreModel& model) {
    check_score_model(model);
    const double terminal = model.schedule.terminal_ou_time();
    return [net = model.net, terminal](VecView x, double t) {
        NetInput in;
        in.x.assign(x.begin(), x.end());
        in.t = terminal > 0.0 ? std::clamp(t / terminal, 0.0, 1.0) : 0.0;
        return forward(net, in);
    };
}

DsmResult train_dsm(const Matrix& data, const VpSchedule& schedule, const DsmTrainConfig& cfg,
                    Rng& rng) {
    if (data.rows() == 0) throw std::invalid_argument("train_dsm: empty data");
    if (cfg.batch == 0 || data.rows() < cfg.batch)
        throw std::invalid_argument("train_dsm: data rows must be >= batch");
    if (schedule.steps() == 0) throw std::invalid_argument("train_dsm: empty schedule");
    const std::size_t d = data.cols();

    DsmResult res;
    std::vector<std::size_t> sizes;
    sizes.push_back(assembled_dim(d, true, 0));
    for (std::size_t h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(d);
    res.model.net = make_mlp(sizes, rng);
    res.model.schedule = schedule;
    res.model.dim = d;

    AdamState adam = AdamState::like(res.model.net, cfg.lr);
    const std::size_t batches = std::max<std::size_t>(1, data.rows() / cfg.batch);
    const double terminal = schedule.terminal_ou_time();

    std::vector<NetInput> inputs(cfg.batch);
    Matrix targets(cfg.batch, d);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            for (std::size_t i = 0; i < cfg.batch; ++i) {
                const std::size_t row = rng.below(data.rows());
                const std::size_t step = rng.below(schedule.steps());
                const double ab = schedule.alpha_bar(step);
                const double noise_sd = std::sqrt(1.0 - ab);
                const Vec eps = rng.normals(d);
                NetInput in;
                in.x.resize(d);
                for (std::size_t j = 0; j < d; ++j) {
                    in.x[j] = std::sqrt(ab) * data(row, j) + noise_sd * eps[j];
                    targets(i, j) = -eps[j] / noise_sd;
                }
                in.t = schedule.ou_time(step) / terminal;
                inputs[i] = std::move(in);
            }
            MlpGrads grads = MlpGrads::zeros_like(res.model.net);
            const double loss = matching_loss_grad(res.model.net, inputs, targets, &grads);
            if (!std::isfinite(loss)) {
                res.diverged = true;
                res.loss_trace.push_back(loss);
                return res;
            }
            adam_step(res.model.net, grads, adam);
            epoch_loss += loss;
        }
        res.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return res;
}

Matrix reverse_sde_sample(const ScoreFn& score, const VpSchedule& schedule, std::size_t n,
                          std::size_t dim, Rng& rng) {
    Matrix x = sample_gaussian(rng, FullGaussian::standard(dim), n);
    for (std::size_t s = schedule.steps(); s-- > 0;) {
        const double beta = schedule.beta(s);
        const double root_beta = std::sqrt(beta);
        const double t = schedule.ou_time(s);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec sc = score(x.row(i), t);
            if (sc.size() != dim)
                throw std::invalid_argument("reverse_sde_sample: score dimension mismatch");
            for (std::size_t j = 0; j < dim; ++j)
                x(i, j) += 0.5 * beta * x(i, j) + beta * sc[j] + root_beta * rng.normal();
        }
        if (!x.all_finite())
            throw NumericalError("reverse_sde_sample: non-finite state at step " +
                                 std::to_string(s + 1));
    }
    return x;
}

Matrix reverse_sde_sample(const ScoreModel& model, std::size_t n, Rng& rng) {
    return reverse_sde_sample(model_score(model), model.schedule, n, model.dim, rng);
}

Matrix pf_ode_sample(const ScoreFn& score, std::size_t n, std::size_t dim, std::size_t steps,
                     Rng& rng, double terminal_time) {
    if (!(terminal_time > 0.0))
        throw std::invalid_argument("pf_ode_sample: terminal time must be positive");
    Matrix x = sample_gaussian(rng, FullGaussian::standard(dim), n);
    if (steps == 0) return x;
    // rk4 stage times can land a rounding error below zero at the last step
    const VectorField field = [&score](VecView y, double t) {
        Vec v = score(y, std::max(t, 0.0));
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = -y[j] - v[j];
        return v;
    };
    const double dt = -terminal_time / static_cast<double>(steps);
    for (std::size_t i = 0; i < n; ++i) {
        Vec y = x.row_vec(i);
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = terminal_time + static_cast<double>(k) * dt;
            y = ode_step(field, y, t, dt, OdeMethod::rk4);
        }
        for (double v : y)
            if (!std::isfinite(v))
                throw NumericalError("pf_ode_sample: non-finite state for particle " +
                                     std::to_string(i));
        x.set_row(i, y);
    }
    return x;
}

Matrix pf_ode_sample(const ScoreModel& model, std::size_t n, std::size_t steps, Rng& rng) {
    return pf_ode_sample(model_score(model), n, model.dim, steps, rng,
                         model.schedule.terminal_ou_time());
}

void save_score(const std::filesystem::path& path, const ScoreModel& model) {
    check_score_model(model);
    std::ofstream out(path);
    if (!out) throw DataError("save_score: cannot open " + path.string());
    out << kScoreFormatHeader << "\n";
    out << "d " << model.dim << " steps " << model.schedule.steps() << "\nbetas";
    for (std::size_t i = 0; i < model.schedule.steps(); ++i)
        out << ' ' << format_shortest(model.schedule.beta(i));
    out << "\n";
    write_net_text(out, model.net);
    if (!out) throw DataError("save_score: write failed for " + path.string());
}

ScoreModel load_score(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_score: cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    if (header != kScoreFormatHeader)
        throw DataError("load_score: header '" + header + "', expected '" +
                        std::string(kScoreFormatHeader) + "'");
    std::string label;
    std::size_t d = 0;
    std::size_t steps = 0;
    if (!(in >> label >> d) || label != "d") throw DataError("load_score: malformed metadata");
    if (!(in >> label >> steps) || label != "steps")
        throw DataError("load_score: malformed metadata");
    if (!(in >> label) || label != "betas") throw DataError("load_score: malformed metadata");
    Vec betas(steps);
    for (double& b : betas)
        if (!(in >> b)) throw DataError("load_score: truncated schedule");
    ScoreModel model;
    model.schedule = VpSchedule(std::move(betas));
    model.dim = d;
    model.net = read_net_text(in);
    check_score_model(model);
    return model;
}

}  // namespace shiftgen::diffusion
