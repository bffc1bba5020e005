#include "shiftgen/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "CLI11.hpp"
#include "shiftgen/diffusion.hpp"
#include "shiftgen/dro.hpp"
#include "shiftgen/flowmatch.hpp"
#include "shiftgen/gaussian.hpp"
#include "shiftgen/metrics.hpp"
#include "shiftgen/posterior.hpp"
#include "shiftgen/rng.hpp"
#include "shiftgen/transport.hpp"

namespace shiftgen::cli {

using nlohmann::json;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// -------- config access -----------------------------------------------------

const json* maybe(const json& p, const std::string& key) {
    if (!p.is_object() || !p.contains(key)) return nullptr;
    return &p.at(key);
}

double num_param(const json& p, const std::string& key, double dflt) {
    const json* v = maybe(p, key);
    if (!v) return dflt;
    if (!v->is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return v->get<double>();
}

std::size_t size_param(const json& p, const std::string& key, std::size_t dflt) {
    const json* v = maybe(p, key);
    if (!v) return dflt;
    if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError("config: '" + key + "' must be a nonnegative integer");
    return v->get<std::size_t>();
}

std::string str_param(const json& p, const std::string& key, const std::string& dflt) {
    const json* v = maybe(p, key);
    if (!v) return dflt;
    if (!v->is_string()) throw ConfigError("config: '" + key + "' must be a string");
    return v->get<std::string>();
}

std::vector<double> list_param(const json& p, const std::string& key,
                               std::vector<double> dflt) {
    const json* v = maybe(p, key);
    if (!v) return dflt;
    if (!v->is_array()) throw ConfigError("config: '" + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError("config: '" + key + "' must be a list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Vec vec_param(const json& v, const std::string& what) {
    if (!v.is_array() || v.empty())
        throw ConfigError("config: '" + what + "' must be a nonempty list of numbers");
    Vec out;
    for (const auto& e : v) {
        if (!e.is_number())
            throw ConfigError("config: '" + what + "' must be a nonempty list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Matrix matrix_param(const json& v, const std::string& what) {
    if (!v.is_array() || v.empty())
        throw ConfigError("config: '" + what + "' must be a list of equal-length rows");
    std::vector<Vec> rows;
    for (const auto& r : v) rows.push_back(vec_param(r, what));
    Matrix out(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != out.cols())
            throw ConfigError("config: '" + what + "' must be a list of equal-length rows");
        out.set_row(i, rows[i]);
    }
    return out;
}

std::vector<std::size_t> hidden_param(const json& p, const std::string& key,
                                      std::vector<std::size_t> dflt) {
    const json* v = maybe(p, key);
    if (!v) return dflt;
    if (!v->is_array()) throw ConfigError("config: '" + key + "' must be a list of layer widths");
    std::vector<std::size_t> out;
    for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<long long>() <= 0)
            throw ConfigError("config: '" + key + "' must be a list of layer widths");
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

// -------- shared plumbing ----------------------------------------------------

void stamp(Report& report, const RunConfig& cfg) {
    report.set("subcommand", cfg.subcommand);
    report.set("tool_version", std::string("shiftgen ") + kVersion);
    report.set("seed", static_cast<std::uint64_t>(cfg.seed));
}

void write_report_file(const RunConfig& cfg, Report& report) {
    const std::string name = cfg.subcommand + "_report.txt";
    std::ofstream out(cfg.out_dir / name, std::ios::binary);
    if (!out) throw DataError("cannot write report to " + (cfg.out_dir / name).string());
    out << report.text();
}

std::vector<std::string> column_names(const std::vector<std::string>& from_csv,
                                      std::size_t d) {
    if (!from_csv.empty()) return from_csv;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) names.push_back("c" + std::to_string(j));
    return names;
}

Vec column_of(const Matrix& m, std::size_t j) {
    Vec out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, j);
    return out;
}

double sample_variance(VecView xs) {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double v : xs) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(xs.size() - 1);
}

std::string join_sig6(VecView xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += format_sig6(xs[i]);
    }
    return out;
}

Matrix split_head(const Matrix& m, std::size_t rows) {
    Matrix out(rows, m.cols());
    for (std::size_t i = 0; i < rows; ++i) out.set_row(i, m.row(i));
    return out;
}

Matrix split_tail(const Matrix& m, std::size_t from) {
    Matrix out(m.rows() - from, m.cols());
    for (std::size_t i = from; i < m.rows(); ++i) out.set_row(i - from, m.row(i));
    return out;
}

double w2_capped(const Matrix& a, const Matrix& b) {
    return transport::w2_assignment(metrics::subsample_rows(a, 256),
                                    metrics::subsample_rows(b, 256)).cost;
}

// -------- synthetic data -----------------------------------------------------

std::size_t poisson_draw(Rng& rng, double lambda) {
    if (lambda > 30.0) {
        // normal tail approximation keeps the product loop bounded
        const double v = lambda + std::sqrt(lambda) * rng.normal();
        return v <= 0.0 ? 0 : static_cast<std::size_t>(std::llround(v));
    }
    const double limit = std::exp(-lambda);
    double prod = rng.uniform();
    std::size_t k = 0;
    while (prod > limit) {
        prod *= rng.uniform();
        ++k;
    }
    return k;
}

}  // namespace

// -------- report -------------------------------------------------------------

std::string format_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void Report::set(const std::string& key, const std::string& value) {
    if (find(key)) throw std::logic_error("report: duplicate key " + key);
    lines.emplace_back(key, value);
}

void Report::set(const std::string& key, const char* value) { set(key, std::string(value)); }

void Report::set(const std::string& key, double value) { set(key, format_sig6(value)); }

void Report::set(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

const std::string* Report::find(const std::string& key) const {
    for (const auto& [k, v] : lines)
        if (k == key) return &v;
    return nullptr;
}

std::string Report::text() const {
    std::string out;
    for (const auto& [k, v] : lines) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

// -------- synthetic data -----------------------------------------------------

Matrix synth_outage(std::size_t n, std::uint64_t seed) {
    const Vec mu = {3.6, 3.3, 3.1, 2.9, 1.7, 1.3, 1.0, 0.7, 0.4, 0.1};
    const Vec load = {0.55, 0.5, 0.45, 0.5, 0.6, 0.45, 0.4, 0.5, 0.55, 0.6};
    const Vec idio = {0.35, 0.3, 0.4, 0.35, 0.45, 0.4, 0.5, 0.45, 0.5, 0.55};
    Rng rng(seed);
    Matrix out(n, mu.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double f = rng.normal();
        for (std::size_t j = 0; j < mu.size(); ++j) {
            const double lambda = std::exp(mu[j] + load[j] * f + idio[j] * rng.normal());
            out(i, j) = static_cast<double>(poisson_draw(rng, lambda));
        }
    }
    return out;
}

Matrix synth_returns(std::size_t n, std::uint64_t seed) {
    const Vec mu = {4e-4, 5e-4, 3e-4, 6e-4, 1e-4, 2e-4};
    const Vec load = {1.0, 1.2, 0.9, 1.1, 0.1, 0.2};
    const Vec idio = {0.006, 0.009, 0.007, 0.011, 0.002, 0.008};
    Rng rng(seed);
    Matrix out(n, mu.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double market = 0.008 * rng.normal();
        for (std::size_t j = 0; j < mu.size(); ++j)
            out(i, j) = mu[j] + load[j] * market + idio[j] * rng.normal();
    }
    return out;
}

// -------- scenario -----------------------------------------------------------

Report cmd_scenario(const RunConfig& cfg) {
    const Stopwatch clock;
    const json& p = cfg.params;
    const std::size_t epochs = size_param(p, "epochs", 400);
    const std::size_t batch = size_param(p, "batch", 128);
    const double lr = num_param(p, "lr", 2e-3);
    const std::vector<std::size_t> hidden = hidden_param(p, "hidden", {64, 64});
    const double split = num_param(p, "split", 0.8);
    const std::size_t n_synth = size_param(p, "n", 4000);
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("config: 'split' must be inside (0,1)");

    Matrix raw;
    std::vector<std::string> names;
    if (!cfg.input.empty()) {
        const Csv csv = read_csv(cfg.input);
        raw = csv.values;
        names = column_names(csv.columns, raw.cols());
    } else {
        raw = synth_outage(n_synth, cfg.seed);
        names = column_names({}, raw.cols());
    }
    if (raw.rows() < 10) throw DataError("scenario: need at least 10 rows");

    Matrix transformed(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.rows(); ++i)
        for (std::size_t j = 0; j < raw.cols(); ++j) {
            if (raw(i, j) <= -1.0)
                throw DataError("scenario: column '" + names[j] +
                                "' has a value <= -1, log(1+x) undefined");
            transformed(i, j) = std::log1p(raw(i, j));
        }

    const auto n_train = static_cast<std::size_t>(split * static_cast<double>(raw.rows()));
    if (n_train < 2 || n_train >= raw.rows())
        throw DataError("scenario: split leaves an empty side");
    const Matrix train_t = split_head(transformed, n_train);
    const Matrix test_t = split_tail(transformed, n_train);

    const dro::Standardization stats = dro::fit_standardization(train_t);
    const Matrix train = dro::apply_standardization(stats, train_t);
    const Matrix test = dro::apply_standardization(stats, test_t);

    Rng train_rng(cfg.seed);
    const flow::FmTrainConfig train_cfg{.epochs = epochs, .batch = batch, .lr = lr,
                                        .hidden = hidden};
    const flow::TrainResult fit =
        flow::train_fm(train, FullGaussian::standard(train.cols()), train_cfg, train_rng);
    if (fit.diverged) throw NumericalError("scenario: flow training diverged");

    const std::size_t n_gen = size_param(p, "n_gen", test.rows());
    if (n_gen < 2) throw ConfigError("config: 'n_gen' must be at least 2");
    Rng gen_rng(cfg.seed + 1);
    const Matrix latent =
        sample_gaussian(gen_rng, FullGaussian::standard(train.cols()), n_gen);
    const Matrix generated = flow::push(fit.model, latent, {.steps = 64, .reverse = true});

    double bandwidth = num_param(p, "bandwidth", 0.0);
    if (bandwidth <= 0.0) bandwidth = metrics::median_heuristic(test, generated);
    const double mmd2 = metrics::mmd(test, generated, {.sigma = bandwidth});
    const Vec ks = metrics::ks_per_coordinate(test, generated);
    const double corr_fro = metrics::corr_diff(test, generated).frobenius;

    Matrix back(generated.rows(), generated.cols());
    for (std::size_t i = 0; i < generated.rows(); ++i)
        for (std::size_t j = 0; j < generated.cols(); ++j)
            back(i, j) = std::expm1(generated(i, j) * stats.scale[j] + stats.mean[j]);

    std::filesystem::create_directories(cfg.out_dir);
    write_csv(cfg.out_dir / "scenario_samples.csv", generated, names);
    write_csv(cfg.out_dir / "scenario_samples_counts.csv", back, names);
    metrics::write_ecdf_csv(cfg.out_dir / "scenario_ecdf_real.csv", test);
    metrics::write_ecdf_csv(cfg.out_dir / "scenario_ecdf_gen.csv", generated);

    Report report;
    stamp(report, cfg);
    report.set("input", cfg.input.empty() ? "builtin:outage" : cfg.input.string());
    report.set("epochs", static_cast<std::uint64_t>(epochs));
    report.set("batch", static_cast<std::uint64_t>(batch));
    report.set("lr", lr);
    {
        std::string h;
        for (std::size_t i = 0; i < hidden.size(); ++i)
            h += (i ? "," : "") + std::to_string(hidden[i]);
        report.set("hidden", h);
    }
    report.set("split", split);
    report.set("n_train", static_cast<std::uint64_t>(train.rows()));
    report.set("n_test", static_cast<std::uint64_t>(test.rows()));
    report.set("n_gen", static_cast<std::uint64_t>(n_gen));
    report.set("loss_final", fit.loss_trace.empty() ? 0.0 : fit.loss_trace.back());
    report.set("bandwidth", bandwidth);
    report.set("mmd2", mmd2);
    double ks_max = 0.0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        report.set("ks_" + names[j], ks[j]);
        ks_max = std::max(ks_max, ks[j]);
    }
    report.set("ks_max", ks_max);
    report.set("corr_fro", corr_fro);
    report.set("file_samples", "scenario_samples.csv");
    report.set("file_samples_counts", "scenario_samples_counts.csv");
    report.set("file_ecdf_real", "scenario_ecdf_real.csv");
    report.set("file_ecdf_gen", "scenario_ecdf_gen.csv");
    write_report_file(cfg, report);
    report.wall_seconds = clock.seconds();
    return report;
}

// -------- stress -------------------------------------------------------------

namespace {

Report stress_linear(const RunConfig& cfg) {
    const Stopwatch clock;
    const json& p = cfg.params;
    const std::size_t n = size_param(p, "n", 200);
    Vec direction = {1.0, 0.0};
    if (const json* v = maybe(p, "direction")) direction = vec_param(*v, "direction");
    const std::vector<double> lambdas = list_param(p, "lambdas", {0.5});
    const std::size_t inner_iters = size_param(p, "inner_iters", 500);

    Rng rng(cfg.seed);
    const Matrix base = sample_gaussian(rng, FullGaussian::standard(direction.size()), n);
    const dro::LinearLoss loss{direction};

    Report report;
    stamp(report, cfg);
    report.set("loss", "linear");
    report.set("direction", join_sig6(direction));
    report.set("n", static_cast<std::uint64_t>(n));
    report.set("inner_iters", static_cast<std::uint64_t>(inner_iters));

    std::filesystem::create_directories(cfg.out_dir);
    write_csv(cfg.out_dir / "stress_base.csv", base);
    report.set("file_base", "stress_base.csv");

    for (double lambda : lambdas) {
        if (!(lambda > 0.0)) throw ConfigError("config: 'lambdas' must be positive");
        dro::GdaConfig gda;
        gda.lambda = lambda;
        gda.eta = num_param(p, "eta", 0.4 * lambda);
        gda.tau = 0.0;
        gda.iters = 1;
        gda.inner_iters = inner_iters;
        const dro::TransportResult res = dro::gda_run(loss, {}, base, gda);
        if (res.diverged) throw NumericalError("stress: adversarial ascent diverged");

        double max_dev = 0.0;
        for (std::size_t i = 0; i < base.rows(); ++i)
            for (std::size_t j = 0; j < base.cols(); ++j) {
                const double target = base(i, j) + lambda * direction[j];
                max_dev = std::max(max_dev, std::abs(res.transported(i, j) - target));
            }
        const double worst = res.objective_trace.back();
        const double nominal =
            dro::penalized_objective(loss, res.theta, base, base, lambda);
        const std::string tag = format_sig6(lambda);
        report.set("max_dev_lambda_" + tag, max_dev);
        report.set("summary_lambda_" + tag,
                   "lambda=" + tag + " worst_case=" + format_sig6(worst) +
                       " nominal=" + format_sig6(nominal) +
                       " stationarity_theta=" + format_sig6(res.stat_theta_trace.back()) +
                       " stationarity_map=" + format_sig6(res.stat_map_trace.back()));
        write_csv(cfg.out_dir / ("stress_particles_" + tag + ".csv"), res.transported);
        report.set("file_particles_" + tag, "stress_particles_" + tag + ".csv");
    }
    write_report_file(cfg, report);
    report.wall_seconds = clock.seconds();
    return report;
}

}  // namespace

Report cmd_stress(const RunConfig& cfg) {
    const json& p = cfg.params;
    if (str_param(p, "loss", "portfolio") == "linear") return stress_linear(cfg);

    const Stopwatch clock;
    const std::vector<double> lambdas = list_param(p, "lambdas", {0.05, 0.1, 0.2});
    const double tau = num_param(p, "tau", 0.05);
    const double eta = num_param(p, "eta", 0.02);
    const std::size_t iters = size_param(p, "iters", 300);
    const std::size_t inner_iters = size_param(p, "inner_iters", 5);
    const double beta = num_param(p, "beta", 10.0);
    const double q = num_param(p, "q", 0.0);
    const double split = num_param(p, "split", 0.8);
    const std::size_t n_synth = size_param(p, "n", 1500);
    const std::size_t nominal_iters = size_param(p, "nominal_iters", 300);
    const double nominal_lr = num_param(p, "nominal_lr", 0.05);
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("config: 'split' must be inside (0,1)");

    Matrix raw;
    std::vector<std::string> names;
    if (!cfg.input.empty()) {
        const Csv csv = read_csv(cfg.input);
        raw = csv.values;
        names = column_names(csv.columns, raw.cols());
    } else {
        raw = synth_returns(n_synth, cfg.seed);
        names = column_names({}, raw.cols());
    }
    if (raw.rows() < 10) throw DataError("stress: need at least 10 return rows");

    const auto n_train = static_cast<std::size_t>(split * static_cast<double>(raw.rows()));
    if (n_train < 2 || n_train >= raw.rows()) throw DataError("stress: split leaves an empty side");
    const Matrix train_raw = split_head(raw, n_train);
    const Matrix test_raw = split_tail(raw, n_train);

    for (std::size_t j = 0; j < train_raw.cols(); ++j)
        if (sample_variance(column_of(train_raw, j)) < 1e-12)
            throw DataError("stress: asset '" + names[j] + "' has zero variance");
    const dro::Standardization stats = dro::fit_standardization(train_raw);
    const Matrix train = dro::apply_standardization(stats, train_raw);

    const dro::PortfolioShortfall loss(train.cols(), q, beta);
    Vec theta(train.cols(), 0.0);
    for (std::size_t it = 0; it < nominal_iters; ++it) {
        const Vec g = dro::grad_theta(loss, theta, train);
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= nominal_lr * g[j];
    }
    double nominal_loss = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i)
        nominal_loss += loss.value(theta, train.row(i));
    nominal_loss /= static_cast<double>(train.rows());

    Report report;
    stamp(report, cfg);
    report.set("loss", "portfolio");
    report.set("input", cfg.input.empty() ? "builtin:returns" : cfg.input.string());
    report.set("tau", tau);
    report.set("eta", eta);
    report.set("iters", static_cast<std::uint64_t>(iters));
    report.set("inner_iters", static_cast<std::uint64_t>(inner_iters));
    report.set("beta", beta);
    report.set("q", q);
    report.set("split", split);
    report.set("n_train", static_cast<std::uint64_t>(train.rows()));
    report.set("n_test", static_cast<std::uint64_t>(test_raw.rows()));
    report.set("nominal_iters", static_cast<std::uint64_t>(nominal_iters));
    report.set("nominal_lr", nominal_lr);
    report.set("nominal_loss", nominal_loss);
    report.set("theta_nominal", join_sig6(theta));

    std::filesystem::create_directories(cfg.out_dir);
    write_csv(cfg.out_dir / "stress_base.csv", train, names);
    report.set("file_base", "stress_base.csv");

    // wealth paths: nominal first column, one more per lambda
    std::vector<Vec> wealth_columns;
    std::vector<std::string> wealth_names = {"period", "nominal"};
    const dro::WealthPath nominal_path = dro::backtest(dro::softmax_weights(theta), test_raw);
    wealth_columns.push_back(nominal_path.wealth);
    report.set("wealth_final_nominal",
               nominal_path.wealth.empty() ? 1.0 : nominal_path.wealth.back());
    if (nominal_path.bankrupt) report.set("bankrupt_nominal", std::uint64_t{1});

    for (double lambda : lambdas) {
        if (!(lambda > 0.0)) throw ConfigError("config: 'lambdas' must be positive");
        dro::GdaConfig gda;
        gda.lambda = lambda;
        gda.tau = tau;
        gda.eta = eta;
        gda.iters = iters;
        gda.inner_iters = inner_iters;
        const dro::TransportResult res = dro::gda_run(loss, theta, train, gda);
        if (res.diverged) throw NumericalError("stress: adversarial ascent diverged");

        const double worst = res.objective_trace.back();
        const double nominal_at =
            dro::penalized_objective(loss, res.theta, train, train, lambda);
        const std::string tag = format_sig6(lambda);
        report.set("summary_lambda_" + tag,
                   "lambda=" + tag + " worst_case=" + format_sig6(worst) +
                       " nominal=" + format_sig6(nominal_at) +
                       " stationarity_theta=" + format_sig6(res.stat_theta_trace.back()) +
                       " stationarity_map=" + format_sig6(res.stat_map_trace.back()));
        report.set("theta_lambda_" + tag, join_sig6(res.theta));
        write_csv(cfg.out_dir / ("stress_particles_" + tag + ".csv"), res.transported, names);
        report.set("file_particles_" + tag, "stress_particles_" + tag + ".csv");

        const dro::WealthPath path = dro::backtest(dro::softmax_weights(res.theta), test_raw);
        wealth_columns.push_back(path.wealth);
        wealth_names.push_back("lambda_" + tag);
        report.set("wealth_final_lambda_" + tag, path.wealth.empty() ? 1.0 : path.wealth.back());
        if (path.bankrupt) report.set("bankrupt_lambda_" + tag, std::uint64_t{1});
    }

    std::size_t periods = 0;
    for (const Vec& w : wealth_columns) periods = std::max(periods, w.size());
    Matrix wealth(periods, wealth_columns.size() + 1);
    for (std::size_t i = 0; i < periods; ++i) {
        wealth(i, 0) = static_cast<double>(i);
        for (std::size_t c = 0; c < wealth_columns.size(); ++c) {
            const Vec& w = wealth_columns[c];
            // a truncated path means the portfolio was wiped out in period i
            wealth(i, c + 1) = i < w.size() ? w[i] : 0.0;
        }
    }
    write_csv(cfg.out_dir / "stress_wealth.csv", wealth, wealth_names);
    report.set("file_wealth", "stress_wealth.csv");

    write_report_file(cfg, report);
    report.wall_seconds = clock.seconds();
    return report;
}

// -------- posterior ----------------------------------------------------------

Report cmd_posterior(const RunConfig& cfg) {
    const Stopwatch clock;
    const json& p = cfg.params;

    std::unique_ptr<post::Generator> gen;
    const post::AffineGenerator* affine = nullptr;  // set when an oracle exists
    std::string gen_desc;
    const json* gspec = maybe(p, "generator");
    try {
        if (!gspec || (gspec->is_string() && gspec->get<std::string>() == "identity")) {
            const std::size_t d = size_param(p, "dim", 1);
            if (d == 0) throw ConfigError("config: 'dim' must be positive");
            auto made = std::make_unique<post::AffineGenerator>(post::AffineGenerator::identity(d));
            affine = made.get();
            gen = std::move(made);
            gen_desc = "identity";
        } else if (gspec->is_object() && gspec->contains("affine")) {
            const json& a = gspec->at("affine");
            const json* am = maybe(a, "a");
            const json* bv = maybe(a, "b");
            if (!am || !bv) throw ConfigError("config: affine generator needs 'a' and 'b'");
            auto made = std::make_unique<post::AffineGenerator>(matrix_param(*am, "generator.affine.a"),
                                                                vec_param(*bv, "generator.affine.b"));
            affine = made.get();
            gen = std::move(made);
            gen_desc = "affine";
        } else if (gspec->is_object() && gspec->contains("checkpoint")) {
            const std::string path = gspec->at("checkpoint").get<std::string>();
            const std::size_t ode_steps = size_param(p, "ode_steps", 64);
            gen = std::make_unique<post::FlowAdapter>(flow::load_flow(path), ode_steps);
            gen_desc = "checkpoint:" + path;
        } else {
            throw ConfigError("config: 'generator' must be \"identity\", {\"affine\":...}, or "
                              "{\"checkpoint\":...}");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: invalid generator: ") + e.what());
    }
    const std::size_t d = gen->dim();

    post::LinearGaussianLikelihood lik{Matrix::identity(d), 1.0, Vec(d, 1.0)};
    if (const json* lspec = maybe(p, "likelihood")) {
        if (const json* hm = maybe(*lspec, "h")) lik.h = matrix_param(*hm, "likelihood.h");
        lik.sigma2 = num_param(*lspec, "sigma2", 1.0);
        if (const json* yv = maybe(*lspec, "y")) lik.y = vec_param(*yv, "likelihood.y");
    }
    if (!(lik.sigma2 > 0.0)) throw ConfigError("config: 'likelihood.sigma2' must be positive");
    if (lik.h.cols() != d || lik.h.rows() != lik.y.size())
        throw ConfigError("config: likelihood shapes disagree with the generator dimension");

    post::LangevinConfig lc;
    lc.seed = cfg.seed;
    const json langevin = maybe(p, "langevin") ? p.at("langevin") : json::object();
    lc.step = num_param(langevin, "step", 1e-3);
    lc.steps = size_param(langevin, "steps", 200000);
    lc.thin = size_param(langevin, "thin", 10);
    if (maybe(langevin, "burn_in")) lc.burn_in = size_param(langevin, "burn_in", 0);
    if (!(lc.step > 0.0)) throw ConfigError("config: 'langevin.step' must be positive");
    if (lc.steps == 0) throw ConfigError("config: 'langevin.steps' must be positive");
    if (lc.thin == 0) throw ConfigError("config: 'langevin.thin' must be positive");
    if (lc.burn_in && *lc.burn_in >= lc.steps)
        throw ConfigError("config: 'langevin.burn_in' must be below 'langevin.steps'");

    const Matrix samples = post::latent_langevin(*gen, lik, lc);

    Report report;
    stamp(report, cfg);
    report.set("generator", gen_desc);
    report.set("dim", static_cast<std::uint64_t>(d));
    report.set("sigma2", lik.sigma2);
    report.set("step", lc.step);
    report.set("steps", static_cast<std::uint64_t>(lc.steps));
    report.set("burn_in", static_cast<std::uint64_t>(lc.burn_in.value_or(lc.steps / 5)));
    report.set("thin", static_cast<std::uint64_t>(lc.thin));
    report.set("n_samples", static_cast<std::uint64_t>(samples.rows()));

    if (affine) {
        const FullGaussian oracle = post::oracle_posterior(*affine, lik);
        const auto [mu, cov] = mean_cov(samples);
        double mean_err = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            mean_err += (mu[j] - oracle.mean()[j]) * (mu[j] - oracle.mean()[j]);
        mean_err = std::sqrt(mean_err);
        const double var_err = frobenius_norm(cov - oracle.covariance());

        // sampling-noise floor of the prior representation itself
        Rng prior_rng(cfg.seed + 1);
        const Matrix latent =
            sample_gaussian(prior_rng, FullGaussian::standard(d), std::min<std::size_t>(
                                                                      4000, samples.rows()));
        Matrix pushed(latent.rows(), d);
        for (std::size_t i = 0; i < latent.rows(); ++i)
            pushed.set_row(i, affine->forward(latent.row(i)));
        const double prior_disc = transport::w2_gaussian(fit_gaussian(pushed), affine->prior());

        report.set("oracle_mean", join_sig6(oracle.mean()));
        report.set("post_mean_err", mean_err);
        report.set("post_var_err", var_err);
        report.set("prior_disc", prior_disc);
    } else {
        report.set("post_mean_err", "absent");
        report.set("post_var_err", "absent");
        report.set("prior_disc", "absent");
    }

    std::filesystem::create_directories(cfg.out_dir);
    write_csv(cfg.out_dir / "posterior_samples.csv", samples);
    report.set("file_samples", "posterior_samples.csv");
    write_report_file(cfg, report);
    report.wall_seconds = clock.seconds();
    return report;
}

// -------- flow demo ----------------------------------------------------------

namespace {

Matrix sample_mixture(Rng& rng, const diffusion::Mixture& mix, std::size_t n) {
    Matrix out(n, mix.front().second.dim());
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t pick = mix.size() - 1;
        for (std::size_t c = 0; c < mix.size(); ++c) {
            if (u < mix[c].first) {
                pick = c;
                break;
            }
            u -= mix[c].first;
        }
        const FullGaussian& g = mix[pick].second;
        const Vec z = rng.normals(g.dim());
        Vec x = matvec(g.chol(), z);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += g.mean()[j];
        out.set_row(i, x);
    }
    return out;
}

}  // namespace

Report cmd_flow_demo(const RunConfig& cfg) {
    const Stopwatch clock;
    const json& p = cfg.params;
    const std::size_t n = size_param(p, "n", 1024);
    const std::size_t ode_steps = size_param(p, "ode_steps", 100);
    const double beta = num_param(p, "beta", 0.02);
    const std::size_t sde_steps = size_param(p, "sde_steps", 350);
    if (n < 4) throw ConfigError("config: 'n' must be at least 4");

    Matrix half(2, 2);
    half(0, 0) = 0.5;
    half(1, 1) = 0.5;
    const diffusion::Mixture mix = {{0.5, FullGaussian(Vec{-2.0, 0.0}, half)},
                                    {0.5, FullGaussian(Vec{2.0, 0.0}, half)}};
    const diffusion::ScoreFn score = diffusion::mixture_score(mix);
    const diffusion::VpSchedule schedule = diffusion::VpSchedule::constant(beta, sde_steps);

    Rng target_rng(cfg.seed + 1);
    const Matrix target_a = sample_mixture(target_rng, mix, n);
    const Matrix target_b = sample_mixture(target_rng, mix, n);
    Rng sde_rng(cfg.seed + 2);
    const Matrix sde = diffusion::reverse_sde_sample(score, schedule, n, 2, sde_rng);
    Rng ode_rng(cfg.seed + 3);
    const Matrix ode = diffusion::pf_ode_sample(score, n, 2, ode_steps, ode_rng);

    Report report;
    stamp(report, cfg);
    report.set("n", static_cast<std::uint64_t>(n));
    report.set("ode_steps", static_cast<std::uint64_t>(ode_steps));
    report.set("sde_steps", static_cast<std::uint64_t>(sde_steps));
    report.set("beta", beta);
    report.set("w2_ode_sde", w2_capped(ode, sde));
    report.set("w2_ode_target", w2_capped(ode, target_a));
    report.set("w2_sde_target", w2_capped(sde, target_a));
    report.set("w2_target_target", w2_capped(target_a, target_b));

    std::filesystem::create_directories(cfg.out_dir);
    write_csv(cfg.out_dir / "flow_demo_ode.csv", ode);
    write_csv(cfg.out_dir / "flow_demo_sde.csv", sde);
    write_csv(cfg.out_dir / "flow_demo_target.csv", target_a);
    report.set("file_ode", "flow_demo_ode.csv");
    report.set("file_sde", "flow_demo_sde.csv");
    report.set("file_target", "flow_demo_target.csv");
    write_report_file(cfg, report);
    report.wall_seconds = clock.seconds();
    return report;
}

// -------- driver -------------------------------------------------------------

namespace {

json parse_override_value(const std::string& raw) {
    json parsed = json::parse(raw, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    return json(raw);  // unquoted strings pass through verbatim
}

void apply_override(json& params, const std::string& entry) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("config: --set expects key=value, got '" + entry + "'");
    const std::string path = entry.substr(0, eq);
    json* node = &params;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("config: --set has an empty key in '" + entry + "'");
        if (dot == std::string::npos) {
            (*node)[key] = parse_override_value(entry.substr(eq + 1));
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

int dispatch(const RunConfig& cfg) {
    Report report;
    if (cfg.subcommand == "scenario") report = cmd_scenario(cfg);
    else if (cfg.subcommand == "stress") report = cmd_stress(cfg);
    else if (cfg.subcommand == "posterior") report = cmd_posterior(cfg);
    else if (cfg.subcommand == "flow_demo") report = cmd_flow_demo(cfg);
    else throw ConfigError("unknown subcommand: " + cfg.subcommand);
    std::fputs(report.text().c_str(), stdout);
    std::printf("wall_seconds=%.3f\n", report.wall_seconds);
    return 0;
}

}  // namespace

int run_main(int argc, char** argv) {
    CLI::App app{"shiftgen: construct, stress, and evaluate shifted distributions"};
    app.set_version_flag("--version", std::string("shiftgen ") + kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string input_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;

    const char* descriptions[][2] = {
        {"scenario", "fit a flow to count data and generate scenarios"},
        {"stress", "worst-case return distributions and robust portfolios"},
        {"posterior", "latent Langevin sampling under a generative prior"},
        {"flow-demo", "score-based SDE and ODE samplers on a builtin target"},
    };
    for (const auto& [name, help] : descriptions) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "rng seed");
        sub->add_option("--input", input_path, "input CSV path");
        sub->add_option("--out-dir", out_dir, "output directory");
        sub->add_option("--set", overrides,
                        "override a config key, e.g. --set langevin.steps=5000");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        RunConfig cfg;
        cfg.subcommand = sub->get_name() == "flow-demo" ? "flow_demo" : sub->get_name();

        json file_cfg = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("config: cannot open " + config_path);
            file_cfg = json::parse(in, nullptr, false);
            if (file_cfg.is_discarded())
                throw ConfigError("config: " + config_path + " is not valid JSON");
            if (!file_cfg.is_object())
                throw ConfigError("config: " + config_path + " must hold a JSON object");
        }

        cfg.seed = sub->count("--seed") ? seed
                                        : static_cast<std::uint64_t>(
                                              num_param(file_cfg, "seed", 0.0));
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        else if (maybe(file_cfg, "out_dir")) cfg.out_dir = str_param(file_cfg, "out_dir", "");
        else if (const char* env = std::getenv("SHIFTGEN_OUT_DIR")) cfg.out_dir = env;
        if (!input_path.empty()) cfg.input = input_path;
        else cfg.input = str_param(file_cfg, "input", "");
        if (maybe(file_cfg, cfg.subcommand)) {
            if (!file_cfg.at(cfg.subcommand).is_object())
                throw ConfigError("config: '" + cfg.subcommand + "' must be an object");
            cfg.params = file_cfg.at(cfg.subcommand);
        }
        for (const std::string& entry : overrides) apply_override(cfg.params, entry);

        return dispatch(cfg);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}

}  // namespace shiftgen::cli
