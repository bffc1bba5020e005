#include "shiftgen/wgf.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include "shiftgen/gaussian.hpp"
#include "shiftgen/linalg.hpp"
#include "shiftgen/types.hpp"

namespace shiftgen::wgf {

namespace {

void check_state(const DiagGaussianState& s) {
    if (s.mean.empty() || s.mean.size() != s.stds.size())
        throw std::invalid_argument("DiagGaussianState: mean/stds size mismatch");
    for (double m : s.mean)
        if (!std::isfinite(m)) throw std::invalid_argument("DiagGaussianState: non-finite mean");
    for (double v : s.stds)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("DiagGaussianState: stds must be positive");
}

FullGaussian to_full(const DiagGaussianState& s) {
    Vec vars(s.stds.size());
    for (std::size_t j = 0; j < s.stds.size(); ++j) vars[j] = s.stds[j] * s.stds[j];
    return FullGaussian::diagonal(s.mean, vars);
}

}  // namespace

KlParts kl_to_standard(const DiagGaussianState& s) {
    check_state(s);
    KlParts parts;
    for (std::size_t j = 0; j < s.mean.size(); ++j) {
        const double m = s.mean[j];
        const double sd = s.stds[j];
        parts.kl += 0.5 * (sd * sd + m * m - 1.0 - 2.0 * std::log(sd));
        parts.entropy -= 0.5 * (std::log(2.0 * std::numbers::pi) + 1.0 + 2.0 * std::log(sd));
        parts.potential += 0.5 * (sd * sd + m * m);
    }
    return parts;
}

DiagGaussianState jko_step(const DiagGaussianState& s, double gamma) {
    check_state(s);
    if (!(gamma > 0.0)) throw std::invalid_argument("jko_step: gamma must be positive");
    DiagGaussianState next;
    next.mean.resize(s.mean.size());
    next.stds.resize(s.stds.size());
    for (std::size_t j = 0; j < s.mean.size(); ++j) {
        next.mean[j] = s.mean[j] / (1.0 + gamma);
        const double sd = s.stds[j];
        next.stds[j] =
            (sd + std::sqrt(sd * sd + 4.0 * gamma * (1.0 + gamma))) / (2.0 * (1.0 + gamma));
    }
    return next;
}

JkoRun run_jko(const DiagGaussianState& s0, double gamma, double eps, std::size_t max_iters) {
    if (!(eps > 0.0)) throw std::invalid_argument("run_jko: eps must be positive");
    JkoRun run;
    run.states.push_back(s0);
    run.kls.push_back(kl_to_standard(s0).kl);
    const double goal = eps * eps;
    while (run.kls.back() > goal && run.iterations < max_iters) {
        run.states.push_back(jko_step(run.states.back(), gamma));
        run.kls.push_back(kl_to_standard(run.states.back()).kl);
        ++run.iterations;
    }
    run.converged = run.kls.back() <= goal;
    return run;
}

std::pair<double, double> kl_transfer_check(const DiagGaussianState& p,
                                            const DiagGaussianState& target,
                                            const transport::AffineMap& map) {
    const FullGaussian fp = to_full(p);
    const FullGaussian ft = to_full(target);
    const double direct = kl_gaussian(fp, ft);

    const Matrix ainv = inverse(map.linear);
    const auto pull = [&](const FullGaussian& g) {
        const Vec mean = matvec(ainv, vec_sub(g.mean(), map.offset));
        Matrix cov = ainv * g.covariance() * transpose(ainv);
        for (std::size_t r = 0; r < cov.rows(); ++r)
            for (std::size_t c = r + 1; c < cov.cols(); ++c) {
                const double v = 0.5 * (cov(r, c) + cov(c, r));
                cov(r, c) = v;
                cov(c, r) = v;
            }
        return FullGaussian(mean, cov);
    };
    const double pulled = kl_gaussian(pull(fp), pull(ft));
    return {direct, pulled};
}

transport::AffineMap standardizing_map(const DiagGaussianState& s) {
    check_state(s);
    const std::size_t d = s.mean.size();
    transport::AffineMap map;
    map.linear = Matrix(d, d);
    map.offset.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        map.linear(j, j) = 1.0 / s.stds[j];
        map.offset[j] = -s.mean[j] / s.stds[j];
    }
    return map;
}

void write_jko_trace(const std::filesystem::path& path, const JkoRun& run) {
    if (run.states.empty()) throw std::invalid_argument("write_jko_trace: empty run");
    const std::size_t d = run.states.front().mean.size();
    std::vector<std::string> columns = {"n", "kl", "entropy", "potential"};
    for (std::size_t j = 0; j < d; ++j) columns.push_back("m" + std::to_string(j));
    for (std::size_t j = 0; j < d; ++j) columns.push_back("s" + std::to_string(j));
    Matrix table(run.states.size(), columns.size());
    for (std::size_t i = 0; i < run.states.size(); ++i) {
        const KlParts parts = kl_to_standard(run.states[i]);
        table(i, 0) = static_cast<double>(i);
        table(i, 1) = parts.kl;
        table(i, 2) = parts.entropy;
        table(i, 3) = parts.potential;
        for (std::size_t j = 0; j < d; ++j) {
            table(i, 4 + j) = run.states[i].mean[j];
            table(i, 4 + d + j) = run.states[i].stds[j];
        }
    }
    write_csv(path, table, columns);
}

}  // namespace shiftgen::wgf
