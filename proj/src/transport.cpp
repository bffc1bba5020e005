#include "shiftgen/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "shiftgen/ode.hpp"

namespace shiftgen::transport {

namespace {

Matrix sq_dist_matrix(const Matrix& x, const Matrix& y) {
    Matrix c(x.rows(), y.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j) c(i, j) = sq_dist(x.row(i), y.row(j));
    return c;
}

double log_sum_exp(VecView v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

double w2_1d(Vec x, Vec y) {
    if (x.size() != y.size()) throw std::invalid_argument("w2_1d: length mismatch");
    if (x.empty()) throw std::invalid_argument("w2_1d: empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s / static_cast<double>(x.size()));
}

Assignment w2_assignment(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw std::invalid_argument("w2_assignment: row count mismatch");
    if (x.cols() != y.cols()) throw std::invalid_argument("w2_assignment: dimension mismatch");
    const std::size_t n = x.rows();
    if (n == 0) throw std::invalid_argument("w2_assignment: empty clouds");
    if (n > 512) throw std::invalid_argument("w2_assignment: n > 512 unsupported");

    const Matrix c = sq_dist_matrix(x, y);
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // shortest augmenting paths with dual potentials; index 0 is a virtual
    // column, rows/columns are 1-based inside the search
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {  // strict: lowest index wins ties
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.permutation.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) out.permutation[match[j] - 1] = j - 1;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += c(i, out.permutation[i]);
    out.cost = std::sqrt(total / static_cast<double>(n));
    return out;
}

SinkhornResult sinkhorn(const Matrix& x, const Matrix& y, double reg,
                        std::size_t max_iters, double tol) {
    if (reg <= 0.0) throw std::invalid_argument("sinkhorn: reg must be positive");
    if (max_iters == 0) throw std::invalid_argument("sinkhorn: max_iters must be >= 1");
    if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("sinkhorn: empty clouds");
    if (x.cols() != y.cols()) throw std::invalid_argument("sinkhorn: dimension mismatch");

    const std::size_t n = x.rows(), m = y.rows();
    const double log_mu = -std::log(static_cast<double>(n));
    const double log_nu = -std::log(static_cast<double>(m));
    const Matrix c = sq_dist_matrix(x, y);

    Vec f(n, 0.0), g(m, 0.0), scratch(std::max(n, m));
    SinkhornResult res;
    res.coupling.row_marginals.assign(n, 1.0 / static_cast<double>(n));
    res.coupling.col_marginals.assign(m, 1.0 / static_cast<double>(m));

    for (std::size_t it = 0; it < max_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) scratch[j] = (g[j] - c(i, j)) / reg;
            f[i] = reg * (log_mu - log_sum_exp({scratch.data(), m}));
        }
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) scratch[i] = (f[i] - c(i, j)) / reg;
            g[j] = reg * (log_nu - log_sum_exp({scratch.data(), n}));
        }
        res.iterations = it + 1;

        double cost2 = 0.0, row_viol = 0.0, col_viol = 0.0, mass = 0.0;
        Vec col_sums(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double p = std::exp((f[i] + g[j] - c(i, j)) / reg);
                row_sum += p;
                col_sums[j] += p;
                cost2 += p * c(i, j);
            }
            mass += row_sum;
            row_viol = std::max(row_viol, std::fabs(row_sum - 1.0 / static_cast<double>(n)));
        }
        for (std::size_t j = 0; j < m; ++j)
            col_viol = std::max(col_viol, std::fabs(col_sums[j] - 1.0 / static_cast<double>(m)));

        double dual = -reg * mass;
        for (std::size_t i = 0; i < n; ++i) dual += f[i] / static_cast<double>(n);
        for (std::size_t j = 0; j < m; ++j) dual += g[j] / static_cast<double>(m);
        res.dual_trace.push_back(dual);
        res.cost_trace.push_back(std::sqrt(std::max(0.0, cost2)));
        res.violation_trace.push_back(std::max(row_viol, col_viol));
        if (res.violation_trace.back() < tol) {
            res.converged = true;
            break;
        }
    }

    res.cost = res.cost_trace.back();
    res.coupling.plan = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            res.coupling.plan(i, j) = std::exp((f[i] + g[j] - c(i, j)) / reg);
    return res;
}

SymEig sym_eig(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("sym_eig: matrix not square");
    const std::size_t n = a.rows();
    Matrix d = a, v = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += d(p, q) * d(p, q);
        if (std::sqrt(off) < 1e-14 * std::max(1.0, frobenius_norm(a))) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (d(p, q) == 0.0) continue;
                const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t k = 0; k < n; ++k) {
                    const double dkp = d(k, p), dkq = d(k, q);
                    d(k, p) = cs * dkp - sn * dkq;
                    d(k, q) = sn * dkp + cs * dkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double dpk = d(p, k), dqk = d(q, k);
                    d(p, k) = cs * dpk - sn * dqk;
                    d(q, k) = sn * dpk + cs * dqk;
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
    }
    SymEig out;
    out.vectors = v;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = d(i, i);
    return out;
}

Matrix sym_sqrt(const Matrix& a) {
    SymEig e = sym_eig(a);
    double scale = 0.0;
    for (double w : e.values) scale = std::max(scale, std::fabs(w));
    Matrix root(a.rows(), a.rows());
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        double w = e.values[k];
        if (w < -1e-8 * std::max(1.0, scale))
            throw NumericalError("sym_sqrt: matrix has negative eigenvalue " +
                                 format_shortest(w));
        w = std::sqrt(std::max(0.0, w));
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.rows(); ++j)
                root(i, j) += w * e.vectors(i, k) * e.vectors(j, k);
    }
    return root;
}

double w2_gaussian(const FullGaussian& a, const FullGaussian& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("w2_gaussian: dimension mismatch");
    const Matrix rb = sym_sqrt(b.covariance());
    const Matrix cross = sym_sqrt(rb * a.covariance() * rb);
    double tr = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        tr += a.covariance()(i, i) + b.covariance()(i, i) - 2.0 * cross(i, i);
    const double dm = sq_dist(a.mean(), b.mean());
    return std::sqrt(std::max(0.0, dm + tr));
}

Vec AffineMap::apply(VecView x) const { return vec_add(matvec(linear, x), offset); }

Matrix AffineMap::apply_rows(const Matrix& samples) const {
    Matrix out(samples.rows(), offset.size());
    for (std::size_t i = 0; i < samples.rows(); ++i) out.set_row(i, apply(samples.row(i)));
    return out;
}

AffineMap ot_map_gaussian(const FullGaussian& a, const FullGaussian& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("ot_map_gaussian: dimension mismatch");
    const SymEig ea = sym_eig(a.covariance());
    const std::size_t d = a.dim();
    Matrix ra(d, d), rai(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        const double w = ea.values[k];
        if (w <= 0.0) throw NumericalError("ot_map_gaussian: covariance not positive definite");
        const double r = std::sqrt(w);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                ra(i, j) += r * ea.vectors(i, k) * ea.vectors(j, k);
                rai(i, j) += (1.0 / r) * ea.vectors(i, k) * ea.vectors(j, k);
            }
    }
    const Matrix mid = sym_sqrt(ra * b.covariance() * ra);
    AffineMap map;
    map.linear = rai * mid * rai;
    map.offset = vec_sub(b.mean(), matvec(map.linear, a.mean()));
    return map;
}

double dynamic_transport_cost(const VectorField& field, const Matrix& reference_samples,
                              std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("dynamic_transport_cost: steps must be >= 1");
    if (reference_samples.rows() == 0)
        throw std::invalid_argument("dynamic_transport_cost: empty reference sample");
    const double dt = 1.0 / static_cast<double>(steps);
    const std::size_t n = reference_samples.rows();

    Matrix state = reference_samples;
    double action = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        double mean_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec vel = field(state.row(i), t);
            mean_sq += dot(vel, vel);
        }
        mean_sq /= static_cast<double>(n);
        const double weight = (k == 0 || k == steps) ? 0.5 : 1.0;  // trapezoid
        action += weight * mean_sq * dt;
        if (k < steps)
            for (std::size_t i = 0; i < n; ++i)
                state.set_row(i, ode_step(field, state.row(i), t, dt, OdeMethod::rk4));
    }
    return action;
}

}  // namespace shiftgen::transport
