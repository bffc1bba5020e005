#include "shiftgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftgen::metrics {

namespace {

void require_same_width(const Matrix& x, const Matrix& y, const char* who) {
    if (x.cols() != y.cols())
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

double rbf(VecView a, VecView b, double inv_two_sigma2) {
    return std::exp(-sq_dist(a, b) * inv_two_sigma2);
}

// Sum of k(rows_i, rows_j) over all ordered pairs including i == j.
double kernel_sum_full(const Matrix& m, double inv_two_sigma2) {
    double diag = static_cast<double>(m.rows());  // k(x,x) = 1
    double off = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.rows(); ++j)
            off += rbf(m.row(i), m.row(j), inv_two_sigma2);
    return diag + 2.0 * off;
}

double kernel_sum_cross(const Matrix& x, const Matrix& y, double inv_two_sigma2) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j)
            s += rbf(x.row(i), y.row(j), inv_two_sigma2);
    return s;
}

Vec sorted_column(const Matrix& m, std::size_t j) {
    Vec c(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) c[i] = m(i, j);
    std::sort(c.begin(), c.end());
    return c;
}

}  // namespace

Matrix subsample_rows(const Matrix& x, std::size_t max_rows) {
    if (max_rows == 0) throw std::invalid_argument("subsample_rows: max_rows == 0");
    if (x.rows() <= max_rows) return x;
    const std::size_t stride = (x.rows() + max_rows - 1) / max_rows;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < x.rows(); i += stride) keep.push_back(i);
    Matrix out(keep.size(), x.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) out.set_row(k, x.row(keep[k]));
    return out;
}

double median_heuristic(const Matrix& x, const Matrix& y) {
    require_same_width(x, y, "median_heuristic");
    const Matrix pooled = subsample_rows(vstack(x, y), 2000);
    const std::size_t n = pooled.rows();
    if (n < 2) throw std::invalid_argument("median_heuristic: need at least 2 pooled rows");
    Vec dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(std::sqrt(sq_dist(pooled.row(i), pooled.row(j))));
    const std::size_t mid = (dists.size() - 1) / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    const double med = dists[mid];
    if (med <= 0.0)
        throw NumericalError("median_heuristic: zero bandwidth (pooled points are identical)");
    return med;
}

double mmd(const Matrix& x, const Matrix& y, const MmdConfig& cfg) {
    require_same_width(x, y, "mmd");
    if (cfg.sigma <= 0.0) throw std::invalid_argument("mmd: sigma must be positive");
    const double m = static_cast<double>(x.rows());
    const double n = static_cast<double>(y.rows());
    if (x.rows() < 1 || y.rows() < 1) throw std::invalid_argument("mmd: empty sample");
    if (cfg.unbiased && (x.rows() < 2 || y.rows() < 2))
        throw std::invalid_argument("mmd: unbiased estimator needs at least 2 rows per sample");

    const double inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    const double sx = kernel_sum_full(x, inv);
    const double sy = kernel_sum_full(y, inv);
    const double sxy = kernel_sum_cross(x, y, inv);
    if (cfg.unbiased)
        return (sx - m) / (m * (m - 1.0)) + (sy - n) / (n * (n - 1.0)) - 2.0 * sxy / (m * n);
    return sx / (m * m) + sy / (n * n) - 2.0 * sxy / (m * n);
}

Vec ks_per_coordinate(const Matrix& x, const Matrix& y) {
    require_same_width(x, y, "ks_per_coordinate");
    if (x.rows() < 1 || y.rows() < 1)
        throw std::invalid_argument("ks_per_coordinate: empty sample");
    Vec out(x.cols(), 0.0);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const Vec xs = sorted_column(x, c);
        const Vec ys = sorted_column(y, c);
        const double m = static_cast<double>(xs.size());
        const double n = static_cast<double>(ys.size());
        std::size_t i = 0, j = 0;
        double d = 0.0;
        // walk the merged order; ties advance both sides before comparing
        while (i < xs.size() || j < ys.size()) {
            double v;
            if (i == xs.size()) v = ys[j];
            else if (j == ys.size()) v = xs[i];
            else v = std::min(xs[i], ys[j]);
            while (i < xs.size() && xs[i] <= v) ++i;
            while (j < ys.size() && ys[j] <= v) ++j;
            d = std::max(d, std::fabs(static_cast<double>(i) / m - static_cast<double>(j) / n));
        }
        out[c] = d;
    }
    return out;
}

namespace {

Matrix pearson_corr(const Matrix& x, const char* who) {
    if (x.rows() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 rows");
    const std::size_t n = x.rows(), d = x.cols();
    Vec mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    Vec sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x(i, j) - mean[j];
            sd[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        if (sd[j] <= 0.0)
            throw DataError(std::string(who) + ": coordinate " + std::to_string(j) +
                            " has zero variance");
        sd[j] = std::sqrt(sd[j]);
    }
    Matrix corr(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
            const double r = std::clamp(s / (sd[a] * sd[b]), -1.0, 1.0);
            corr(a, b) = r;
            corr(b, a) = r;
        }
    }
    return corr;
}

}  // namespace

CorrComparison corr_diff(const Matrix& x, const Matrix& y) {
    require_same_width(x, y, "corr_diff");
    CorrComparison out;
    out.corr_x = pearson_corr(x, "corr_diff");
    out.corr_y = pearson_corr(y, "corr_diff");
    out.frobenius = frobenius_norm(out.corr_x - out.corr_y);
    return out;
}

void write_ecdf_csv(const std::filesystem::path& path, const Matrix& x) {
    if (x.rows() < 1) throw std::invalid_argument("write_ecdf_csv: empty sample");
    Matrix table(x.rows() * x.cols(), 3);
    std::size_t r = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const Vec col = sorted_column(x, c);
        for (std::size_t i = 0; i < col.size(); ++i) {
            table(r, 0) = static_cast<double>(c);
            table(r, 1) = col[i];
            table(r, 2) = static_cast<double>(i + 1) / static_cast<double>(col.size());
            ++r;
        }
    }
    write_csv(path, table, {"coordinate", "value", "cdf"});
}

PermutationResult permutation_test(const Matrix& x, const Matrix& y,
                                   const TwoSampleStat& stat,
                                   int n_permutations, Rng& rng) {
    require_same_width(x, y, "permutation_test");
    if (n_permutations < 1)
        throw std::invalid_argument("permutation_test: need at least 1 permutation");
    PermutationResult res;
    res.statistic = stat(x, y);
    const Matrix pooled = vstack(x, y);
    std::vector<std::size_t> idx(pooled.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    int at_least = 0;
    for (int p = 0; p < n_permutations; ++p) {
        rng.shuffle(idx);
        Matrix px(x.rows(), x.cols()), py(y.rows(), y.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) px.set_row(i, pooled.row(idx[i]));
        for (std::size_t i = 0; i < y.rows(); ++i) py.set_row(i, pooled.row(idx[x.rows() + i]));
        if (stat(px, py) >= res.statistic) ++at_least;
    }
    res.p_value = (1.0 + at_least) / (1.0 + n_permutations);
    return res;
}

}  // namespace shiftgen::metrics
