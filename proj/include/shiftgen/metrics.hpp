#pragma once

#include <filesystem>
#include <functional>

#include "shiftgen/matrix.hpp"
#include "shiftgen/rng.hpp"
#include "shiftgen/types.hpp"

namespace shiftgen::metrics {

// Radial-basis kernel k(a,b) = exp(-|a-b|^2 / (2 sigma^2)).
struct MmdConfig {
    double sigma = 1.0;    // bandwidth, must be > 0
    bool unbiased = true;  // unbiased U-statistic vs biased V-statistic
};

// Deterministic strided row subsample, at most max_rows rows.
Matrix subsample_rows(const Matrix& x, std::size_t max_rows);

// Median pairwise Euclidean distance over the pooled sample, subsampled to
// at most 2000 rows. Throws NumericalError when every point coincides.
double median_heuristic(const Matrix& x, const Matrix& y);

// Squared-MMD estimate. The unbiased estimator may be negative and needs
// at least two rows per sample.
double mmd(const Matrix& x, const Matrix& y, const MmdConfig& cfg);

// Two-sample Kolmogorov-Smirnov statistic per coordinate.
Vec ks_per_coordinate(const Matrix& x, const Matrix& y);

struct CorrComparison {
    Matrix corr_x;
    Matrix corr_y;
    double frobenius = 0.0;  // |corr_x - corr_y|_F
};

// Pearson correlation matrices of both samples plus the Frobenius norm of
// their difference. Throws DataError naming any zero-variance coordinate.
CorrComparison corr_diff(const Matrix& x, const Matrix& y);

// Per-coordinate empirical CDF table with columns coordinate,value,cdf.
void write_ecdf_csv(const std::filesystem::path& path, const Matrix& x);

using TwoSampleStat = std::function<double(const Matrix&, const Matrix&)>;

struct PermutationResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Permutation two-sample test: reshuffles pooled rows n_permutations times
// and reports the add-one-corrected right-tail p-value of the statistic.
PermutationResult permutation_test(const Matrix& x, const Matrix& y,
                                   const TwoSampleStat& stat,
                                   int n_permutations, Rng& rng);

}  // namespace shiftgen::metrics
