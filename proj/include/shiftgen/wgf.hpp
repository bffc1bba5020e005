#pragma once

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include "shiftgen/matrix.hpp"
#include "shiftgen/transport.hpp"

namespace shiftgen::wgf {

/// Axis-aligned Gaussian N(mean, diag(stds^2)); stds stay strictly positive.
struct DiagGaussianState {
    Vec mean;
    Vec stds;
};

/// KL(state || N(0, I)) split into its free-energy parts:
/// kl = entropy + potential + (d/2) ln(2 pi), where entropy is the integral
/// of rho ln rho and potential is E[||x||^2 / 2].
struct KlParts {
    double kl = 0.0;
    double entropy = 0.0;
    double potential = 0.0;
};

KlParts kl_to_standard(const DiagGaussianState& s);

/// One proximal step toward N(0, I): per coordinate the exact minimizer of
/// KL plus (1/2 gamma) ((m - m')^2 + (s - s')^2).  New mean m/(1+gamma); new
/// std the positive root of (1+gamma) s'^2 - s s' - gamma = 0.
DiagGaussianState jko_step(const DiagGaussianState& s, double gamma);

struct JkoRun {
    std::vector<DiagGaussianState> states;  // s0 first
    Vec kls;                                // aligned with states
    std::size_t iterations = 0;
    bool converged = false;
};

/// Iterates jko_step until KL <= eps^2 or max_iters steps were taken.
JkoRun run_jko(const DiagGaussianState& s0, double gamma, double eps, std::size_t max_iters);

/// KL(p || target) and the same divergence after pulling both measures back
/// through the inverse of the given affine map; the two agree for any
/// invertible map.  Throws NumericalError when the map is singular.
std::pair<double, double> kl_transfer_check(const DiagGaussianState& p,
                                            const DiagGaussianState& target,
                                            const transport::AffineMap& map);

/// Affine map sending the given state to N(0, I): x -> (x - m) / s.
transport::AffineMap standardizing_map(const DiagGaussianState& s);

/// Trace export with columns n, kl, entropy, potential, then per-coordinate
/// means and stds.
void write_jko_trace(const std::filesystem::path& path, const JkoRun& run);

}  // namespace shiftgen::wgf
