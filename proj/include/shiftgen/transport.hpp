#pragma once

#include <cstddef>
#include <vector>

#include "shiftgen/gaussian.hpp"
#include "shiftgen/matrix.hpp"
#include "shiftgen/types.hpp"

namespace shiftgen::transport {

// Entropic coupling between two uniform-weight empirical measures.
struct Coupling {
    Matrix plan;        // n x m, nonnegative
    Vec row_marginals;  // source weights, 1/n each
    Vec col_marginals;  // target weights, 1/m each
};

struct Assignment {
    std::vector<std::size_t> permutation;  // source i matched to target permutation[i]
    double cost = 0.0;                     // sqrt(mean matched squared distance)
};

struct SinkhornResult {
    double cost = 0.0;  // sqrt(sum_ij plan_ij |x_i - y_j|^2), entropy term excluded
    Coupling coupling;
    bool converged = false;
    std::size_t iterations = 0;
    Vec cost_trace;       // cost after each full scaling pass
    Vec dual_trace;       // dual objective after each pass; nondecreasing
    Vec violation_trace;  // max marginal violation after each full pass
};

// Exact W2 between equal-size 1-d empirical measures (sorted pairing).
double w2_1d(Vec x, Vec y);

// Exact minimum-cost perfect matching under squared Euclidean cost,
// O(n^3) augmenting paths, documented for n <= 512. Ties take the lowest
// target index.
Assignment w2_assignment(const Matrix& x, const Matrix& y);

// Log-domain Sinkhorn with dual potentials; stops once both marginal
// violations fall below tol, otherwise flags non-convergence.
SinkhornResult sinkhorn(const Matrix& x, const Matrix& y, double reg,
                        std::size_t max_iters = 2000, double tol = 1e-9);

// Symmetric eigendecomposition a = V diag(values) V^T by cyclic Jacobi
// sweeps; intended for the small dimensions used here (d <= 20).
struct SymEig {
    Matrix vectors;  // eigenvectors in columns
    Vec values;
};
SymEig sym_eig(const Matrix& a);

// Symmetric PSD square root; rejects matrices with a clearly negative
// eigenvalue and clamps roundoff-scale negatives to zero.
Matrix sym_sqrt(const Matrix& a);

// Bures-Wasserstein distance between Gaussians.
double w2_gaussian(const FullGaussian& a, const FullGaussian& b);

// Affine map x -> linear x + offset.
struct AffineMap {
    Matrix linear;
    Vec offset;
    Vec apply(VecView x) const;
    Matrix apply_rows(const Matrix& samples) const;
};

// Brenier map between Gaussians: x -> A (x - m_a) + m_b with
// A = Sigma_a^{-1/2} (Sigma_a^{1/2} Sigma_b Sigma_a^{1/2})^{1/2} Sigma_a^{-1/2}.
AffineMap ot_map_gaussian(const FullGaussian& a, const FullGaussian& b);

// Action estimate of a velocity field over [0,1]: Monte Carlo over
// trajectories started at reference_samples, trapezoid rule in time.
double dynamic_transport_cost(const VectorField& field, const Matrix& reference_samples,
                              std::size_t steps);

}  // namespace shiftgen::transport
