#pragma once

#include "shiftgen/matrix.hpp"

namespace shiftgen {

/// Lower-triangular L with L L^T = a for symmetric positive definite a.
/// Throws NumericalError naming the failing pivot index otherwise.
Matrix cholesky(const Matrix& a);

/// Solves L y = b for lower-triangular L.
Vec solve_lower(const Matrix& l, VecView b);

/// Solves L^T y = b for lower-triangular L.
Vec solve_lower_t(const Matrix& l, VecView b);

/// log det(L L^T) from a Cholesky factor.
double chol_logdet(const Matrix& l);

/// Inverse by Gauss-Jordan with partial pivoting; small dense matrices only.
/// Throws NumericalError on (near-)singular input.
Matrix inverse(const Matrix& a);

}  // namespace shiftgen
