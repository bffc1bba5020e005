#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace shiftgen {

using Vec = std::vector<double>;
using VecView = std::span<const double>;

/// Time-dependent vector field x, t -> R^d, evaluated pointwise.
/// Used for velocity fields (flow models) and score fields (diffusion);
/// the time clock is whatever the producing module documents.
using VectorField = std::function<Vec(VecView, double)>;

/// Invalid or inconsistent run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: indefinite matrices, diverging iterations,
/// non-finite states (CLI exit code 4).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace shiftgen
