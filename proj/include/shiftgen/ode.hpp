#pragma once

#include "shiftgen/types.hpp"

namespace shiftgen {

enum class OdeMethod { euler, rk4 };

/// One explicit integrator step of dx/dt = f(x, t) over [t, t + dt].
Vec ode_step(const VectorField& f, VecView x, double t, double dt, OdeMethod method);

}  // namespace shiftgen
