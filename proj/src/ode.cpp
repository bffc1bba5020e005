#include "shiftgen/ode.hpp"

#include "shiftgen/matrix.hpp"

namespace shiftgen {

Vec ode_step(const VectorField& f, VecView x, double t, double dt, OdeMethod method) {
    if (method == OdeMethod::euler) {
        const Vec k1 = f(x, t);
        Vec out(x.begin(), x.end());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += dt * k1[i];
        return out;
    }
    const Vec k1 = f(x, t);
    Vec tmp(x.size());
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    const Vec k2 = f(tmp, t + 0.5 * dt);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    const Vec k3 = f(tmp, t + 0.5 * dt);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = x[i] + dt * k3[i];
    const Vec k4 = f(tmp, t + dt);
    Vec out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

}  // namespace shiftgen
