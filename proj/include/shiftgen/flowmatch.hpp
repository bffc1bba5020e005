#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "shiftgen/gaussian.hpp"
#include "shiftgen/net.hpp"
#include "shiftgen/ode.hpp"

namespace shiftgen::flow {

// Linear interpolation path between paired endpoints.
struct Interpolant {
    Vec at(VecView x0, VecView x1, double t) const;        // (1-t) x0 + t x1
    Vec velocity(VecView x0, VecView x1, double t) const;  // x1 - x0
};

// Velocity net v(x, t; c). Forward time 0 -> 1 runs data to reference
// (the normalizing direction); generation integrates 1 -> 0.
struct FlowModel {
    Mlp net;
    Interpolant interpolant;
    std::size_t dim = 0;
    std::size_t context_dim = 0;
    OdeMethod default_integrator = OdeMethod::rk4;
    std::size_t default_steps = 64;

    // bound field for a fixed context; empty context only when context_dim == 0
    VectorField field(Vec context = {}) const;
};

FlowModel make_flow_model(std::size_t dim, std::size_t context_dim,
                          const std::vector<std::size_t>& hidden, Rng& rng);

struct OdeConfig {
    OdeMethod integrator = OdeMethod::rk4;
    std::size_t steps = 64;
    bool reverse = false;  // forward integrates 0 -> 1, reverse 1 -> 0
};

// Particle positions on a shared strictly increasing time grid in [0,1].
struct TrajectoryBundle {
    Vec times;
    std::vector<Matrix> positions;  // one n x d cloud per grid time
};

// Mean squared residual between the net velocity along the interpolation
// path and the path's time derivative.
double fm_loss(const FlowModel& model, const Matrix& x0, const Matrix& x1,
               VecView t, const Matrix* contexts = nullptr);

struct FmTrainConfig {
    std::size_t epochs = 200;
    std::size_t batch = 128;
    double lr = 1e-3;
    std::vector<std::size_t> hidden = {64, 64};
};

struct TrainResult {
    FlowModel model;
    Vec loss_trace;        // per-epoch mean batch loss
    bool diverged = false; // training aborted on a non-finite loss
};

// Stochastic minimization of fm_loss: x0 resampled from data, x1 from the
// reference (analytic Gaussian or a second sample set), t uniform on [0,1].
// Optional contexts align row-for-row with data.
TrainResult train_fm(const Matrix& data, const FullGaussian& reference,
                     const FmTrainConfig& cfg, Rng& rng, const Matrix* contexts = nullptr);
TrainResult train_fm(const Matrix& data, const Matrix& reference,
                     const FmTrainConfig& cfg, Rng& rng, const Matrix* contexts = nullptr);

// Terminal state of the explicit integrator; throws NumericalError naming
// the step index if the state leaves the finite range.
Vec integrate(const FlowModel& model, VecView x, const OdeConfig& cfg, VecView context = {});

// Rowwise integrate: empirical pushforward of the cloud.
Matrix push(const FlowModel& model, const Matrix& cloud, const OdeConfig& cfg,
            const Matrix* contexts = nullptr);

// Log density under the model: run x forward to the reference while
// accumulating the velocity divergence, then add the accumulated term to
// the reference log-density (d log rho / dt = -div v along trajectories).
double log_likelihood(const FlowModel& model, VecView x, const OdeConfig& cfg,
                      const FullGaussian& reference, VecView context = {});

// Fits a fresh velocity net to finite-difference velocities of the bundle:
// central differences inside the grid, one-sided at the ends, plus interval
// midpoints so the field is constrained between grid times.
TrainResult lift_particles(const TrajectoryBundle& bundle, std::size_t epochs,
                           double lr, Rng& rng);

inline constexpr const char* kFlowFormatHeader = "SHIFTGEN-FLOW-1";

void save_flow(const std::filesystem::path& path, const FlowModel& model);
FlowModel load_flow(const std::filesystem::path& path);

}  // namespace shiftgen::flow
