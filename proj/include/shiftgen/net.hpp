#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "shiftgen/matrix.hpp"
#include "shiftgen/rng.hpp"

namespace shiftgen {

/// Network input: state x, optional time t in [0,1], optional context.
/// The assembled vector is concat(x, t, sin 2*pi*t, cos 2*pi*t, context);
/// the time block is present only when t is set.
struct NetInput {
    Vec x;
    std::optional<double> t;
    Vec context;
};

inline constexpr std::size_t kTimeFeatureDim = 3;

/// Fully connected net, tanh on hidden layers, identity output.
/// weights[l] has shape sizes[l+1] x sizes[l].
struct Mlp {
    std::vector<std::size_t> sizes;
    std::vector<Matrix> weights;
    std::vector<Vec> biases;

    std::size_t input_dim() const { return sizes.front(); }
    std::size_t output_dim() const { return sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t param_count() const;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
Mlp make_mlp(const std::vector<std::size_t>& sizes, Rng& rng);

/// Gradient accumulator mirroring an Mlp's parameter shapes.
struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<Vec> biases;

    static MlpGrads zeros_like(const Mlp& net);
    void accumulate(const MlpGrads& other);
    void scale(double s);
    double max_abs() const;
};

Vec assemble_input(const NetInput& input);
std::size_t assembled_dim(std::size_t state_dim, bool with_time, std::size_t context_dim);

/// Evaluates the net on an already assembled input vector.
Vec forward_assembled(const Mlp& net, VecView assembled);
Vec forward(const Mlp& net, const NetInput& input);

struct BackwardResult {
    MlpGrads grads;    // d(upstream . output)/d params
    Vec input_grad;    // d(upstream . output)/d assembled input
};

/// Exact reverse-mode gradients of upstream^T forward(net, input).
BackwardResult backward(const Mlp& net, const NetInput& input, VecView upstream);
BackwardResult backward_assembled(const Mlp& net, VecView assembled, VecView upstream);

/// Jacobian of the output with respect to the state block x only,
/// one backward pass per output coordinate.
Matrix jacobian(const Mlp& net, const NetInput& input);

/// Trace of jacobian(): the spatial divergence of the field.
double divergence(const Mlp& net, const NetInput& input);

/// Bias-corrected adaptive-moment optimizer state.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Matrix> m_w, v_w;
    std::vector<Vec> m_b, v_b;

    static AdamState like(const Mlp& net, double lr);
};

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

/// Mean squared residual between net outputs and target rows over aligned
/// (input, target) pairs; accumulates parameter gradients when asked.
double matching_loss_grad(const Mlp& net, const std::vector<NetInput>& inputs,
                          const Matrix& targets, MlpGrads* grads);

inline constexpr const char* kNetFormatHeader = "SHIFTGEN-NET-1";

/// Textual checkpoint: header line, layer sizes, parameters in layer order
/// (shortest round-trip decimals, so save/load is bit-exact).
void save_net(const std::filesystem::path& path, const Mlp& net,
              const std::string& header = kNetFormatHeader);
Mlp load_net(const std::filesystem::path& path,
             const std::string& expected_header = kNetFormatHeader);

void write_net_text(std::ostream& out, const Mlp& net);
Mlp read_net_text(std::istream& in);

}  // namespace shiftgen
