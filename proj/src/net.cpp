#include "shiftgen/net.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace shiftgen {

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
    return n;
}

Mlp make_mlp(const std::vector<std::size_t>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output layer");
    Mlp net;
    net.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t fan_in = sizes[l], fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = (2.0 * rng.uniform() - 1.0) * bound;
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

void MlpGrads::accumulate(const MlpGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].data().size(); ++i)
            weights[l].data()[i] += other.weights[l].data()[i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
}

void MlpGrads::scale(double s) {
    for (auto& w : weights)
        for (double& v : w.data()) v *= s;
    for (auto& b : biases)
        for (double& v : b) v *= s;
}

double MlpGrads::max_abs() const {
    double m = 0.0;
    for (const auto& w : weights)
        for (double v : w.data()) m = std::max(m, std::fabs(v));
    for (const auto& b : biases)
        for (double v : b) m = std::max(m, std::fabs(v));
    return m;
}

Vec assemble_input(const NetInput& input) {
    Vec a;
    a.reserve(input.x.size() + (input.t ? kTimeFeatureDim : 0) + input.context.size());
    a.insert(a.end(), input.x.begin(), input.x.end());
    if (input.t) {
        const double t = *input.t;
        a.push_back(t);
        a.push_back(std::sin(2.0 * std::numbers::pi * t));
        a.push_back(std::cos(2.0 * std::numbers::pi * t));
    }
    a.insert(a.end(), input.context.begin(), input.context.end());
    return a;
}

std::size_t assembled_dim(std::size_t state_dim, bool with_time, std::size_t context_dim) {
    return state_dim + (with_time ? kTimeFeatureDim : 0) + context_dim;
}

namespace {

// Per-layer outputs kept for the reverse pass; act[0] is the input.
struct Trace {
    std::vector<Vec> act;
};

Trace forward_trace(const Mlp& net, VecView assembled) {
    if (assembled.size() != net.input_dim())
        throw std::invalid_argument("forward: assembled input has dimension " +
                                    std::to_string(assembled.size()) + ", net expects " +
                                    std::to_string(net.input_dim()));
    Trace tr;
    tr.act.emplace_back(assembled.begin(), assembled.end());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const bool hidden = l + 1 < net.layer_count();
        Vec z = matvec(net.weights[l], tr.act.back());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += net.biases[l][i];
        if (hidden)
            for (double& v : z) v = std::tanh(v);
        tr.act.push_back(std::move(z));
    }
    return tr;
}

}  // namespace

Vec forward_assembled(const Mlp& net, VecView assembled) {
    return forward_trace(net, assembled).act.back();
}

Vec forward(const Mlp& net, const NetInput& input) {
    return forward_assembled(net, assemble_input(input));
}

BackwardResult backward_assembled(const Mlp& net, VecView assembled, VecView upstream) {
    if (upstream.size() != net.output_dim())
        throw std::invalid_argument("backward: upstream dimension mismatch");
    const Trace tr = forward_trace(net, assembled);
    BackwardResult res;
    res.grads = MlpGrads::zeros_like(net);

    Vec delta(upstream.begin(), upstream.end());
    for (std::size_t li = net.layer_count(); li-- > 0;) {
        const bool hidden = li + 1 < net.layer_count();
        if (hidden) {
            // delta arrives w.r.t. tanh output; act[li+1] already holds tanh(z).
            const Vec& a = tr.act[li + 1];
            for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= 1.0 - a[i] * a[i];
        }
        const Vec& in = tr.act[li];
        Matrix& gw = res.grads.weights[li];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            res.grads.biases[li][i] = delta[i];
            for (std::size_t j = 0; j < in.size(); ++j) gw(i, j) = delta[i] * in[j];
        }
        Vec prev(in.size(), 0.0);
        for (std::size_t i = 0; i < delta.size(); ++i)
            for (std::size_t j = 0; j < in.size(); ++j)
                prev[j] += net.weights[li](i, j) * delta[i];
        delta = std::move(prev);
    }
    res.input_grad = std::move(delta);
    return res;
}

BackwardResult backward(const Mlp& net, const NetInput& input, VecView upstream) {
    return backward_assembled(net, assemble_input(input), upstream);
}

Matrix jacobian(const Mlp& net, const NetInput& input) {
    const Vec assembled = assemble_input(input);
    const std::size_t d_out = net.output_dim();
    const std::size_t d_state = input.x.size();
    Matrix jac(d_out, d_state);
    Vec upstream(d_out, 0.0);
    for (std::size_t i = 0; i < d_out; ++i) {
        upstream[i] = 1.0;
        const auto res = backward_assembled(net, assembled, upstream);
        for (std::size_t j = 0; j < d_state; ++j) jac(i, j) = res.input_grad[j];
        upstream[i] = 0.0;
    }
    return jac;
}

double divergence(const Mlp& net, const NetInput& input) {
    const Matrix jac = jacobian(net, input);
    const std::size_t n = std::min(jac.rows(), jac.cols());
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += jac(i, i);
    return tr;
}

AdamState AdamState::like(const Mlp& net, double lr) {
    AdamState s;
    s.lr = lr;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        s.m_w.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        s.v_w.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        s.m_b.emplace_back(net.biases[l].size(), 0.0);
        s.v_b.emplace_back(net.biases[l].size(), 0.0);
    }
    return s;
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state) {
    if (grads.weights.size() != net.layer_count())
        throw std::invalid_argument("adam_step: gradient shapes disagree with net");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto update = [&](double& param, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        param -= state.lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto& w = net.weights[l].data();
        const auto& gw = grads.weights[l].data();
        auto& mw = state.m_w[l].data();
        auto& vw = state.v_w[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) update(w[i], gw[i], mw[i], vw[i]);
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            update(net.biases[l][i], grads.biases[l][i], state.m_b[l][i], state.v_b[l][i]);
    }
}

void write_net_text(std::ostream& out, const Mlp& net) {
    out << net.sizes.size();
    for (auto s : net.sizes) out << ' ' << s;
    out << '\n';
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& w = net.weights[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) out << (i ? " " : "") << format_shortest(w[i]);
        out << '\n';
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            out << (i ? " " : "") << format_shortest(net.biases[l][i]);
        out << '\n';
    }
}

Mlp read_net_text(std::istream& in) {
    std::size_t count = 0;
    if (!(in >> count) || count < 2) throw DataError("net checkpoint: bad layer count");
    std::vector<std::size_t> sizes(count);
    for (auto& s : sizes)
        if (!(in >> s)) throw DataError("net checkpoint: truncated layer sizes");
    Mlp net;
    net.sizes = sizes;
    auto read_val = [&in]() {
        std::string tok;
        if (!(in >> tok)) throw DataError("net checkpoint: truncated parameters");
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{}) throw DataError("net checkpoint: bad number '" + tok + "'");
        return v;
    };
    for (std::size_t l = 0; l + 1 < count; ++l) {
        Matrix w(sizes[l + 1], sizes[l]);
        for (double& v : w.data()) v = read_val();
        net.weights.push_back(std::move(w));
        Vec b(sizes[l + 1]);
        for (double& v : b) v = read_val();
        net.biases.push_back(std::move(b));
    }
    return net;
}

void save_net(const std::filesystem::path& path, const Mlp& net, const std::string& header) {
    std::ofstream out(path);
    if (!out) throw DataError("save_net: cannot open " + path.string());
    out << header << '\n';
    write_net_text(out, net);
}

Mlp load_net(const std::filesystem::path& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw DataError("load_net: cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    if (header != expected_header)
        throw DataError("load_net: header '" + header + "', expected '" + expected_header + "'");
    return read_net_text(in);
}

double matching_loss_grad(const Mlp& net, const std::vector<NetInput>& inputs,
                          const Matrix& targets, MlpGrads* grads) {
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Vec out = forward(net, inputs[i]);
        Vec resid(out.size());
        for (std::size_t j = 0; j < out.size(); ++j) resid[j] = out[j] - targets(i, j);
        loss += dot(resid, resid) * inv_n;
        if (grads != nullptr) {
            const Vec upstream = vec_scale(2.0 * inv_n, resid);
            grads->accumulate(backward(net, inputs[i], upstream).grads);
        }
    }
    return loss;
}

}  // namespace shiftgen
