#include "shiftgen/flowmatch.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shiftgen::flow {

Vec Interpolant::at(VecView x0, VecView x1, double t) const {
    if (x0.size() != x1.size()) throw std::invalid_argument("Interpolant: endpoint mismatch");
    Vec out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * x0[i] + t * x1[i];
    return out;
}

Vec Interpolant::velocity(VecView x0, VecView x1, double) const {
    if (x0.size() != x1.size()) throw std::invalid_argument("Interpolant: endpoint mismatch");
    return vec_sub(x1, x0);
}

VectorField FlowModel::field(Vec context) const {
    if (context.size() != context_dim)
        throw std::invalid_argument("FlowModel::field: context size mismatch");
    return [net = net, context = std::move(context)](VecView x, double t) {
        NetInput in;
        in.x.assign(x.begin(), x.end());
        in.t = t;
        in.context = context;
        return forward(net, in);
    };
}

FlowModel make_flow_model(std::size_t dim, std::size_t context_dim,
                          const std::vector<std::size_t>& hidden, Rng& rng) {
    if (dim == 0) throw std::invalid_argument("make_flow_model: dim must be >= 1");
    std::vector<std::size_t> sizes;
    sizes.push_back(assembled_dim(dim, true, context_dim));
    for (std::size_t h : hidden) sizes.push_back(h);
    sizes.push_back(dim);
    FlowModel model;
    model.net = make_mlp(sizes, rng);
    model.dim = dim;
    model.context_dim = context_dim;
    return model;
}

namespace {

void check_model(const FlowModel& model) {
    const std::size_t want = assembled_dim(model.dim, true, model.context_dim);
    if (model.net.input_dim() != want || model.net.output_dim() != model.dim)
        throw std::invalid_argument("FlowModel: net shape inconsistent with dim/context_dim");
}

NetInput flow_input(const FlowModel& model, VecView x, double t, VecView context) {
    NetInput in;
    in.x.assign(x.begin(), x.end());
    in.t = t;
    if (context.size() != model.context_dim)
        throw std::invalid_argument("flow: context size mismatch");
    in.context.assign(context.begin(), context.end());
    return in;
}

}  // namespace

double fm_loss(const FlowModel& model, const Matrix& x0, const Matrix& x1,
               VecView t, const Matrix* contexts) {
    check_model(model);
    const std::size_t n = x0.rows();
    if (x1.rows() != n || t.size() != n)
        throw std::invalid_argument("fm_loss: batch sizes misaligned");
    if (contexts != nullptr && contexts->rows() != n)
        throw std::invalid_argument("fm_loss: context rows misaligned");
    if (x0.cols() != model.dim || x1.cols() != model.dim)
        throw std::invalid_argument("fm_loss: batch dimension mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] < 0.0 || t[i] > 1.0) throw std::invalid_argument("fm_loss: t outside [0,1]");
        const Vec xt = model.interpolant.at(x0.row(i), x1.row(i), t[i]);
        const Vec target = model.interpolant.velocity(x0.row(i), x1.row(i), t[i]);
        const Vec ctx = contexts != nullptr ? contexts->row_vec(i) : Vec{};
        const Vec out = forward(model.net, flow_input(model, xt, t[i], ctx));
        loss += sq_dist(out, target);
    }
    return loss / static_cast<double>(n);
}

namespace {

// Shared trainer: sample_x1 supplies a reference batch each step.
template <typename SampleX1>
TrainResult train_fm_impl(const Matrix& data, SampleX1&& sample_x1,
                          const FmTrainConfig& cfg, Rng& rng, const Matrix* contexts) {
    if (data.rows() == 0) throw std::invalid_argument("train_fm: empty data");
    if (cfg.batch == 0 || data.rows() < cfg.batch)
        throw std::invalid_argument("train_fm: data rows must be >= batch");
    if (contexts != nullptr && contexts->rows() != data.rows())
        throw std::invalid_argument("train_fm: context rows misaligned with data");
    const std::size_t k = contexts != nullptr ? contexts->cols() : 0;

    TrainResult res;
    res.model = make_flow_model(data.cols(), k, cfg.hidden, rng);
    AdamState adam = AdamState::like(res.model.net, cfg.lr);
    const std::size_t batches = std::max<std::size_t>(1, data.rows() / cfg.batch);

    std::vector<NetInput> inputs(cfg.batch);
    Matrix targets(cfg.batch, data.cols());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const Matrix x1 = sample_x1(cfg.batch);
            for (std::size_t i = 0; i < cfg.batch; ++i) {
                const std::size_t row = rng.below(data.rows());
                const double t = rng.uniform();
                const Vec xt = res.model.interpolant.at(data.row(row), x1.row(i), t);
                targets.set_row(i, res.model.interpolant.velocity(data.row(row), x1.row(i), t));
                const Vec ctx = contexts != nullptr ? contexts->row_vec(row) : Vec{};
                inputs[i] = flow_input(res.model, xt, t, ctx);
            }
            MlpGrads grads = MlpGrads::zeros_like(res.model.net);
            const double loss = matching_loss_grad(res.model.net, inputs, targets, &grads);
            if (!std::isfinite(loss)) {
                res.diverged = true;
                res.loss_trace.push_back(loss);
                return res;
            }
            adam_step(res.model.net, grads, adam);
            epoch_loss += loss;
        }
        res.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return res;
}

}  // namespace

TrainResult train_fm(const Matrix& data, const FullGaussian& reference,
                     const FmTrainConfig& cfg, Rng& rng, const Matrix* contexts) {
    if (reference.dim() != data.cols())
        throw std::invalid_argument("train_fm: reference dimension mismatch");
    return train_fm_impl(
        data, [&](std::size_t b) { return sample_gaussian(rng, reference, b); }, cfg, rng,
        contexts);
}

TrainResult train_fm(const Matrix& data, const Matrix& reference,
                     const FmTrainConfig& cfg, Rng& rng, const Matrix* contexts) {
    if (reference.cols() != data.cols() || reference.rows() == 0)
        throw std::invalid_argument("train_fm: reference sample mismatch");
    return train_fm_impl(
        data,
        [&](std::size_t b) {
            Matrix out(b, reference.cols());
            for (std::size_t i = 0; i < b; ++i)
                out.set_row(i, reference.row(rng.below(reference.rows())));
            return out;
        },
        cfg, rng, contexts);
}

Vec integrate(const FlowModel& model, VecView x, const OdeConfig& cfg, VecView context) {
    check_model(model);
    if (cfg.steps == 0) throw std::invalid_argument("integrate: steps must be >= 1");
    if (x.size() != model.dim) throw std::invalid_argument("integrate: state dimension mismatch");
    const VectorField f = model.field(Vec(context.begin(), context.end()));
    const double dt = (cfg.reverse ? -1.0 : 1.0) / static_cast<double>(cfg.steps);
    Vec state(x.begin(), x.end());
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        const double t = cfg.reverse ? 1.0 + static_cast<double>(k) * dt
                                     : static_cast<double>(k) * dt;
        state = ode_step(f, state, t, dt, cfg.integrator);
        for (double v : state)
            if (!std::isfinite(v))
                throw NumericalError("integrate: non-finite state at step " + std::to_string(k));
    }
    return state;
}

Matrix push(const FlowModel& model, const Matrix& cloud, const OdeConfig& cfg,
            const Matrix* contexts) {
    if (contexts != nullptr && contexts->rows() != cloud.rows())
        throw std::invalid_argument("push: context rows misaligned");
    Matrix out(cloud.rows(), cloud.cols());
    for (std::size_t i = 0; i < cloud.rows(); ++i) {
        const Vec ctx = contexts != nullptr ? contexts->row_vec(i) : Vec{};
        out.set_row(i, integrate(model, cloud.row(i), cfg, ctx));
    }
    return out;
}

double log_likelihood(const FlowModel& model, VecView x, const OdeConfig& cfg,
                      const FullGaussian& reference, VecView context) {
    check_model(model);
    if (model.dim > 64) throw std::invalid_argument("log_likelihood: dimension > 64 unsupported");
    if (reference.dim() != model.dim)
        throw std::invalid_argument("log_likelihood: reference dimension mismatch");
    if (x.size() != model.dim)
        throw std::invalid_argument("log_likelihood: state dimension mismatch");

    // augmented state (x, a): da/dt = div v, integrated forward 0 -> 1
    const Vec ctx(context.begin(), context.end());
    const VectorField aug = [&](VecView s, double t) {
        const VecView xs = s.first(model.dim);
        const NetInput in = flow_input(model, xs, t, ctx);
        Vec out = forward(model.net, in);
        out.push_back(divergence(model.net, in));
        return out;
    };
    Vec state(x.begin(), x.end());
    state.push_back(0.0);
    const double dt = 1.0 / static_cast<double>(cfg.steps);
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        state = ode_step(aug, state, static_cast<double>(k) * dt, dt, cfg.integrator);
        for (double v : state)
            if (!std::isfinite(v))
                throw NumericalError("log_likelihood: non-finite accumulation at step " +
                                     std::to_string(k));
    }
    const double accumulated = state.back();
    state.pop_back();
    return reference.log_density(state) + accumulated;
}

TrainResult lift_particles(const TrajectoryBundle& bundle, std::size_t epochs,
                           double lr, Rng& rng) {
    const std::size_t kk = bundle.times.size();
    if (kk < 2) throw std::invalid_argument("lift_particles: need at least 2 grid times");
    if (bundle.positions.size() != kk)
        throw std::invalid_argument("lift_particles: positions/time grid mismatch");
    const std::size_t n = bundle.positions.front().rows();
    const std::size_t d = bundle.positions.front().cols();
    for (std::size_t k = 0; k < kk; ++k) {
        if (bundle.positions[k].rows() != n || bundle.positions[k].cols() != d)
            throw std::invalid_argument("lift_particles: ragged bundle");
        if (!bundle.positions[k].all_finite())
            throw std::invalid_argument("lift_particles: non-finite positions");
        if (k > 0 && bundle.times[k] <= bundle.times[k - 1])
            throw std::invalid_argument("lift_particles: grid must be strictly increasing");
    }

    // velocity targets: finite differences at grid times plus interval
    // midpoints, so the field is pinned between grid times as well
    std::vector<NetInput> inputs;
    Matrix targets(n * (2 * kk - 1), d);
    inputs.reserve(n * (2 * kk - 1));
    std::size_t row = 0;
    for (std::size_t k = 0; k < kk; ++k) {
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == kk ? k : k + 1;
        const double span = bundle.times[hi] - bundle.times[lo];
        for (std::size_t i = 0; i < n; ++i) {
            const Vec vel = vec_scale(
                1.0 / span, vec_sub(bundle.positions[hi].row(i), bundle.positions[lo].row(i)));
            targets.set_row(row++, vel);
            NetInput in;
            in.x = bundle.positions[k].row_vec(i);
            in.t = bundle.times[k];
            inputs.push_back(std::move(in));
        }
    }
    for (std::size_t k = 0; k + 1 < kk; ++k) {
        const double span = bundle.times[k + 1] - bundle.times[k];
        for (std::size_t i = 0; i < n; ++i) {
            const Vec vel = vec_scale(
                1.0 / span, vec_sub(bundle.positions[k + 1].row(i), bundle.positions[k].row(i)));
            targets.set_row(row++, vel);
            NetInput in;
            in.x = vec_scale(0.5, vec_add(bundle.positions[k].row(i),
                                          bundle.positions[k + 1].row(i)));
            in.t = 0.5 * (bundle.times[k] + bundle.times[k + 1]);
            inputs.push_back(std::move(in));
        }
    }

    TrainResult res;
    res.model = make_flow_model(d, 0, {64, 64}, rng);
    AdamState adam = AdamState::like(res.model.net, lr);
    const std::size_t batch = std::min<std::size_t>(128, inputs.size());
    const std::size_t batches = std::max<std::size_t>(1, inputs.size() / batch);
    std::vector<NetInput> chunk(batch);
    Matrix chunk_targets(batch, d);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            for (std::size_t i = 0; i < batch; ++i) {
                const std::size_t pick = rng.below(inputs.size());
                chunk[i] = inputs[pick];
                chunk_targets.set_row(i, targets.row(pick));
            }
            MlpGrads grads = MlpGrads::zeros_like(res.model.net);
            const double loss = matching_loss_grad(res.model.net, chunk, chunk_targets, &grads);
            if (!std::isfinite(loss)) {
                res.diverged = true;
                res.loss_trace.push_back(loss);
                return res;
            }
            adam_step(res.model.net, grads, adam);
            epoch_loss += loss;
        }
        res.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return res;
}

void save_flow(const std::filesystem::path& path, const FlowModel& model) {
    check_model(model);
    std::ofstream out(path);
    if (!out) throw DataError("save_flow: cannot open " + path.string());
    out << kFlowFormatHeader << "\n";
    out << "d " << model.dim << " k " << model.context_dim << " interpolant linear integrator "
        << (model.default_integrator == OdeMethod::rk4 ? "rk4" : "euler") << " steps "
        << model.default_steps << "\n";
    write_net_text(out, model.net);
    if (!out) throw DataError("save_flow: write failed for " + path.string());
}

FlowModel load_flow(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_flow: cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    if (header != kFlowFormatHeader)
        throw DataError("load_flow: bad header '" + header + "'");
    std::string meta;
    std::getline(in, meta);
    std::istringstream ms(meta);
    std::string kd, kkey, kind_label, kind, integ_label, integ, steps_label;
    FlowModel model;
    std::size_t steps = 0;
    if (!(ms >> kd >> model.dim >> kkey >> model.context_dim >> kind_label >> kind >>
          integ_label >> integ >> steps_label >> steps) ||
        kd != "d" || kkey != "k" || kind_label != "interpolant" || integ_label != "integrator" ||
        steps_label != "steps")
        throw DataError("load_flow: malformed metadata line '" + meta + "'");
    if (kind != "linear") throw DataError("load_flow: unknown interpolant '" + kind + "'");
    if (integ != "rk4" && integ != "euler")
        throw DataError("load_flow: unknown integrator '" + integ + "'");
    model.default_integrator = integ == "rk4" ? OdeMethod::rk4 : OdeMethod::euler;
    model.default_steps = steps;
    model.net = read_net_text(in);
    check_model(model);
    return model;
}

}  // namespace shiftgen::flow
