#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "shiftgen/gaussian.hpp"
#include "shiftgen/matrix.hpp"
#include "shiftgen/net.hpp"
#include "shiftgen/rng.hpp"

namespace shiftgen::diffusion {

/// Variance-preserving noising schedule beta_1..beta_N with the cumulative
/// products alpha_bar_n = prod_{k<=n}(1 - beta_k) cached.  Access is
/// zero-based: index i describes chain step i+1.  An empty schedule is the
/// zero-step chain.
class VpSchedule {
  public:
    VpSchedule() = default;
    explicit VpSchedule(Vec betas);

    /// Constant-beta schedule.  The default length pushes the terminal
    /// alpha_bar below 1e-3 so the reverse dynamics can start from N(0, I).
    static VpSchedule constant(double beta = 0.02, std::size_t n = 350);

    std::size_t steps() const { return betas_.size(); }
    double beta(std::size_t i) const { return betas_[i]; }
    double alpha_bar(std::size_t i) const { return alpha_bars_[i]; }
    const Vec& betas() const { return betas_; }

    /// Continuous time of step i+1 under the exact correspondence
    /// e^{-2s} = alpha_bar with the unit Ornstein-Uhlenbeck process.
    double ou_time(std::size_t i) const;
    /// ou_time of the last step; 0 for an empty schedule.
    double terminal_ou_time() const;

  private:
    Vec betas_;
    Vec alpha_bars_;
};

/// Score estimate as a function of state and Ornstein-Uhlenbeck time.
using ScoreFn = std::function<Vec(VecView, double)>;

/// Gaussian mixture; weights must be nonnegative and sum to 1.
using Mixture = std::vector<std::pair<double, FullGaussian>>;

/// Score network bundled with the schedule it was trained against.
struct ScoreModel {
    Mlp net;
    VpSchedule schedule;
    std::size_t dim = 0;
};

/// Runs the noising chain X_n = sqrt(1 - beta_n) X_{n-1} + sqrt(beta_n) Z
/// rowwise and returns every cloud, the input first.
std::vector<Matrix> forward_chain(const Matrix& x0, const VpSchedule& schedule, Rng& rng);

/// Marginal of the unit Ornstein-Uhlenbeck process at time t >= 0 started
/// from the given Gaussian: N(e^{-t} m, e^{-2t} S + (1 - e^{-2t}) I).
FullGaussian ou_marginal(const FullGaussian& start, double t);

/// Exact gradient of the log mixture density, evaluated in log-space so deep
/// tails stay finite.
Vec analytic_score(const Mixture& mixture, VecView x);

/// Time-indexed analytic score of the mixture pushed through the
/// Ornstein-Uhlenbeck flow.  The diffused mixture is memoized per distinct
/// time, so the returned function is stateful and not thread-safe.
ScoreFn mixture_score(Mixture mixture);

/// Evaluates the net with Ornstein-Uhlenbeck time rescaled to [0,1] by the
/// schedule's terminal time.
ScoreFn model_score(const ScoreModel& model);

struct DsmTrainConfig {
    std::size_t epochs = 200;
    std::size_t batch = 128;
    double lr = 1e-3;
    std::vector<std::size_t> hidden = {64, 64};
};

struct DsmResult {
    ScoreModel model;
    Vec loss_trace;  // mean batch loss per epoch
    bool diverged = false;
};

/// Denoising score matching: draws a data row, a schedule step n and noise
/// eps, then regresses the net at x_n = sqrt(ab_n) x0 + sqrt(1 - ab_n) eps
/// toward -eps / sqrt(1 - ab_n).  Aborts with diverged set on non-finite
/// loss; epochs = 0 returns the initialization.
DsmResult train_dsm(const Matrix& data, const VpSchedule& schedule, const DsmTrainConfig& cfg,
                    Rng& rng);

/// Euler-Maruyama discretization of the reverse-time dynamics on the
/// schedule grid, from N(0, I) draws down to step 0.  An empty schedule
/// returns the reference draws unchanged.
Matrix reverse_sde_sample(const ScoreFn& score, const VpSchedule& schedule, std::size_t n,
                          std::size_t dim, Rng& rng);
Matrix reverse_sde_sample(const ScoreModel& model, std::size_t n, Rng& rng);

/// Probability-flow sampler: integrates dx/dt = -x - score(x, t) with rk4
/// from t = terminal_time down to 0, starting at N(0, I) draws.
/// Deterministic given the initial draws.
Matrix pf_ode_sample(const ScoreFn& score, std::size_t n, std::size_t dim, std::size_t steps,
                     Rng& rng, double terminal_time = 4.0);
Matrix pf_ode_sample(const ScoreModel& model, std::size_t n, std::size_t steps, Rng& rng);

inline constexpr const char* kScoreFormatHeader = "SHIFTGEN-SCORE-1";

/// Text checkpoint: header, dimensions, the beta schedule, then the net.
void save_score(const std::filesystem::path& path, const ScoreModel& model);
ScoreModel load_score(const std::filesystem::path& path);

}  // namespace shiftgen::diffusion
