#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "milab/models.hpp"

namespace milab::sgd {

/// One vanilla-SGD run on the correlation loss l(theta; x) = -f_theta(x) f*(x).
struct SGDConfig {
  double eta = 0.01;
  std::int64_t T = 0;
  std::uint64_t seed = 0;
  std::int64_t record_every = 100;
  std::int64_t mc_samples = 0;      // population loss estimates per record (0 = off)
  std::int64_t grad_samples = 0;    // population gradient-norm estimates (0 = off)
  std::int64_t kappa_samples = 0;   // condition-number estimates (0 = off)
  std::optional<double> clip_G;     // rescale the m-vector coefficient to this norm

  // Extensions beyond the per-step contract:
  bool hybrid_early = false;            // also record every step t <= 100
  std::optional<double> stop_rho;       // stop once a recorded rho crosses this
  double input_scale = 1.0;             // multiply every sample by c (scale checks)
  double kappa_G = 1.0;                 // numerator bound G in kappa_hat = G^2/lambda_min
  double thm1_C = 5.0;                  // pilot-calibrated constant for the rho ceiling
  double thm1_kappa_bar = 1.0;
  double delta = 0.01;
};

/// Instrumentation emitted at each recorded step.
struct TrajectoryRecord {
  std::int64_t t = 0;
  double rho = 0.0;
  double w_fro = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
  double loss_hat = 0.0, loss_se = 0.0;      // MC estimate of L(theta_t)
  double dloss_hat = 0.0, dloss_se = 0.0;    // CRN estimate of L(theta_t) - L(theta_0)
  double grad_pop_hat = 0.0, grad_pop_se = 0.0;
  double kappa_hat = 0.0, kappa_se_rel = 0.0;
  double lambda_min = 0.0;
  double psi_at_rho = 0.0;
  double ceiling_thm1 = 0.0;
};

/// Gradient condition number bookkeeping over a trajectory.
struct KappaEstimate {
  double G_used = 0.0;
  double min_eig_running = 0.0;
  double kappa_hat = 0.0;  // G^2 / min_eig_running
};

struct TrajectoryResult {
  std::vector<TrajectoryRecord> records;
  KappaEstimate kappa;
  std::optional<std::int64_t> escape_t;  // first recorded t with rho >= stop_rho
  linalg::Matrix final_W;
};

/// One SGD step: W <- W + eta * f*(x) * pre_grad * x^T (descent on -f f*).
/// When clip_G is set and ||f*(x) pre_grad|| exceeds it, the coefficient
/// vector is rescaled to norm clip_G before the outer product.
void sgd_step(models::PredictorSpec& pred, const models::TargetSpec& target,
              std::span<const double> x, double eta, std::optional<double> clip_G);

/// Run a full instrumented trajectory. Bit-reproducible given (cfg, seed):
/// weights and samples come from counter-based streams keyed by cfg.seed, and
/// MC estimates share one sample stream across records (common random
/// numbers), evaluated against weight snapshots after the run.
TrajectoryResult run_trajectory(const SGDConfig& cfg, models::PredictorSpec pred,
                                const models::TargetSpec& target,
                                const models::InputDistribution& dist);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

/// MC mean and standard error of the population correlation loss
/// -E[f_theta(x) f*(x)].
McEstimate estimate_population_loss(const models::PredictorSpec& pred,
                                    const models::TargetSpec& target,
                                    const models::InputDistribution& dist,
                                    std::int64_t n, rng::Stream stream);

/// ||E[grad_W l]||_F estimated as the Frobenius norm of the MC mean gradient,
/// with a delete-one-block jackknife standard error.
McEstimate estimate_population_gradient_norm(const models::PredictorSpec& pred,
                                             const models::TargetSpec& target,
                                             const models::InputDistribution& dist,
                                             std::int64_t n, rng::Stream stream);

struct KappaSample {
  double lambda_min = 0.0;
  double lambda_min_se = 0.0;
  double kappa = 0.0;      // G^2 / lambda_min
  double rel_se = 0.0;     // jackknife se of lambda_min, relative
};

/// kappa at the current state: the sphere infimum in the definition is exactly
/// the smallest eigenvalue of the m x m second-moment matrix of the
/// pre-activation gradient, so no sphere discretization is involved.
/// Throws DegenerateGradient when lambda_min < 1e-12 * trace/m.
KappaSample estimate_kappa(const models::PredictorSpec& pred,
                           const models::TargetSpec& target,
                           const models::InputDistribution& dist, std::int64_t n,
                           double G, rng::Stream stream);

/// C * sqrt(kappa_bar * m * p * log(T d p / delta) / d).
double theorem1_rho_ceiling(double C, double kappa_bar, std::int64_t m,
                            std::int64_t p, std::int64_t T, std::int64_t d,
                            double delta);

/// floor(d * epsilon^2 / p); the k* = 1 iteration budget up to the
/// experiment's calibrated constant.
std::int64_t sample_budget_k1(std::int64_t d, std::int64_t p, double epsilon);

/// psi ceiling used for the psi_at_rho column: periodic targets use the
/// exponential bound, everything else the information-exponent bound.
/// NaN when the predictor's G1 is not finite (e.g. Hermite activations).
double psi_for_target(const models::TargetSpec& target, double G1, int m, double rho);

}  // namespace milab::sgd
