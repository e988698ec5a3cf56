#include "milab/sgd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace milab::sgd {

using linalg::Matrix;
using models::InputDistribution;
using models::PredictorSpec;
using models::TargetSpec;

namespace {

constexpr int kJackknifeBlocks = 20;

double activation_g1(const models::Activation& a) {
  switch (a.kind) {
    case models::ActKind::Relu: return 1.0;
    case models::ActKind::LeakyRelu: return std::max(1.0, std::abs(a.alpha));
    case models::ActKind::Softplus: return 1.0;
    case models::ActKind::Gelu: {
      const double r = std::sqrt(2.0);
      const double phi = std::exp(-1.0) * 0.3989422804014327;
      return 0.5 * std::erfc(-r * 0.7071067811865476) + r * phi;
    }
    case models::ActKind::Sigmoid: return 0.25;
    case models::ActKind::Tanh: return 1.0;
    case models::ActKind::Sin: return 1.0;
    case models::ActKind::Hermite: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct MeanVar {
  long double sum = 0.0L, sum_sq = 0.0L;
  std::int64_t n = 0;
  void add(double x) {
    sum += x;
    sum_sq += static_cast<long double>(x) * x;
    ++n;
  }
  double mean() const { return n ? static_cast<double>(sum / n) : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    const long double m = sum / n;
    long double var = (sum_sq - static_cast<long double>(n) * m * m) / (n - 1);
    if (var < 0.0L) var = 0.0L;
    return std::sqrt(static_cast<double>(var) / static_cast<double>(n));
  }
};

double jackknife_se(const std::vector<double>& replicates) {
  const std::size_t b = replicates.size();
  if (b < 2) return 0.0;
  double mean = 0.0;
  for (double r : replicates) mean += r;
  mean /= static_cast<double>(b);
  double ss = 0.0;
  for (double r : replicates) ss += (r - mean) * (r - mean);
  return std::sqrt(ss * static_cast<double>(b - 1) / static_cast<double>(b));
}

}  // namespace

void sgd_step(PredictorSpec& pred, const TargetSpec& target,
              std::span<const double> x, double eta, std::optional<double> clip_G) {
  const std::size_t m = pred.m, d = pred.d;
  if (x.size() != d || target.d() != d)
    fail(ErrorCode::DimensionMismatch, "sgd_step shapes");

  std::vector<double> a(m);
  models::predictor_pre_gradient(pred, x, a);
  const double coef = models::eval_target(target, x);
  long double nrm2 = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    a[i] *= coef;
    nrm2 += static_cast<long double>(a[i]) * a[i];
  }
  if (clip_G) {
    const double nrm = std::sqrt(static_cast<double>(nrm2));
    if (nrm > *clip_G && nrm > 0.0) {
      const double c = *clip_G / nrm;
      for (std::size_t i = 0; i < m; ++i) a[i] *= c;
    }
  }
  bool finite = true;
  for (std::size_t i = 0; i < m; ++i) {
    const double step = eta * a[i];
    if (!std::isfinite(step)) {
      finite = false;
      break;
    }
    double* row = pred.W.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) row[j] += step * x[j];
  }
  if (!finite || !pred.W.all_finite())
    fail(ErrorCode::NonFinite, "sgd_step produced NaN/Inf");
}

namespace {

// The scheduled recording steps: t = 0, hybrid early steps, stride multiples,
// and the final step.
std::vector<std::int64_t> record_steps(const SGDConfig& cfg) {
  std::vector<std::int64_t> steps;
  steps.push_back(0);
  for (std::int64_t t = 1; t <= cfg.T; ++t) {
    const bool early = cfg.hybrid_early && t <= 100;
    if (early || t % cfg.record_every == 0 || t == cfg.T) steps.push_back(t);
  }
  return steps;
}

struct SnapshotStats {
  std::vector<MeanVar> loss;
  std::vector<MeanVar> dloss;
};

// Evaluate the predictor against a snapshot weight matrix without copying it.
double eval_with_weights(const PredictorSpec& proto, const Matrix& w,
                         std::span<const double> x, std::vector<double>& z) {
  const std::size_t m = proto.m, d = proto.d;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = w.data() + i * d;
    long double s = 0.0L;
    for (std::size_t j = 0; j < d; ++j) s += static_cast<long double>(row[j]) * x[j];
    z[i] = static_cast<double>(s);
  }
  if (proto.arch == models::ArchKind::Generic) return proto.generic->h(z);
  long double out = 0.0L;
  for (std::size_t i = 0; i < m; ++i) out += proto.activation.value(z[i]);
  return static_cast<double>(out);
}

SnapshotStats crn_loss_pass(const SGDConfig& cfg, const PredictorSpec& proto,
                            const std::vector<Matrix>& snapshots,
                            const TargetSpec& target, const InputDistribution& dist) {
  SnapshotStats stats;
  const std::size_t ns = snapshots.size();
  stats.loss.resize(ns);
  stats.dloss.resize(ns);
  if (cfg.mc_samples <= 0 || ns == 0) return stats;

  rng::Stream stream(cfg.seed, rng::kStreamLoss);
  std::vector<double> x(dist.d), z(proto.m);
  for (std::int64_t s = 0; s < cfg.mc_samples; ++s) {
    models::sample_input(dist, stream, x);
    if (cfg.input_scale != 1.0)
      for (double& xi : x) xi *= cfg.input_scale;
    const double fstar = models::eval_target(target, x);
    double loss0 = 0.0;
    for (std::size_t k = 0; k < ns; ++k) {
      const double loss = -eval_with_weights(proto, snapshots[k], x, z) * fstar;
      if (k == 0) loss0 = loss;
      stats.loss[k].add(loss);
      stats.dloss[k].add(loss - loss0);
    }
  }
  return stats;
}

}  // namespace

TrajectoryResult run_trajectory(const SGDConfig& cfg, PredictorSpec pred,
                                const TargetSpec& target,
                                const InputDistribution& dist) {
  if (cfg.eta < 0.0) fail(ErrorCode::InvalidArgument, "eta must be >= 0");
  if (cfg.record_every < 1) fail(ErrorCode::InvalidArgument, "record_every >= 1");
  if (pred.d != dist.d || target.d() != dist.d)
    fail(ErrorCode::DimensionMismatch, "trajectory: inconsistent d");

  const std::vector<std::int64_t> schedule = record_steps(cfg);
  const Matrix u_basis = linalg::row_space_basis(target.U, linalg::kDefaultRankTol);
  const double g1 = activation_g1(pred.activation);

  std::vector<Matrix> snapshots;
  std::vector<std::int64_t> snap_t;
  snapshots.reserve(schedule.size());

  TrajectoryResult result;
  std::optional<std::int64_t> escape_t;

  rng::Stream sgd_stream(cfg.seed, rng::kStreamSgd);
  std::vector<double> x(dist.d);
  std::size_t next_record = 0;

  auto take_record = [&](std::int64_t t) -> double {
    snapshots.push_back(pred.W);
    snap_t.push_back(t);
    // Alignment via orthonormal row bases; rho = s1(B_w B_u^T).
    double rho = 0.0;
    if (u_basis.rows() > 0) {
      Matrix w_basis = linalg::row_space_basis(pred.W, linalg::kDefaultRankTol);
      if (w_basis.rows() > 0) {
        Matrix prod = linalg::matmul_bt(w_basis, u_basis);
        rho = std::clamp(linalg::svd(prod).singular_values[0], 0.0, 1.0);
      }
    }
    return rho;
  };

  std::vector<double> rho_at_snap;
  rho_at_snap.push_back(take_record(0));
  next_record = 1;
  if (cfg.stop_rho && rho_at_snap.back() >= *cfg.stop_rho) escape_t = 0;

  for (std::int64_t t = 1; t <= cfg.T && !escape_t; ++t) {
    models::sample_input(dist, sgd_stream, x);
    if (cfg.input_scale != 1.0)
      for (double& xi : x) xi *= cfg.input_scale;
    try {
      sgd_step(pred, target, x, cfg.eta, cfg.clip_G);
    } catch (const Error& e) {
      fail(ErrorCode::NonFinite,
           "step " + std::to_string(t) + ": " + e.what());
    }
    if (next_record < schedule.size() && schedule[next_record] == t) {
      rho_at_snap.push_back(take_record(t));
      ++next_record;
      if (cfg.stop_rho && rho_at_snap.back() >= *cfg.stop_rho) escape_t = t;
    }
  }
  result.escape_t = escape_t;
  result.final_W = pred.W;

  // Instrumentation against the snapshots; the loss pass shares one sample
  // stream across all records (common random numbers).
  SnapshotStats loss_stats = crn_loss_pass(cfg, pred, snapshots, target, dist);

  const std::size_t ns = snapshots.size();
  result.records.resize(ns);
  double min_eig_running = std::numeric_limits<double>::infinity();
  PredictorSpec scratch = pred;
  for (std::size_t k = 0; k < ns; ++k) {
    TrajectoryRecord& rec = result.records[k];
    rec.t = snap_t[k];
    rec.rho = rho_at_snap[k];
    scratch.W = snapshots[k];
    rec.w_fro = scratch.W.frobenius_norm();
    linalg::SvdResult sv = linalg::svd(scratch.W);
    rec.s_max = sv.singular_values.front();
    rec.s_min = sv.singular_values.back();
    if (cfg.mc_samples > 0) {
      rec.loss_hat = loss_stats.loss[k].mean();
      rec.loss_se = loss_stats.loss[k].se();
      rec.dloss_hat = loss_stats.dloss[k].mean();
      rec.dloss_se = loss_stats.dloss[k].se();
    } else {
      rec.loss_hat = rec.loss_se = rec.dloss_hat = rec.dloss_se =
          std::numeric_limits<double>::quiet_NaN();
    }
    if (cfg.grad_samples > 0) {
      McEstimate g = estimate_population_gradient_norm(
          scratch, target, dist, cfg.grad_samples,
          rng::Stream(cfg.seed, rng::kStreamGrad));
      rec.grad_pop_hat = g.mean;
      rec.grad_pop_se = g.se;
    } else {
      rec.grad_pop_hat = rec.grad_pop_se = std::numeric_limits<double>::quiet_NaN();
    }
    if (cfg.kappa_samples > 0) {
      KappaSample ks = estimate_kappa(scratch, target, dist, cfg.kappa_samples,
                                      cfg.kappa_G,
                                      rng::Stream(cfg.seed, rng::kStreamKappa));
      min_eig_running = std::min(min_eig_running, ks.lambda_min);
      rec.kappa_hat = ks.kappa;
      rec.kappa_se_rel = ks.rel_se;
      rec.lambda_min = ks.lambda_min;
    } else {
      rec.kappa_hat = rec.kappa_se_rel = rec.lambda_min =
          std::numeric_limits<double>::quiet_NaN();
    }
    rec.psi_at_rho = psi_for_target(target, g1, static_cast<int>(pred.m), rec.rho);
    rec.ceiling_thm1 = theorem1_rho_ceiling(
        cfg.thm1_C, cfg.thm1_kappa_bar, static_cast<std::int64_t>(pred.m),
        static_cast<std::int64_t>(target.p()), std::max<std::int64_t>(cfg.T, 1),
        static_cast<std::int64_t>(pred.d), cfg.delta);
  }
  if (cfg.kappa_samples > 0) {
    result.kappa.G_used = cfg.kappa_G;
    result.kappa.min_eig_running = min_eig_running;
    result.kappa.kappa_hat = cfg.kappa_G * cfg.kappa_G / min_eig_running;
  }
  return result;
}

McEstimate estimate_population_loss(const PredictorSpec& pred,
                                    const TargetSpec& target,
                                    const InputDistribution& dist, std::int64_t n,
                                    rng::Stream stream) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "need n >= 2");
  MeanVar acc;
  std::vector<double> x(dist.d);
  for (std::int64_t s = 0; s < n; ++s) {
    models::sample_input(dist, stream, x);
    acc.add(-models::eval_predictor(pred, x) * models::eval_target(target, x));
  }
  return {acc.mean(), acc.se()};
}

McEstimate estimate_population_gradient_norm(const PredictorSpec& pred,
                                             const TargetSpec& target,
                                             const InputDistribution& dist,
                                             std::int64_t n, rng::Stream stream) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "need n >= 2");
  const std::size_t m = pred.m, d = pred.d;
  // grad_W l = -f*(x) * pre_grad * x^T; accumulate the mean matrix plus
  // per-block sums for a delete-one-block jackknife of the norm.
  std::vector<long double> total(m * d, 0.0L);
  std::vector<std::vector<long double>> blocks(
      kJackknifeBlocks, std::vector<long double>(m * d, 0.0L));
  std::vector<std::int64_t> block_n(kJackknifeBlocks, 0);
  std::vector<double> x(dist.d), pre(m);

  const std::int64_t per_block = (n + kJackknifeBlocks - 1) / kJackknifeBlocks;
  for (std::int64_t s = 0; s < n; ++s) {
    models::sample_input(dist, stream, x);
    models::predictor_pre_gradient(pred, x, pre);
    const double fstar = models::eval_target(target, x);
    const int b = static_cast<int>(std::min<std::int64_t>(s / per_block,
                                                          kJackknifeBlocks - 1));
    ++block_n[b];
    for (std::size_t i = 0; i < m; ++i) {
      const double c = -fstar * pre[i];
      if (c == 0.0) continue;
      long double* trow = total.data() + i * d;
      long double* brow = blocks[b].data() + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double g = c * x[j];
        trow[j] += g;
        brow[j] += g;
      }
    }
  }

  auto norm_of = [&](const std::vector<long double>& v, std::int64_t count) {
    long double s2 = 0.0L;
    for (long double e : v) {
      const long double mean = e / count;
      s2 += mean * mean;
    }
    return std::sqrt(static_cast<double>(s2));
  };

  McEstimate est;
  est.mean = norm_of(total, n);
  std::vector<double> reps;
  reps.reserve(kJackknifeBlocks);
  std::vector<long double> rest(m * d);
  for (int b = 0; b < kJackknifeBlocks; ++b) {
    if (block_n[b] == 0) continue;
    for (std::size_t i = 0; i < m * d; ++i) rest[i] = total[i] - blocks[b][i];
    reps.push_back(norm_of(rest, n - block_n[b]));
  }
  est.se = jackknife_se(reps);
  return est;
}

KappaSample estimate_kappa(const PredictorSpec& pred, const TargetSpec& target,
                           const InputDistribution& dist, std::int64_t n, double G,
                           rng::Stream stream) {
  const std::size_t m = pred.m;
  if (n < static_cast<std::int64_t>(m) * 100)
    fail(ErrorCode::InvalidArgument, "need n >= 100 m for kappa");
  if (G <= 0.0) fail(ErrorCode::InvalidArgument, "G must be positive");

  // Second-moment matrix M = E[g g^T] of g = grad_{Wx} l = -f*(x) pre_grad.
  std::vector<long double> total(m * m, 0.0L);
  std::vector<std::vector<long double>> blocks(
      kJackknifeBlocks, std::vector<long double>(m * m, 0.0L));
  std::vector<std::int64_t> block_n(kJackknifeBlocks, 0);
  std::vector<double> x(dist.d), pre(m), g(m);
  const std::int64_t per_block = (n + kJackknifeBlocks - 1) / kJackknifeBlocks;

  for (std::int64_t s = 0; s < n; ++s) {
    models::sample_input(dist, stream, x);
    models::predictor_pre_gradient(pred, x, pre);
    const double fstar = models::eval_target(target, x);
    for (std::size_t i = 0; i < m; ++i) g[i] = -fstar * pre[i];
    const int b = static_cast<int>(std::min<std::int64_t>(s / per_block,
                                                          kJackknifeBlocks - 1));
    ++block_n[b];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) {
        const long double v = static_cast<long double>(g[i]) * g[j];
        total[i * m + j] += v;
        blocks[b][i * m + j] += v;
      }
  }

  auto lambda_min_of = [&](const std::vector<long double>& v, std::int64_t count) {
    Matrix mm(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j)
        mm(i, j) = mm(j, i) = static_cast<double>(v[i * m + j] / count);
    return linalg::sym_eig(mm).values.front();
  };

  const double lmin = lambda_min_of(total, n);
  double trace = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    trace += static_cast<double>(total[i * m + i] / n);
  if (lmin < 1e-12 * trace / static_cast<double>(m))
    fail(ErrorCode::DegenerateGradient,
         "lambda_min " + std::to_string(lmin) + " below 1e-12 * trace/m");

  std::vector<double> reps;
  std::vector<long double> rest(m * m);
  for (int b = 0; b < kJackknifeBlocks; ++b) {
    if (block_n[b] == 0) continue;
    for (std::size_t i = 0; i < m * m; ++i) rest[i] = total[i] - blocks[b][i];
    reps.push_back(lambda_min_of(rest, n - block_n[b]));
  }

  KappaSample ks;
  ks.lambda_min = lmin;
  ks.lambda_min_se = jackknife_se(reps);
  ks.kappa = G * G / lmin;
  ks.rel_se = ks.lambda_min_se / lmin;
  return ks;
}

double theorem1_rho_ceiling(double C, double kappa_bar, std::int64_t m,
                            std::int64_t p, std::int64_t T, std::int64_t d,
                            double delta) {
  if (C <= 0.0 || kappa_bar <= 0.0 || m < 1 || p < 1 || T < 1 || d < 1)
    fail(ErrorCode::InvalidArgument, "theorem1_rho_ceiling arguments");
  if (delta <= 0.0 || delta >= 1.0) fail(ErrorCode::InvalidArgument, "delta in (0,1)");
  const double logterm = std::log(static_cast<double>(T) * static_cast<double>(d) *
                                  static_cast<double>(p) / delta);
  return C * std::sqrt(kappa_bar * static_cast<double>(m) * static_cast<double>(p) *
                       logterm / static_cast<double>(d));
}

std::int64_t sample_budget_k1(std::int64_t d, std::int64_t p, double epsilon) {
  if (d < 1 || p < 1) fail(ErrorCode::InvalidArgument, "d, p must be >= 1");
  if (epsilon <= 0.0 || epsilon >= 0.5)
    fail(ErrorCode::InvalidArgument, "epsilon in (0, 1/2)");
  return static_cast<std::int64_t>(std::floor(
      static_cast<double>(d) * epsilon * epsilon / static_cast<double>(p)));
}

double psi_for_target(const TargetSpec& target, double G1, int m, double rho) {
  if (!std::isfinite(G1)) return std::numeric_limits<double>::quiet_NaN();
  hermite::BoundConstants c = target.consts;
  c.G1 = G1;
  if (target.kind == models::TargetKind::Periodic)
    return hermite::psi_periodic(c, target.norm_u, m, rho);
  return hermite::psi_info_exponent(c, m, rho);
}

}  // namespace milab::sgd
