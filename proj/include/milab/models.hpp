#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "milab/hermite.hpp"
#include "milab/linalg.hpp"
#include "milab/rng.hpp"

namespace milab::models {

// ---------------------------------------------------------------------------
// Input distributions
// ---------------------------------------------------------------------------

enum class DistKind { StandardGaussian, Hypercube, ScaledSphere };

DistKind dist_kind_from_string(const std::string& s);
std::string to_string(DistKind k);

/// Isotropic input law with E[x] = 0 and E[||x||^2] = d (alpha_2 = 1 for all
/// three kinds).
struct InputDistribution {
  DistKind kind = DistKind::StandardGaussian;
  std::size_t d = 0;
};

/// Draw one input vector. Hypercube entries are +/-1; sphere samples have
/// ||x|| = sqrt(d) exactly up to roundoff. Consumption of the stream is a
/// fixed function of (kind, d), so samples stay addressable.
void sample_input(const InputDistribution& dist, rng::Stream& stream,
                  std::span<double> out);
std::vector<double> sample_input(const InputDistribution& dist, rng::Stream& stream);

/// m x d matrix with i.i.d. N(0, 1/d) entries.
linalg::Matrix initialize_weights(std::size_t m, std::size_t d, rng::Stream& stream);

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class ActKind { Relu, LeakyRelu, Softplus, Gelu, Sigmoid, Tanh, Sin, Hermite };

ActKind act_kind_from_string(const std::string& s);
std::string to_string(ActKind k);

/// Scalar activation with a fixed subgradient convention at kinks:
/// sigma'(0) = 0 for ReLU and alpha for leaky ReLU (measure zero under all
/// three input laws). The Hermite kind exists for the escape experiments and
/// has an unbounded derivative; certify_activation reports it as violating
/// Assumption 4 rather than pretending otherwise.
struct Activation {
  ActKind kind = ActKind::Relu;
  double alpha = 0.0;  // leaky-ReLU slope, or Hermite degree for kind Hermite
  int degree = 0;

  double value(double x) const;
  double deriv(double x) const;

  static Activation relu() { return {ActKind::Relu}; }
  static Activation leaky_relu(double a) { return {ActKind::LeakyRelu, a}; }
  static Activation softplus() { return {ActKind::Softplus}; }
  static Activation gelu() { return {ActKind::Gelu}; }
  static Activation sigmoid() { return {ActKind::Sigmoid}; }
  static Activation tanh() { return {ActKind::Tanh}; }
  static Activation sin() { return {ActKind::Sin}; }
  static Activation hermite(int k) { return {ActKind::Hermite, 0.0, k}; }
};

/// Grid certification of Assumption 4.
struct ActivationCert {
  double G1 = 0.0;       // sup |sigma'| over a dense x-grid
  double K_sigma = 0.0;  // G1^2 / min_s E[sigma'(s x)^2] over the s-grid
  bool decaying = false; // E[sigma'(s x)^2] still heading toward 0 at the grid edge
};

std::vector<double> default_scale_grid();  // 64 log-spaced points in [0.05, 20]

/// Estimate (G1, K_sigma) on a scale grid; throws AssumptionViolated when the
/// estimated K_sigma exceeds 1e6 (e.g. Hermite activations).
ActivationCert certify_activation(const Activation& act,
                                  std::span<const double> s_grid = {});

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

enum class LinkKind { Identity, Hermite, Sin, Tanh, GaussSq };

LinkKind link_kind_from_string(const std::string& s);
std::string to_string(LinkKind k);

/// Scalar link function phi for single-index and product targets.
/// GaussSq is z^2 exp(-z^2), a link whose information exponent is 4.
struct Link {
  LinkKind kind = LinkKind::Identity;
  int degree = 1;  // Hermite degree

  double value(double z) const;

  static Link identity() { return {LinkKind::Identity}; }
  static Link hermite(int k) { return {LinkKind::Hermite, k}; }
  static Link sin() { return {LinkKind::Sin}; }
  static Link tanh() { return {LinkKind::Tanh}; }
  static Link gauss_sq() { return {LinkKind::GaussSq}; }
};

enum class TargetKind { SingleIndex, Periodic, Product };

/// f*(x) = phi(Ux). SingleIndex: p = 1, f* = phi(u.x); Periodic: f* =
/// sin(u.x) with ||u|| recorded; Product: f* = prod_i phi(u_i.x) over
/// orthonormal rows.
struct TargetSpec {
  TargetKind kind = TargetKind::SingleIndex;
  linalg::Matrix U;  // p x d
  Link link;
  double norm_u = 1.0;  // periodic targets
  hermite::BoundConstants consts;

  std::size_t p() const { return U.rows(); }
  std::size_t d() const { return U.cols(); }
};

TargetSpec make_single_index(linalg::Matrix u_row, Link phi);
TargetSpec make_periodic(linalg::Matrix u_row);
/// Product target over the first p rows of a Haar-random orthonormal frame.
TargetSpec make_product(std::size_t p, std::size_t d, Link phi, rng::Stream& stream);

double eval_target(const TargetSpec& t, std::span<const double> x);

/// ||f*||_L2^2 where a closed form exists (periodic, Hermite links, product
/// via 1-D quadrature); used by kappa bounds and loss ceilings.
double target_l2_sq(const TargetSpec& t);

// ---------------------------------------------------------------------------
// Predictors
// ---------------------------------------------------------------------------

enum class ArchKind { TwoLayerSum, Generic };

/// Generic architecture h(Wx; theta_bar) supplied as evaluators, with a
/// caller-certified bound on ||grad_{Wx} h||.
struct GenericArch {
  std::function<double(std::span<const double>)> h;
  std::function<void(std::span<const double>, std::span<double>)> grad_h;
  double g1_bound = 1.0;
};

/// f_theta(x) = sum_i sigma(w_i . x) for the two-layer architecture
/// (second-layer weights fixed at 1), or h(Wx) for the generic one.
/// W is the mutable state SGD updates; one trajectory owns it exclusively.
struct PredictorSpec {
  std::size_t m = 1, d = 0;
  Activation activation;
  linalg::Matrix W;  // m x d
  ArchKind arch = ArchKind::TwoLayerSum;
  std::optional<GenericArch> generic;
};

PredictorSpec make_two_layer(std::size_t m, std::size_t d, Activation act,
                             linalg::Matrix w0);

double eval_predictor(const PredictorSpec& p, std::span<const double> x);

/// pre_grad_i = sigma'(w_i . x) (or grad_{Wx} h); the full parameter gradient
/// is the rank-one outer product pre_grad * x^T and is never materialized.
void predictor_pre_gradient(const PredictorSpec& p, std::span<const double> x,
                            std::span<double> pre_grad);

/// Dense m x d gradient of f_theta at x, for finite-difference checks.
linalg::Matrix predictor_gradient(const PredictorSpec& p, std::span<const double> x);

}  // namespace milab::models
