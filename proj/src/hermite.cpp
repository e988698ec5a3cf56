#include "milab/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "milab/linalg.hpp"

namespace milab::hermite {

double hermite_eval(int k, double x) {
  if (k < 0) fail(ErrorCode::InvalidArgument, "negative Hermite degree");
  if (k > kMaxDegree) fail(ErrorCode::DegreeTooLarge, "degree above 60");
  double hm = 0.0, h = 1.0;  // H_{-1}, H_0
  for (int j = 0; j < k; ++j) {
    const double hn = (x * h - std::sqrt(static_cast<double>(j)) * hm) /
                      std::sqrt(static_cast<double>(j + 1));
    hm = h;
    h = hn;
  }
  return h;
}

const QuadratureRule& gauss_hermite_rule(int nodes) {
  if (nodes < 1) fail(ErrorCode::InvalidArgument, "node count < 1");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(nodes);
  if (it != cache.end()) return it->second;

  // Jacobi matrix for the probabilist's weight: zero diagonal, offdiag sqrt(i).
  std::vector<double> diag(nodes, 0.0), off(nodes - 1);
  for (int i = 1; i < nodes; ++i) off[i - 1] = std::sqrt(static_cast<double>(i));
  linalg::TridiagEigResult eig = linalg::tridiag_eig(std::move(diag), std::move(off));

  QuadratureRule rule;
  rule.nodes = eig.values;
  rule.weights.resize(nodes);
  for (int i = 0; i < nodes; ++i)
    rule.weights[i] = eig.first_components[i] * eig.first_components[i];
  return cache.emplace(nodes, std::move(rule)).first->second;
}

double HermiteSpectrum::sum_sq() const {
  long double s = 0.0L;
  for (double b : coeffs) s += static_cast<long double>(b) * b;
  return static_cast<double>(s);
}

int default_node_count(int kmax) { return std::max(2 * kmax + 16, 64); }

HermiteSpectrum coeffs_by_quadrature(const std::function<double(double)>& sigma,
                                     double s, int kmax, int nodes) {
  if (s <= 0.0) fail(ErrorCode::InvalidArgument, "scale must be positive");
  if (kmax < 0 || kmax > kMaxDegree) fail(ErrorCode::DegreeTooLarge, "kmax");
  if (nodes == 0) nodes = default_node_count(kmax);
  if (nodes < 2 * kmax + 16)
    fail(ErrorCode::InvalidArgument, "need nodes >= 2*kmax + 16");
  const QuadratureRule& rule = gauss_hermite_rule(nodes);

  std::vector<double> fx(nodes);
  for (int i = 0; i < nodes; ++i) {
    fx[i] = sigma(s * rule.nodes[i]);
    if (!std::isfinite(fx[i]))
      fail(ErrorCode::NonFinite, "sigma returned NaN/Inf on a quadrature node");
  }

  HermiteSpectrum spec;
  spec.scale = s;
  spec.coeffs.assign(kmax + 1, 0.0);
  // Run the recurrence across all nodes at once, one degree per pass.
  std::vector<double> hm(nodes, 0.0), h(nodes, 1.0);
  for (int k = 0; k <= kmax; ++k) {
    long double acc = 0.0L;
    for (int i = 0; i < nodes; ++i)
      acc += static_cast<long double>(rule.weights[i]) * fx[i] * h[i];
    spec.coeffs[k] = static_cast<double>(acc);
    if (k == kmax) break;
    const double a = std::sqrt(static_cast<double>(k));
    const double b = std::sqrt(static_cast<double>(k + 1));
    for (int i = 0; i < nodes; ++i) {
      const double hn = (rule.nodes[i] * h[i] - a * hm[i]) / b;
      hm[i] = h[i];
      h[i] = hn;
    }
  }
  return spec;
}

HermiteSpectrum sin_coeffs_closed_form(double norm_u, int kmax) {
  if (norm_u <= 0.0) fail(ErrorCode::InvalidArgument, "norm_u must be positive");
  if (kmax < 0) fail(ErrorCode::InvalidArgument, "kmax negative");
  HermiteSpectrum spec;
  spec.scale = norm_u;
  spec.coeffs.assign(kmax + 1, 0.0);
  for (int k = 1; k <= kmax; k += 2) {
    const double mag = std::exp(k * std::log(norm_u) - 0.5 * std::lgamma(k + 1.0) -
                                0.5 * norm_u * norm_u);
    spec.coeffs[k] = (((k - 1) / 2) % 2 == 0) ? mag : -mag;
  }
  return spec;
}

int information_exponent(const HermiteSpectrum& spec, double tol) {
  if (spec.kmax() < 1) fail(ErrorCode::InvalidArgument, "spectrum needs kmax >= 1");
  for (int k = 1; k <= spec.kmax(); ++k)
    if (std::abs(spec.coeffs[k]) > tol) return k;
  fail(ErrorCode::AllCoefficientsVanish,
       "no coefficient above tol up to kmax=" + std::to_string(spec.kmax()));
}

std::vector<double> derivative_shift(const HermiteSpectrum& spec) {
  std::vector<double> d(spec.coeffs.size() > 0 ? spec.coeffs.size() - 1 : 0);
  for (std::size_t k = 0; k + 1 < spec.coeffs.size(); ++k)
    d[k] = std::sqrt(static_cast<double>(k + 1)) * spec.coeffs[k + 1];
  return d;
}

double correlation_ceiling(double f_l2, const HermiteSpectrum& target_spec,
                           double rho) {
  if (rho < 0.0 || rho > 1.0) fail(ErrorCode::InvalidArgument, "rho outside [0,1]");
  if (f_l2 < 0.0) fail(ErrorCode::InvalidArgument, "f_l2 negative");
  long double s = 0.0L;
  double rpow = 1.0;  // rho^(2k), with rho^0 = 1 including rho = 0
  for (std::size_t k = 0; k < target_spec.coeffs.size(); ++k) {
    const double b = target_spec.coeffs[k];
    s += static_cast<long double>(b) * b * rpow;
    rpow *= rho * rho;
  }
  return f_l2 * std::sqrt(static_cast<double>(s));
}

double psi_periodic(const BoundConstants& consts, double norm_u, int m, double rho) {
  if (rho < 0.0 || rho > 1.0) fail(ErrorCode::InvalidArgument, "rho outside [0,1]");
  if (norm_u <= 0.0) fail(ErrorCode::InvalidArgument, "norm_u must be positive");
  return std::sqrt(static_cast<double>(m)) * consts.G1 * (1.0 + norm_u) *
         std::exp(-0.5 * norm_u * norm_u * (1.0 - rho * rho));
}

double psi_info_exponent(const BoundConstants& consts, int m, double rho) {
  if (rho < 0.0 || rho > 1.0) fail(ErrorCode::InvalidArgument, "rho outside [0,1]");
  if (consts.k_star < 1) fail(ErrorCode::InvalidArgument, "k_star must be >= 1");
  double rpow = 1.0;  // rho^(k*-1) with the 0^0 := 1 convention
  for (int i = 0; i < consts.k_star - 1; ++i) rpow *= rho;
  return consts.G1 * consts.grad_norm_fstar *
         (std::sqrt(static_cast<double>(m)) * rho + 1.0) * rpow;
}

double loss_ceiling_info_exponent(double f_l2, double g_l2, int k_star, double rho) {
  if (rho < 0.0 || rho > 1.0) fail(ErrorCode::InvalidArgument, "rho outside [0,1]");
  if (k_star < 1) fail(ErrorCode::InvalidArgument, "k_star must be >= 1");
  double rpow = 1.0;
  for (int i = 0; i < k_star; ++i) rpow *= rho;
  return f_l2 * g_l2 * rpow;
}

double variance_floor(double f_l2, double g_l2, const BoundConstants& consts,
                      double rho) {
  if (rho < 0.0 || rho > 1.0) fail(ErrorCode::InvalidArgument, "rho outside [0,1]");
  const double raw = f_l2 * f_l2 * g_l2 * g_l2 -
                     4.0 * consts.G1 * consts.G1 * consts.G2 * consts.G2 * rho;
  return std::max(0.0, raw);
}

}  // namespace milab::hermite
