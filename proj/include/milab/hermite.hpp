#pragma once

#include <functional>
#include <vector>

#include "milab/common.hpp"

namespace milab::hermite {

/// Highest degree the double-precision three-term recurrence supports.
inline constexpr int kMaxDegree = 60;

/// Normalized probabilist's Hermite polynomial H_k(x), an orthonormal basis
/// of L2 under the standard Gaussian:
///   sqrt(k+1) H_{k+1}(x) = x H_k(x) - sqrt(k) H_{k-1}(x).
double hermite_eval(int k, double x);

/// Gauss-Hermite rule for the standard Gaussian weight: E[f] ~ sum w_i f(x_i),
/// sum of weights = 1. Nodes ascending, built once per node count via a
/// Golub-Welsch eigen decomposition of the Jacobi matrix.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureRule& gauss_hermite_rule(int nodes);

/// Truncated 1-D Hermite coefficient sequence b_0..b_kmax of x -> sigma(s x),
/// together with the ridge scale s at which it was taken.
struct HermiteSpectrum {
  std::vector<double> coeffs;
  double scale = 1.0;

  int kmax() const { return static_cast<int>(coeffs.size()) - 1; }
  double sum_sq() const;
};

inline constexpr int kDefaultKmax = 40;
int default_node_count(int kmax);

/// b_k = E_{x~N(0,1)}[sigma(s x) H_k(x)] by Gauss-Hermite quadrature.
/// nodes = 0 picks max(2*kmax + 16, 64).
HermiteSpectrum coeffs_by_quadrature(const std::function<double(double)>& sigma,
                                     double s, int kmax, int nodes = 0);

/// Closed-form spectrum of x -> sin(norm_u * x):
///   b_k = (-1)^((k-1)/2) * norm_u^k / sqrt(k!) * exp(-norm_u^2/2) for odd k,
///   0 for even k. Squared coefficients are norm_u^(2k)/k! * exp(-norm_u^2).
HermiteSpectrum sin_coeffs_closed_form(double norm_u, int kmax);

inline constexpr double kDefaultInfoExponentTol = 1e-7;

/// Smallest k >= 1 with |b_k| > tol; the information exponent of the ridge
/// function the spectrum came from.
int information_exponent(const HermiteSpectrum& spec,
                         double tol = kDefaultInfoExponentTol);

/// Spectrum of the derivative along the ridge, d/dx sigma(s x) = s sigma'(s x):
/// d_k = sqrt(k+1) * b_{k+1}. One entry shorter than the input.
std::vector<double> derivative_shift(const HermiteSpectrum& spec);

/// Regularity constants carried by targets and predictors.
struct BoundConstants {
  double G1 = 1.0;              // sup |sigma'| / sup ||grad_{Wx} h||
  double G2 = 1.0;              // ||f*||_Linf (may be +inf for unbounded links)
  double K_sigma = 1.0;         // Assumption-4 ratio G1^2 / inf_s E[sigma'(sx)^2]
  double grad_norm_fstar = 1.0; // ||grad f*||_L2
  int k_star = 1;
};

/// Correlation ceiling |E[f_W g_U]| <= f_l2 * sqrt(sum_k b_k^2 rho^(2k)).
double correlation_ceiling(double f_l2, const HermiteSpectrum& target_spec,
                           double rho);

/// Population-gradient ceiling for sin targets, Frobenius over m neurons:
///   sqrt(m) * G1 * (1 + norm_u) * exp(-norm_u^2 (1 - rho^2) / 2).
double psi_periodic(const BoundConstants& consts, double norm_u, int m, double rho);

/// Population-gradient ceiling from the information exponent:
///   G1 * ||grad f*|| * (sqrt(m) rho + 1) * rho^(k*-1), with 0^0 := 1 so the
///   k* = 1 case stays finite at rho = 0.
double psi_info_exponent(const BoundConstants& consts, int m, double rho);

/// |E[f_theta f*]| <= f_l2 * g_l2 * rho^k*.
double loss_ceiling_info_exponent(double f_l2, double g_l2, int k_star, double rho);

/// E[f^2 g^2] >= f_l2^2 g_l2^2 - 4 G1^2 G2^2 rho, clamped at zero.
double variance_floor(double f_l2, double g_l2, const BoundConstants& consts,
                      double rho);

}  // namespace milab::hermite
