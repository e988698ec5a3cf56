#include "milab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace milab::models {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

DistKind dist_kind_from_string(const std::string& s) {
  if (s == "standard_gaussian") return DistKind::StandardGaussian;
  if (s == "hypercube") return DistKind::Hypercube;
  if (s == "scaled_sphere") return DistKind::ScaledSphere;
  fail(ErrorCode::ValidationError, "unknown distribution kind '" + s + "'");
}

std::string to_string(DistKind k) {
  switch (k) {
    case DistKind::StandardGaussian: return "standard_gaussian";
    case DistKind::Hypercube: return "hypercube";
    case DistKind::ScaledSphere: return "scaled_sphere";
  }
  return "?";
}

void sample_input(const InputDistribution& dist, rng::Stream& stream,
                  std::span<double> out) {
  if (out.size() != dist.d) fail(ErrorCode::DimensionMismatch, "sample_input buffer");
  switch (dist.kind) {
    case DistKind::StandardGaussian:
      for (std::size_t i = 0; i < dist.d; ++i) out[i] = stream.next_gaussian();
      break;
    case DistKind::Hypercube:
      for (std::size_t i = 0; i < dist.d; ++i) out[i] = stream.next_sign();
      break;
    case DistKind::ScaledSphere: {
      long double nrm2 = 0.0L;
      for (std::size_t i = 0; i < dist.d; ++i) {
        out[i] = stream.next_gaussian();
        nrm2 += static_cast<long double>(out[i]) * out[i];
      }
      const double nrm = std::sqrt(static_cast<double>(nrm2));
      if (nrm == 0.0) {
        // Probability-zero draw; keep consumption fixed and emit a pole.
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = std::sqrt(static_cast<double>(dist.d));
      } else {
        const double c = std::sqrt(static_cast<double>(dist.d)) / nrm;
        for (std::size_t i = 0; i < dist.d; ++i) out[i] *= c;
      }
      break;
    }
  }
}

std::vector<double> sample_input(const InputDistribution& dist, rng::Stream& stream) {
  std::vector<double> x(dist.d);
  sample_input(dist, stream, x);
  return x;
}

linalg::Matrix initialize_weights(std::size_t m, std::size_t d, rng::Stream& stream) {
  if (m < 1 || d < 1) fail(ErrorCode::InvalidArgument, "initialize_weights shape");
  linalg::Matrix w(m, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) w(i, j) = scale * stream.next_gaussian();
  return w;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

ActKind act_kind_from_string(const std::string& s) {
  if (s == "relu") return ActKind::Relu;
  if (s == "leaky_relu") return ActKind::LeakyRelu;
  if (s == "softplus") return ActKind::Softplus;
  if (s == "gelu") return ActKind::Gelu;
  if (s == "sigmoid") return ActKind::Sigmoid;
  if (s == "tanh") return ActKind::Tanh;
  if (s == "sin") return ActKind::Sin;
  if (s == "hermite") return ActKind::Hermite;
  fail(ErrorCode::ValidationError, "unknown activation kind '" + s + "'");
}

std::string to_string(ActKind k) {
  switch (k) {
    case ActKind::Relu: return "relu";
    case ActKind::LeakyRelu: return "leaky_relu";
    case ActKind::Softplus: return "softplus";
    case ActKind::Gelu: return "gelu";
    case ActKind::Sigmoid: return "sigmoid";
    case ActKind::Tanh: return "tanh";
    case ActKind::Sin: return "sin";
    case ActKind::Hermite: return "hermite";
  }
  return "?";
}

namespace {
double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014327;
}
double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }
double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

double Activation::value(double x) const {
  switch (kind) {
    case ActKind::Relu: return x > 0.0 ? x : 0.0;
    case ActKind::LeakyRelu: return x > 0.0 ? x : alpha * x;
    case ActKind::Softplus:
      return x > 30.0 ? x : std::log1p(std::exp(std::min(x, 30.0)));
    case ActKind::Gelu: return x * std_normal_cdf(x);
    case ActKind::Sigmoid: return logistic(x);
    case ActKind::Tanh: return std::tanh(x);
    case ActKind::Sin: return std::sin(x);
    case ActKind::Hermite: return hermite::hermite_eval(degree, x);
  }
  return 0.0;
}

double Activation::deriv(double x) const {
  switch (kind) {
    case ActKind::Relu: return x > 0.0 ? 1.0 : 0.0;
    case ActKind::LeakyRelu: return x > 0.0 ? 1.0 : alpha;
    case ActKind::Softplus: return logistic(x);
    case ActKind::Gelu: return std_normal_cdf(x) + x * std_normal_pdf(x);
    case ActKind::Sigmoid: {
      const double g = logistic(x);
      return g * (1.0 - g);
    }
    case ActKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActKind::Sin: return std::cos(x);
    case ActKind::Hermite:
      // H_k'(x) = sqrt(k) H_{k-1}(x) in the normalized basis.
      return degree == 0 ? 0.0
                         : std::sqrt(static_cast<double>(degree)) *
                               hermite::hermite_eval(degree - 1, x);
  }
  return 0.0;
}

std::vector<double> default_scale_grid() {
  std::vector<double> grid(64);
  const double lo = std::log(0.05), hi = std::log(20.0);
  for (int i = 0; i < 64; ++i) grid[i] = std::exp(lo + (hi - lo) * i / 63.0);
  return grid;
}

ActivationCert certify_activation(const Activation& act,
                                  std::span<const double> s_grid) {
  std::vector<double> grid_store;
  if (s_grid.empty()) {
    grid_store = default_scale_grid();
    s_grid = grid_store;
  }

  ActivationCert cert;
  // Dense x-grid sup of |sigma'|; kink conventions make ReLU-type sups exact.
  for (double x = -40.0; x <= 40.0; x += 4e-4)
    cert.G1 = std::max(cert.G1, std::abs(act.deriv(x)));

  // 2048 nodes: oscillatory derivatives (sin activation at s = 20) alias on
  // coarse rules, and the node table is cached anyway.
  const hermite::QuadratureRule& rule = hermite::gauss_hermite_rule(2048);
  std::vector<double> second_moment(s_grid.size());
  double min_e = std::numeric_limits<double>::infinity();
  for (std::size_t si = 0; si < s_grid.size(); ++si) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double dv = act.deriv(s_grid[si] * rule.nodes[i]);
      acc += static_cast<long double>(rule.weights[i]) * dv * dv;
    }
    second_moment[si] = static_cast<double>(acc);
    min_e = std::min(min_e, second_moment[si]);
  }
  if (min_e <= 0.0) fail(ErrorCode::AssumptionViolated, "E[sigma'(sx)^2] hits zero");
  cert.K_sigma = cert.G1 * cert.G1 / min_e;

  // Decay heuristic: the tail is still halving at the right edge of the grid,
  // so inf over all s > 0 would keep dropping.
  const double at_edge = second_moment.back();
  const double s_half = s_grid.back() / 2.0;
  double at_half = second_moment.front();
  for (std::size_t si = 0; si < s_grid.size(); ++si)
    if (s_grid[si] <= s_half) at_half = second_moment[si];
  cert.decaying = at_edge <= 0.6 * at_half;

  if (cert.K_sigma > 1e6)
    fail(ErrorCode::AssumptionViolated,
         "estimated K_sigma " + std::to_string(cert.K_sigma) + " exceeds 1e6");
  return cert;
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

LinkKind link_kind_from_string(const std::string& s) {
  if (s == "identity") return LinkKind::Identity;
  if (s == "hermite") return LinkKind::Hermite;
  if (s == "sin") return LinkKind::Sin;
  if (s == "tanh") return LinkKind::Tanh;
  if (s == "gauss_sq") return LinkKind::GaussSq;
  fail(ErrorCode::ValidationError, "unknown link kind '" + s + "'");
}

std::string to_string(LinkKind k) {
  switch (k) {
    case LinkKind::Identity: return "identity";
    case LinkKind::Hermite: return "hermite";
    case LinkKind::Sin: return "sin";
    case LinkKind::Tanh: return "tanh";
    case LinkKind::GaussSq: return "gauss_sq";
  }
  return "?";
}

double Link::value(double z) const {
  switch (kind) {
    case LinkKind::Identity: return z;
    case LinkKind::Hermite: return hermite::hermite_eval(degree, z);
    case LinkKind::Sin: return std::sin(z);
    case LinkKind::Tanh: return std::tanh(z);
    case LinkKind::GaussSq: return z * z * std::exp(-z * z);
  }
  return 0.0;
}

namespace {

double quad_moment(const std::function<double(double)>& f) {
  const hermite::QuadratureRule& rule = hermite::gauss_hermite_rule(96);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += static_cast<long double>(rule.weights[i]) * f(rule.nodes[i]);
  return static_cast<double>(acc);
}

hermite::BoundConstants single_index_consts(const Link& link, double norm_u) {
  hermite::BoundConstants c;
  auto phi = [&](double z) { return link.value(norm_u * z); };
  hermite::HermiteSpectrum spec =
      hermite::coeffs_by_quadrature(phi, 1.0, hermite::kDefaultKmax);
  c.k_star = hermite::information_exponent(spec);
  // ||grad f*||^2 = sum_k k b_k^2 by the derivative-shift identity.
  long double g2 = 0.0L;
  for (int k = 1; k <= spec.kmax(); ++k)
    g2 += static_cast<long double>(k) * spec.coeffs[k] * spec.coeffs[k];
  c.grad_norm_fstar = std::sqrt(static_cast<double>(g2));
  switch (link.kind) {
    case LinkKind::Sin: c.G2 = 1.0; break;
    case LinkKind::Tanh: c.G2 = 1.0; break;
    case LinkKind::GaussSq: c.G2 = std::exp(-1.0); break;  // max of z^2 e^{-z^2}
    default: c.G2 = std::numeric_limits<double>::infinity(); break;
  }
  return c;
}

}  // namespace

TargetSpec make_single_index(linalg::Matrix u_row, Link phi) {
  if (u_row.rows() != 1) fail(ErrorCode::InvalidArgument, "single-index U must be 1 x d");
  TargetSpec t;
  t.kind = TargetKind::SingleIndex;
  double nrm = 0.0;
  for (std::size_t j = 0; j < u_row.cols(); ++j) nrm += u_row(0, j) * u_row(0, j);
  t.norm_u = std::sqrt(nrm);
  if (t.norm_u <= 0.0) fail(ErrorCode::InvalidArgument, "zero direction");
  t.U = std::move(u_row);
  t.link = phi;
  t.consts = single_index_consts(phi, t.norm_u);
  return t;
}

TargetSpec make_periodic(linalg::Matrix u_row) {
  TargetSpec t = make_single_index(std::move(u_row), Link::sin());
  t.kind = TargetKind::Periodic;
  t.consts.G2 = 1.0;
  t.consts.k_star = 1;
  return t;
}

TargetSpec make_product(std::size_t p, std::size_t d, Link phi, rng::Stream& stream) {
  if (p < 1 || p > d) fail(ErrorCode::InvalidArgument, "product target needs 1 <= p <= d");
  // Haar-random orthonormal rows: Gram-Schmidt on Gaussian rows.
  linalg::Matrix u(p, d);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < d; ++j) u(i, j) = stream.next_gaussian();
    for (std::size_t r = 0; r < i; ++r) {
      const double proj = dot(u.row(i), u.row(r));
      for (std::size_t j = 0; j < d; ++j) u(i, j) -= proj * u(r, j);
    }
    long double nrm2 = 0.0L;
    for (std::size_t j = 0; j < d; ++j) nrm2 += static_cast<long double>(u(i, j)) * u(i, j);
    const double nrm = std::sqrt(static_cast<double>(nrm2));
    if (nrm < 1e-8) fail(ErrorCode::Internal, "degenerate Haar frame draw");
    for (std::size_t j = 0; j < d; ++j) u(i, j) /= nrm;
  }

  TargetSpec t;
  t.kind = TargetKind::Product;
  t.U = std::move(u);
  t.link = phi;
  t.norm_u = 1.0;
  t.consts.k_star = static_cast<int>(p);
  const double m2 = quad_moment([&](double z) {
    const double v = phi.value(z);
    return v * v;
  });
  const double dm2 = quad_moment([&](double z) {
    const double h = 1e-5;
    const double dv = (phi.value(z + h) - phi.value(z - h)) / (2.0 * h);
    return dv * dv;
  });
  // Orthonormal rows make the u_i . x independent:
  // ||grad f*||^2 = p E[phi'(g)^2] E[phi(g)^2]^(p-1).
  t.consts.grad_norm_fstar =
      std::sqrt(static_cast<double>(p) * dm2 * std::pow(m2, static_cast<double>(p - 1)));
  t.consts.G2 = (phi.kind == LinkKind::Tanh || phi.kind == LinkKind::Sin) ? 1.0
                : std::numeric_limits<double>::infinity();
  return t;
}

double eval_target(const TargetSpec& t, std::span<const double> x) {
  if (x.size() != t.d()) fail(ErrorCode::DimensionMismatch, "eval_target input size");
  switch (t.kind) {
    case TargetKind::SingleIndex:
    case TargetKind::Periodic:
      return t.link.value(dot(t.U.row(0), x));
    case TargetKind::Product: {
      double prod = 1.0;
      for (std::size_t i = 0; i < t.p(); ++i) prod *= t.link.value(dot(t.U.row(i), x));
      return prod;
    }
  }
  return 0.0;
}

double target_l2_sq(const TargetSpec& t) {
  switch (t.kind) {
    case TargetKind::Periodic:
      return 0.5 * (1.0 - std::exp(-2.0 * t.norm_u * t.norm_u));
    case TargetKind::SingleIndex: {
      auto phi = [&](double z) { return t.link.value(t.norm_u * z); };
      return quad_moment([&](double z) {
        const double v = phi(z);
        return v * v;
      });
    }
    case TargetKind::Product: {
      const double m2 = quad_moment([&](double z) {
        const double v = t.link.value(z);
        return v * v;
      });
      return std::pow(m2, static_cast<double>(t.p()));
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Predictors
// ---------------------------------------------------------------------------

PredictorSpec make_two_layer(std::size_t m, std::size_t d, Activation act,
                             linalg::Matrix w0) {
  if (w0.rows() != m || w0.cols() != d)
    fail(ErrorCode::DimensionMismatch, "weight shape vs (m, d)");
  PredictorSpec p;
  p.m = m;
  p.d = d;
  p.activation = act;
  p.W = std::move(w0);
  return p;
}

double eval_predictor(const PredictorSpec& p, std::span<const double> x) {
  if (x.size() != p.d) fail(ErrorCode::DimensionMismatch, "eval_predictor input size");
  if (p.arch == ArchKind::Generic) {
    std::vector<double> z(p.m);
    for (std::size_t i = 0; i < p.m; ++i) z[i] = dot(p.W.row(i), x);
    return p.generic->h(z);
  }
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.m; ++i) s += p.activation.value(dot(p.W.row(i), x));
  return static_cast<double>(s);
}

void predictor_pre_gradient(const PredictorSpec& p, std::span<const double> x,
                            std::span<double> pre_grad) {
  if (x.size() != p.d || pre_grad.size() != p.m)
    fail(ErrorCode::DimensionMismatch, "predictor_pre_gradient sizes");
  if (p.arch == ArchKind::Generic) {
    std::vector<double> z(p.m);
    for (std::size_t i = 0; i < p.m; ++i) z[i] = dot(p.W.row(i), x);
    p.generic->grad_h(z, pre_grad);
    return;
  }
  for (std::size_t i = 0; i < p.m; ++i)
    pre_grad[i] = p.activation.deriv(dot(p.W.row(i), x));
}

linalg::Matrix predictor_gradient(const PredictorSpec& p, std::span<const double> x) {
  std::vector<double> pre(p.m);
  predictor_pre_gradient(p, x, pre);
  linalg::Matrix g(p.m, p.d);
  for (std::size_t i = 0; i < p.m; ++i)
    for (std::size_t j = 0; j < p.d; ++j) g(i, j) = pre[i] * x[j];
  return g;
}

}  // namespace milab::models
