#include "fredholm/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace fredholm {
namespace {

// Roots of P_n by Newton iteration; the rule is mirrored so odd integrands cancel exactly.
void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * static_cast<double>(j) + 1.0) * z * p1 - static_cast<double>(j) * p2) /
             (static_cast<double>(j) + 1.0);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    if (n % 2 == 1 && i == half - 1) z = 0.0;
    const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = weight;
    w[n - 1 - i] = weight;
  }
}

// Ratio p_n / p_{n-1} of orthonormal Hermite polynomials together with log|p_{n-1}|,
// evaluated with rescaling so large n does not overflow.
struct HermiteEval {
  double pn = 0.0;
  double pn1 = 0.0;
  double log_scale = 0.0;  // true value = stored value * exp(log_scale)
};

HermiteEval hermite_eval(std::size_t n, double x) {
  HermiteEval e;
  double p_prev = 0.0;
  double p = std::pow(std::numbers::pi, -0.25);
  for (std::size_t j = 0; j < n; ++j) {
    const double jd = static_cast<double>(j);
    const double next = x * std::sqrt(2.0 / (jd + 1.0)) * p - std::sqrt(jd / (jd + 1.0)) * p_prev;
    p_prev = p;
    p = next;
    const double mag = std::max(std::abs(p), std::abs(p_prev));
    if (mag > 1e150) {
      p /= mag;
      p_prev /= mag;
      e.log_scale += std::log(mag);
    }
  }
  e.pn = p;
  e.pn1 = p_prev;
  return e;
}

void gauss_hermite_folded(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double nd = static_cast<double>(n);
  const std::size_t half = (n + 1) / 2;
  // Golub-Welsch eigenvalues as starting points, polished by Newton below
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd off(static_cast<Eigen::Index>(n - 1));
  for (std::size_t k = 1; k < n; ++k) {
    off[static_cast<Eigen::Index>(k - 1)] = std::sqrt(0.5 * static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> jacobi;
  jacobi.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& guesses = jacobi.eigenvalues();
  for (std::size_t i = 0; i < half; ++i) {
    double z = guesses[static_cast<Eigen::Index>(n - 1 - i)];
    HermiteEval e;
    for (int iter = 0; iter < 10; ++iter) {
      e = hermite_eval(n, z);
      const double step = e.pn / (std::sqrt(2.0 * nd) * e.pn1);
      z -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (n % 2 == 1 && i == half - 1) z = 0.0;
    e = hermite_eval(n, z);
    // folded weight w_k e^{x_k^2} = e^{x^2} / (n p_{n-1}(x)^2) with orthonormal p
    const double log_weight =
        z * z - std::log(nd) - 2.0 * (std::log(std::abs(e.pn1)) + e.log_scale);
    const double weight = std::exp(log_weight);
    x[n - 1 - i] = z;
    x[i] = -z;
    w[n - 1 - i] = weight;
    w[i] = weight;
  }
}

void tanh_sinh(std::size_t n, double radius, std::vector<double>& x, std::vector<double>& w) {
  constexpr double t_max = 3.0;
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double h = 2.0 * t_max / static_cast<double>(n - 1);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double t = t_max - h * static_cast<double>(i);
    const double u = 0.5 * std::numbers::pi * std::sinh(t);
    const double c = std::cosh(u);
    double xi = radius * std::tanh(u);
    double wi = radius * h * 0.5 * std::numbers::pi * std::cosh(t) / (c * c);
    if (n % 2 == 1 && i == half - 1) {
      xi = 0.0;
      wi = radius * h * 0.5 * std::numbers::pi;
    }
    x[n - 1 - i] = xi;
    x[i] = -xi;
    w[n - 1 - i] = wi;
    w[i] = wi;
  }
  // The finite window [-t_max, t_max] drops O(1e-13) of the mass; rescale so constants
  // integrate exactly.
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& wi : w) wi *= 2.0 * radius / total;
}

}  // namespace

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::GaussLegendreTruncated: return "gauss-legendre-truncated";
    case RuleKind::GaussHermiteWeighted: return "gauss-hermite-weighted";
    case RuleKind::DoubleExponential: return "double-exponential";
  }
  return "unknown";
}

RuleKind parse_rule_kind(std::string_view name) {
  if (name == "gauss-legendre-truncated") return RuleKind::GaussLegendreTruncated;
  if (name == "gauss-hermite-weighted") return RuleKind::GaussHermiteWeighted;
  if (name == "double-exponential") return RuleKind::DoubleExponential;
  throw ConfigError("unsupported quadrature kind '" + std::string(name) + "'");
}

QuadratureRule build_rule(RuleKind kind, std::size_t n_nodes, double radius) {
  if (n_nodes < 2) throw ConfigError("quadrature rule needs at least 2 nodes");
  if (n_nodes > max_rule_nodes) {
    throw ConfigError("quadrature rule with " + std::to_string(n_nodes) +
                      " nodes exceeds the stable limit of " + std::to_string(max_rule_nodes));
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("quadrature radius must be positive and finite");
  }
  QuadratureRule rule;
  rule.kind = kind;
  switch (kind) {
    case RuleKind::GaussLegendreTruncated:
      gauss_legendre(n_nodes, rule.nodes, rule.weights);
      for (std::size_t i = 0; i < n_nodes; ++i) {
        rule.nodes[i] *= radius;
        rule.weights[i] *= radius;
      }
      rule.truncation_radius = radius;
      break;
    case RuleKind::GaussHermiteWeighted:
      gauss_hermite_folded(n_nodes, rule.nodes, rule.weights);
      rule.truncation_radius = rule.nodes.back();
      break;
    case RuleKind::DoubleExponential:
      tanh_sinh(n_nodes, radius, rule.nodes, rule.weights);
      rule.truncation_radius = radius;
      break;
  }
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (!(rule.weights[i] > 0.0) || !std::isfinite(rule.nodes[i]) ||
        (i > 0 && !(rule.nodes[i] > rule.nodes[i - 1]))) {
      throw DiscretizationError("node generation failed for " + std::string(to_string(kind)) +
                                " with " + std::to_string(n_nodes) + " nodes");
    }
  }
  return rule;
}

QuadratureRule refined(const QuadratureRule& rule) {
  const double radius =
      rule.kind == RuleKind::GaussHermiteWeighted ? 1.0 : rule.truncation_radius;
  return build_rule(rule.kind, std::min(2 * rule.size(), max_rule_nodes), radius);
}

Complex integrate_1d(const QuadratureRule& rule, const std::function<Complex(double)>& f) {
  std::vector<Complex> terms(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const Complex v = f(rule.nodes[k]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw EvaluationError("non-finite integrand", rule.nodes[k], 0.0);
    }
    terms[k] = rule.weights[k] * v;
  }
  Complex acc{};
  for (const Complex& t : terms) acc += t;
  return acc;
}

double l2_norm(const QuadratureRule& rule, std::span<const Complex> samples) {
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) acc += rule.weights[k] * std::norm(samples[k]);
  return std::sqrt(acc);
}

Complex inner_product(const QuadratureRule& rule, std::span<const Complex> f,
                      std::span<const Complex> g) {
  Complex acc{};
  for (std::size_t k = 0; k < rule.size(); ++k) acc += rule.weights[k] * f[k] * std::conj(g[k]);
  return acc;
}

}  // namespace fredholm
