#include "fredholm/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "fredholm/expression.hpp"

namespace fredholm {
namespace {

bool finite(Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

double param(std::span<const double> params, std::size_t i, double fallback) {
  return i < params.size() ? params[i] : fallback;
}

std::size_t integer_param(std::string_view kernel, std::span<const double> params,
                          std::size_t i, std::size_t fallback, std::size_t lo, std::size_t hi) {
  const double v = param(params, i, static_cast<double>(fallback));
  if (v != std::round(v) || v < static_cast<double>(lo) || v > static_cast<double>(hi)) {
    throw ConfigError(std::string(kernel) + ": parameter " + std::to_string(i) +
                      " must be an integer in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  return static_cast<std::size_t>(v);
}

double positive_param(std::string_view kernel, std::span<const double> params, std::size_t i,
                      double fallback) {
  const double v = param(params, i, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(kernel) + ": parameter " + std::to_string(i) +
                      " must be positive");
  }
  return v;
}

void expect_at_most(std::string_view kernel, std::span<const double> params, std::size_t n) {
  if (params.size() > n) {
    throw ConfigError(std::string(kernel) + ": expected at most " + std::to_string(n) +
                      " parameters, got " + std::to_string(params.size()));
  }
}

KernelFunction separable_gaussian(std::span<const double> params) {
  expect_at_most("separable-gaussian", params, 2);
  const std::size_t rank = integer_param("separable-gaussian", params, 0, 1, 1, 3);
  const double alpha = positive_param("separable-gaussian", params, 1, 1.0);
  KernelFunction k;
  k.eval = [rank, alpha](double s, double t) {
    const double es = std::exp(-alpha * s * s);
    const double et = std::exp(-alpha * t * t);
    double acc = 0.0;
    double ps = 1.0;
    double pt = 1.0;
    for (std::size_t j = 0; j < rank; ++j) {
      acc += ps * pt;
      ps *= s;
      pt *= t;
    }
    return Complex(acc * es * et, 0.0);
  };
  k.decay_radius = 3.0 / std::sqrt(alpha);
  k.label = "separable-gaussian(rank=" + std::to_string(rank) + ")";
  return k;
}

KernelFunction separable_rational(std::span<const double> params) {
  expect_at_most("separable-rational", params, 1);
  const double width = positive_param("separable-rational", params, 0, 1.0);
  KernelFunction k;
  k.eval = [width](double s, double t) {
    const double us = 1.0 + (s / width) * (s / width);
    const double ut = 1.0 + (t / width) * (t / width);
    const double u = us * ut;
    return Complex(1.0 / (u * u * u * u), 0.0);
  };
  k.decay_radius = 3.0 * width;
  k.label = "separable-rational";
  return k;
}

KernelFunction gaussian_product(std::span<const double> params) {
  expect_at_most("gaussian-product", params, 1);
  const double beta = param(params, 0, 0.0);
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("gaussian-product: coupling beta must be >= 0");
  }
  KernelFunction k;
  k.eval = [beta](double s, double t) {
    const double d = s - t;
    return Complex(std::exp(-s * s - t * t - beta * d * d), 0.0);
  };
  k.decay_radius = 3.0;
  k.label = beta == 0.0 ? "gaussian-product" : "gaussian-product(beta)";
  return k;
}

KernelFunction exp_decay(std::span<const double> params) {
  expect_at_most("exp-decay", params, 1);
  const double alpha = positive_param("exp-decay", params, 0, 1.0);
  KernelFunction k;
  k.eval = [alpha](double s, double t) {
    return Complex(std::exp(-alpha * (std::abs(s) + std::abs(t))), 0.0);
  };
  k.decay_radius = 7.0 / alpha;
  k.label = "exp-decay";
  return k;
}

KernelFunction finite_rank_sum(std::span<const double> params) {
  const std::size_t rank = integer_param("finite-rank-sum", params, 0, 2, 1, 8);
  if (params.size() > 1 + rank) {
    throw ConfigError("finite-rank-sum: expected at most " + std::to_string(rank) +
                      " coefficients");
  }
  if (params.size() > 1 && params.size() != 1 + rank) {
    throw ConfigError("finite-rank-sum: give either no coefficients or exactly " +
                      std::to_string(rank));
  }
  std::vector<double> mu(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    mu[i] = params.size() > 1 ? params[1 + i] : std::ldexp(1.0, -static_cast<int>(i + 1));
    if (!std::isfinite(mu[i])) throw ConfigError("finite-rank-sum: non-finite coefficient");
  }
  KernelFunction k;
  k.eval = [mu](double s, double t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      acc += mu[i] * hermite_function(i, s) * hermite_function(i, t);
    }
    return Complex(acc, 0.0);
  };
  k.decay_radius = 3.0 + std::sqrt(2.0 * static_cast<double>(rank) + 1.0);
  k.label = "finite-rank-sum(rank=" + std::to_string(rank) + ")";
  return k;
}

struct CatalogEntry {
  const char* name;
  KernelFunction (*make)(std::span<const double>);
};

constexpr CatalogEntry catalog[] = {
    {"separable-gaussian", separable_gaussian}, {"separable-rational", separable_rational},
    {"gaussian-product", gaussian_product},     {"exp-decay", exp_decay},
    {"finite-rank-sum", finite_rank_sum},
};

// (X* X)^{1/2} = V Sigma V* from the SVD of X, which avoids square roots of rounding noise.
// Returns its trace and the max diagonal entry divided by the weight.
struct RootSummary {
  double trace = 0.0;
  double diag_sup = 0.0;
};

RootSummary gram_root(const Eigen::MatrixXcd& x, const std::vector<double>& w) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw DiscretizationError("singular value decomposition failed while estimating trace bounds");
  }
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Eigen::MatrixXcd& v = svd.matrixV();
  RootSummary out;
  out.trace = sigma.sum();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    double diag = 0.0;
    for (Eigen::Index m = 0; m < sigma.size(); ++m) diag += sigma[m] * std::norm(v(i, m));
    out.diag_sup = std::max(out.diag_sup, diag / w[static_cast<std::size_t>(i)]);
  }
  return out;
}

TraceBounds trace_on_rule(const KernelPair& k, const QuadratureRule& q) {
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = std::sqrt(q.weights[static_cast<std::size_t>(i)]);
    const double xi = q.nodes[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const double wj = std::sqrt(q.weights[static_cast<std::size_t>(j)]);
      const double xj = q.nodes[static_cast<std::size_t>(j)];
      h(i, j) = wi * k.H(xi, xj) * wj;
      s(i, j) = wi * k.S(xi, xj) * wj;
    }
  }
  // A = H*H + S*S is the Gram matrix of [H; S], Atilde that of [H*; S*]
  Eigen::MatrixXcd stacked(2 * n, n);
  stacked << h, s;
  const RootSummary a = gram_root(stacked, q.weights);
  stacked << h.adjoint(), s.adjoint();
  const RootSummary at = gram_root(stacked, q.weights);
  TraceBounds b;
  b.trace_A = a.trace;
  b.trace_Atilde = at.trace;
  b.M = std::sqrt(std::max(a.diag_sup, at.diag_sup));
  return b;
}

double row_norm(const KernelPair& k, const QuadratureRule& q, Complex lambda, double s,
                bool column) {
  double acc = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Complex v = column ? eval_T(k, lambda, q.nodes[j], s) : eval_T(k, lambda, s, q.nodes[j]);
    acc += q.weights[j] * std::norm(v);
  }
  return std::sqrt(acc);
}

}  // namespace

KernelFunction zero_kernel() { return KernelFunction{}; }

KernelPair::KernelPair(KernelFunction h, KernelFunction s, std::string label)
    : h_(std::move(h)), s_(std::move(s)), label_(std::move(label)) {
  if (h_.is_zero() && s_.is_zero()) {
    throw ConfigError("kernel pair with H = 0 and S = 0 is not admissible");
  }
  decay_radius_ = std::max(h_.is_zero() ? 0.0 : h_.decay_radius,
                           s_.is_zero() ? 0.0 : s_.decay_radius);
  if (!(decay_radius_ > 0.0) || !std::isfinite(decay_radius_)) {
    throw ConfigError("kernel decay radius must be positive");
  }
  if (label_.empty()) label_ = "H=" + h_.label + ", S=" + s_.label;
}

Complex KernelPair::H(double s, double t) const {
  if (h_.is_zero()) return {};
  const Complex v = h_.eval(s, t);
  if (!finite(v)) throw EvaluationError("non-finite H value", s, t);
  return v;
}

Complex KernelPair::S(double s, double t) const {
  if (s_.is_zero()) return {};
  const Complex v = s_.eval(s, t);
  if (!finite(v)) throw EvaluationError("non-finite S value", s, t);
  return v;
}

Complex KernelPair::T(Complex lambda, double s, double t) const {
  return H(s, t) - lambda * S(s, t);
}

Complex eval_T(const KernelPair& k, Complex lambda, double s, double t) {
  const Complex v = k.T(lambda, s, t);
  if (!finite(v)) throw EvaluationError("non-finite T value", s, t);
  return v;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& entry : catalog) names.emplace_back(entry.name);
  return names;
}

KernelFunction builtin_component(std::string_view name, std::span<const double> params) {
  for (const auto& entry : catalog) {
    if (name == entry.name) return entry.make(params);
  }
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

KernelPair builtin(std::string_view name, std::span<const double> params) {
  KernelFunction component = builtin_component(name, params);
  if (name == "finite-rank-sum") {
    // H = sum mu_i h_{i-1} (x) h_{i-1}, S = orthogonal projection onto the same span
    const std::size_t rank = params.empty() ? 2 : static_cast<std::size_t>(params[0]);
    std::vector<double> ones(rank + 1, 1.0);
    ones[0] = static_cast<double>(rank);
    KernelFunction projection = finite_rank_sum(ones);
    projection.label = "hermite-projection(rank=" + std::to_string(rank) + ")";
    return KernelPair(std::move(component), std::move(projection), std::string(name));
  }
  return KernelPair(zero_kernel(), std::move(component), std::string(name));
}

KernelFunction expression_kernel(std::string_view expr, double decay_radius) {
  if (!(decay_radius > 0.0) || !std::isfinite(decay_radius)) {
    throw ConfigError("expression kernel needs a positive decay_radius");
  }
  Expression e = Expression::compile(expr, {"s", "t"});
  KernelFunction k;
  k.eval = [e](double s, double t) { return e(s, t); };
  k.decay_radius = decay_radius;
  k.label = "expr(" + std::string(expr) + ")";
  return k;
}

double hermite_function(std::size_t k, double x) {
  double prev = 0.0;
  double cur = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  for (std::size_t j = 0; j < k; ++j) {
    const double jd = static_cast<double>(j);
    const double next = std::sqrt(2.0 / (jd + 1.0)) * x * cur - std::sqrt(jd / (jd + 1.0)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

RealFunction builtin_function(std::string_view name, std::span<const double> params) {
  if (name == "gaussian") {
    expect_at_most(name, params, 1);
    const double alpha = positive_param(name, params, 0, 1.0);
    return [alpha](double x) { return Complex(std::exp(-alpha * x * x), 0.0); };
  }
  if (name == "odd-gaussian") {
    expect_at_most(name, params, 1);
    const double alpha = positive_param(name, params, 0, 1.0);
    return [alpha](double x) { return Complex(x * std::exp(-alpha * x * x), 0.0); };
  }
  if (name == "hermite") {
    expect_at_most(name, params, 1);
    const std::size_t k = integer_param(name, params, 0, 0, 0, 64);
    return [k](double x) { return Complex(hermite_function(k, x), 0.0); };
  }
  throw ConfigError("unknown function '" + std::string(name) + "'");
}

RealFunction expression_function(std::string_view expr) {
  Expression e = Expression::compile(expr, {"s"});
  return [e](double x) { return e(x); };
}

TraceBounds estimate_trace_bounds(const KernelPair& k, const QuadratureRule& q) {
  if (q.size() < 32) throw ConfigError("trace bound estimation needs a rule with >= 32 nodes");
  const TraceBounds coarse = trace_on_rule(k, q);
  if (q.size() * 2 > max_rule_nodes) return coarse;
  const TraceBounds fine = trace_on_rule(k, refined(q));
  // the larger estimate plus the doubling change, so the majorant is not undercut
  auto padded = [](double a, double b) { return std::max(a, b) + std::abs(a - b); };
  TraceBounds out;
  out.M = padded(coarse.M, fine.M);
  out.trace_A = padded(coarse.trace_A, fine.trace_A);
  out.trace_Atilde = padded(coarse.trace_Atilde, fine.trace_Atilde);
  out.error = std::max({std::abs(fine.M - coarse.M), std::abs(fine.trace_A - coarse.trace_A),
                        std::abs(fine.trace_Atilde - coarse.trace_Atilde)});
  return out;
}

HilbertSchmidtCheck check_hilbert_schmidt(const KernelPair& k, const QuadratureRule& q) {
  auto norms = [&k](const QuadratureRule& rule) {
    double nh = 0.0;
    double ns = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      for (std::size_t j = 0; j < rule.size(); ++j) {
        const double w = rule.weights[i] * rule.weights[j];
        nh += w * std::norm(k.H(rule.nodes[i], rule.nodes[j]));
        ns += w * std::norm(k.S(rule.nodes[i], rule.nodes[j]));
      }
    }
    return std::pair{std::sqrt(nh), std::sqrt(ns)};
  };
  const auto [h1, s1] = norms(q);
  const auto [h2, s2] = norms(refined(q));
  auto rel = [](double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / b; };
  HilbertSchmidtCheck out;
  out.norm_H = h2;
  out.norm_S = s2;
  out.relative_change_H = rel(h1, h2);
  out.relative_change_S = rel(s1, s2);
  out.passed = std::isfinite(h2) && std::isfinite(s2) && out.relative_change_H < 0.01 &&
               out.relative_change_S < 0.01;
  return out;
}

CarlemanCheck check_carleman(const KernelPair& k, const QuadratureRule& q, Complex lambda) {
  const double far = 2.0 * k.decay_radius();
  constexpr int samples = 160;
  CarlemanCheck out;
  double max_row = 0.0;
  double max_col = 0.0;
  double max_jump = 0.0;
  double prev_row = 0.0;
  double prev_col = 0.0;
  bool ok = true;
  for (int i = 0; i <= samples; ++i) {
    const double s = -far + 2.0 * far * static_cast<double>(i) / samples;
    const double r = row_norm(k, q, lambda, s, false);
    const double c = row_norm(k, q, lambda, s, true);
    ok = ok && std::isfinite(r) && std::isfinite(c);
    max_row = std::max(max_row, r);
    max_col = std::max(max_col, c);
    if (i > 0) max_jump = std::max({max_jump, std::abs(r - prev_row), std::abs(c - prev_col)});
    prev_row = r;
    prev_col = c;
  }
  out.row_norm_at_origin = row_norm(k, q, lambda, 0.0, false);
  out.column_norm_at_origin = row_norm(k, q, lambda, 0.0, true);
  const double row_ref = out.row_norm_at_origin > 0.0 ? out.row_norm_at_origin : max_row;
  const double col_ref = out.column_norm_at_origin > 0.0 ? out.column_norm_at_origin : max_col;
  const double row_far = std::max(row_norm(k, q, lambda, far, false),
                                  row_norm(k, q, lambda, -far, false));
  const double col_far = std::max(row_norm(k, q, lambda, far, true),
                                   row_norm(k, q, lambda, -far, true));
  out.row_ratio_far = row_ref > 0.0 ? row_far / row_ref : 0.0;
  out.column_ratio_far = col_ref > 0.0 ? col_far / col_ref : 0.0;
  const double scale = std::max(max_row, max_col);
  out.max_relative_jump = scale > 0.0 ? max_jump / scale : 0.0;
  out.passed = ok && out.row_ratio_far < 1e-6 && out.column_ratio_far < 1e-6 &&
               out.max_relative_jump < 0.5;
  return out;
}

}  // namespace fredholm
