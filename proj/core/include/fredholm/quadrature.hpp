#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fredholm/error.hpp"

namespace fredholm {

enum class RuleKind {
  GaussLegendreTruncated,  ///< Gauss-Legendre mapped to [-R, R]
  GaussHermiteWeighted,    ///< Gauss-Hermite with e^{x^2} folded into the weights
  DoubleExponential,       ///< tanh-sinh on [-R, R]
};

std::string_view to_string(RuleKind kind);
RuleKind parse_rule_kind(std::string_view name);

/// Nodes and positive weights approximating an integral over the real line.
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, same length as nodes
  RuleKind kind = RuleKind::GaussLegendreTruncated;
  double truncation_radius = 0.0;

  std::size_t size() const noexcept { return nodes.size(); }
};

inline constexpr std::size_t max_rule_nodes = 2048;

/// Builds an n-node rule. For the Gauss-Hermite kind the radius is not used to place
/// nodes; truncation_radius then reports the outermost node.
QuadratureRule build_rule(RuleKind kind, std::size_t n_nodes, double radius);

/// Same kind and radius, twice the nodes (capped at max_rule_nodes).
QuadratureRule refined(const QuadratureRule& rule);

/// sum_k w_k f(x_k); throws EvaluationError on a non-finite sample.
Complex integrate_1d(const QuadratureRule& rule, const std::function<Complex(double)>& f);

/// Quadrature L2 norm of samples taken on the rule's nodes.
double l2_norm(const QuadratureRule& rule, std::span<const Complex> samples);

/// Quadrature inner product <f, g> = sum_k w_k f_k conj(g_k) of node samples.
Complex inner_product(const QuadratureRule& rule, std::span<const Complex> f,
                      std::span<const Complex> g);

}  // namespace fredholm
