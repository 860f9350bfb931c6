#pragma once

#include <cmath>
#include <memory>
#include <numbers>

#include "fredholm/kernels.hpp"
#include "fredholm/quadrature.hpp"
#include "fredholm/series.hpp"

namespace fredholm::testing {

// integral of e^{-2x^2} over the line
inline const double half_pi_root = std::sqrt(std::numbers::pi / 2.0);
inline const double lambda_star = 1.0 / half_pi_root;

inline Complex gauss(double x) { return {std::exp(-x * x), 0.0}; }
inline Complex odd_gauss(double x) { return {x * std::exp(-x * x), 0.0}; }

inline QuadratureRule legendre(std::size_t n, double radius) {
  return build_rule(RuleKind::GaussLegendreTruncated, n, radius);
}

inline KernelPair rank_one() { return builtin("gaussian-product"); }

inline std::shared_ptr<const MinorEvaluator> evaluator(const KernelPair& k, const QuadratureRule& q,
                                                       Complex lambda, double eps = 1e-12) {
  auto tables = std::make_shared<const NodeTables>(k, q);
  return std::make_shared<const MinorEvaluator>(tables, estimate_trace_bounds(k, q), lambda, eps);
}

}  // namespace fredholm::testing
