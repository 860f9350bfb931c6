#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fredholm/error.hpp"
#include "fredholm/quadrature.hpp"

namespace fredholm {

using KernelEval = std::function<Complex(double, double)>;
using RealFunction = std::function<Complex(double)>;

/// One closed-form kernel on R^2. An empty evaluator means the kernel is identically zero.
struct KernelFunction {
  KernelEval eval;
  /// Both |K(s, .)| and |K(., s)| are negligible once |s| exceeds this radius.
  double decay_radius = 1.0;
  std::string label = "zero";

  bool is_zero() const noexcept { return !eval; }
};

KernelFunction zero_kernel();

/// The pair (H, S) defining T_lambda = H - lambda S. Evaluators are pure; a KernelPair can
/// be shared between threads.
class KernelPair {
 public:
  /// Throws ConfigError when both kernels are identically zero.
  KernelPair(KernelFunction h, KernelFunction s, std::string label = {});

  Complex H(double s, double t) const;
  Complex S(double s, double t) const;
  Complex T(Complex lambda, double s, double t) const;

  const KernelFunction& h() const noexcept { return h_; }
  const KernelFunction& s() const noexcept { return s_; }
  double decay_radius() const noexcept { return decay_radius_; }
  double default_quadrature_radius() const noexcept { return 1.5 * decay_radius_; }
  const std::string& label() const noexcept { return label_; }

 private:
  KernelFunction h_;
  KernelFunction s_;
  double decay_radius_;
  std::string label_;
};

/// H(s, t) - lambda S(s, t). Throws EvaluationError (carrying s, t) on a non-finite value.
Complex eval_T(const KernelPair& k, Complex lambda, double s, double t);

/// Catalog of closed-form kernels; formulas and parameter ranges are listed in
/// docs/kernels.md.
std::vector<std::string> builtin_names();
KernelFunction builtin_component(std::string_view name, std::span<const double> params);
/// A catalog entry placed in its documented slot of the pair.
KernelPair builtin(std::string_view name, std::span<const double> params = {});

/// Kernel given by an expression in s and t.
KernelFunction expression_kernel(std::string_view expr, double decay_radius);

/// Orthonormal Hermite function h_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) e^{-x^2/2}.
double hermite_function(std::size_t k, double x);

/// One-variable catalog used for right-hand sides: "gaussian" [alpha=1] e^{-alpha x^2},
/// "odd-gaussian" [alpha=1] x e^{-alpha x^2}, "hermite" [k] h_k(x).
RealFunction builtin_function(std::string_view name, std::span<const double> params = {});
RealFunction expression_function(std::string_view expr);

/// Constants driving the a-priori truncation of the Fredholm series.
struct TraceBounds {
  double M = 0.0;             ///< max of sup sqrt(A(s, s)), sup sqrt(Atilde(s, s))
  double trace_A = 0.0;       ///< tr (H*H + S*S)^{1/2}
  double trace_Atilde = 0.0;  ///< tr (HH* + SS*)^{1/2}
  double error = 0.0;         ///< largest change against a rule with doubled nodes

  double max_trace() const noexcept { return std::max(trace_A, trace_Atilde); }
};

/// Nystrom estimate of the trace bounds from the symmetrically weighted discretization:
/// the square roots are read off the singular value decomposition of the stacked H and S
/// matrices. Each constant is the larger of the values on q and on the doubled rule plus
/// their difference; `error` is the largest difference. Requires at least 32 nodes
/// (ConfigError otherwise).
TraceBounds estimate_trace_bounds(const KernelPair& k, const QuadratureRule& q);

struct HilbertSchmidtCheck {
  double norm_H = 0.0;
  double norm_S = 0.0;
  double relative_change_H = 0.0;
  double relative_change_S = 0.0;
  bool passed = false;
};

/// Double integrals of |H|^2 and |S|^2 on q and on the doubled rule; passes when both are
/// finite and change by less than 1%.
HilbertSchmidtCheck check_hilbert_schmidt(const KernelPair& k, const QuadratureRule& q);

struct CarlemanCheck {
  double row_norm_at_origin = 0.0;
  double column_norm_at_origin = 0.0;
  double row_ratio_far = 0.0;     ///< row norm at |s| = 2 R0 over the value at s = 0
  double column_ratio_far = 0.0;
  double max_relative_jump = 0.0;  ///< between neighbouring samples, relative to the max
  bool passed = false;
};

/// Samples s -> ||T_lambda(s, .)|| and s -> ||T_lambda(., s)|| and checks continuity and
/// decay (ratio below 1e-6 at twice the decay radius).
CarlemanCheck check_carleman(const KernelPair& k, const QuadratureRule& q, Complex lambda);

}  // namespace fredholm
