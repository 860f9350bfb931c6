#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fredholm/error.hpp"
#include "fredholm/kernels.hpp"
#include "fredholm/series.hpp"
#include "fredholm/spectral_index.hpp"

namespace fredholm {

struct RightHandSide {
  RealFunction eval_g;
  double norm_estimate = 0.0;
};

/// Wraps g and records its quadrature L2 norm on q.
RightHandSide make_rhs(RealFunction g, const QuadratureRule& q);

/// One null function of the homogeneous (or adjoint) equation, built from a minor with one
/// base point freed and scaled to unit quadrature norm.
class BasisFunction {
 public:
  BasisFunction(std::shared_ptr<const MinorEvaluator> ev, const IndexReport& idx,
                std::size_t slot, bool adjoint);

  Complex operator()(double x) const;
  std::vector<Complex> sample(std::span<const double> xs) const;
  /// Quadrature norm of the minor before scaling.
  double raw_norm() const noexcept { return raw_norm_; }
  bool adjoint() const noexcept { return adjoint_; }

 private:
  std::vector<Complex> raw(std::span<const double> xs) const;

  std::shared_ptr<const MinorEvaluator> ev_;
  std::vector<double> fixed_s_;
  std::vector<double> fixed_t_;
  double partner_;
  unsigned r_;
  bool adjoint_;
  double raw_norm_ = 1.0;
};

/// phi_i(s) = D_d^{(r)}(s in slot i; t'), i = 1..d. Empty when d = 0.
std::vector<BasisFunction> homogeneous_basis(std::shared_ptr<const MinorEvaluator> ev,
                                             const IndexReport& idx);
/// psi_l(t) = conj D_d^{(r)}(s'; t in slot l).
std::vector<BasisFunction> adjoint_basis(std::shared_ptr<const MinorEvaluator> ev,
                                         const IndexReport& idx);

/// f(s) = g(s) - sum_j w_j D_{d+1}(s, s'; x_j, t') g(x_j) / delta. Rows of the resolvent
/// minor are memoized per sample point; safe for concurrent use.
class ParticularSolution {
 public:
  ParticularSolution(std::shared_ptr<const MinorEvaluator> ev, const IndexReport& idx,
                     RealFunction g);

  Complex operator()(double x) const;
  std::vector<Complex> sample(std::span<const double> xs) const;
  std::size_t cached_rows() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

struct SolveOptions {
  double solvability_tol = 1e-6;  ///< relative to |g| |psi_l|
  double residual_tol = 1e-6;     ///< relative to |g| + |f|
  std::vector<double> output_grid;
};

struct SolutionReport {
  IndexReport index;
  std::vector<Complex> adjoint_pairings;  ///< <g, psi_l> with unit-norm psi_l
  double pairing_tolerance = 0.0;
  bool solvable = false;
  std::optional<ParticularSolution> particular;
  std::vector<BasisFunction> homogeneous_basis;
  std::vector<BasisFunction> adjoint_basis;
  double residual_sup = 0.0;  ///< sup_i |f + Tf - g|(y_i) on the refined rule, relative
  double residual_l2 = 0.0;   ///< |f + Tf - g| / (|g| + |f|) on the refined rule
  double g_norm = 0.0;
  double f_norm = 0.0;
  std::vector<double> output_grid;
  std::vector<Complex> output_values;  ///< particular solution on the output grid
};

/// Solution carried by the failed residual check.
class ResidualError : public Error {
 public:
  ResidualError(const std::string& what, std::shared_ptr<SolutionReport> report)
      : Error(what), report_(std::move(report)) {}
  const SolutionReport& report() const noexcept { return *report_; }

 private:
  std::shared_ptr<SolutionReport> report_;
};

/// Relative residual of f + T_lambda f - g sampled on the doubled rule.
struct Residual {
  double l2 = 0.0;
  double sup = 0.0;
  double f_norm = 0.0;
  double g_norm = 0.0;
};
Residual equation_residual(const KernelPair& k, const QuadratureRule& q, Complex lambda,
                           const std::function<std::vector<Complex>(std::span<const double>)>& f,
                           const RealFunction& g, bool adjoint = false);

/// Particular solution and null bases at the evaluator's lambda using the base points of idx.
SolutionReport solve(std::shared_ptr<const MinorEvaluator> ev, const IndexReport& idx,
                     const RightHandSide& g, const SolveOptions& options = {});

}  // namespace fredholm
