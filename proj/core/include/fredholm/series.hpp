#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fredholm/error.hpp"
#include "fredholm/kernels.hpp"
#include "fredholm/quadrature.hpp"

namespace fredholm {

/// How the coefficient sums over node tuples are evaluated.
enum class SeriesMethod {
  Automatic,  ///< direct when the tuple count fits max_tuples, bordered otherwise
  Direct,     ///< explicit sum of weighted compounds over node tuples
  Bordered,   ///< coefficients of a bordered determinant polynomial in z
};

std::string_view to_string(SeriesMethod method);
SeriesMethod parse_series_method(std::string_view name);

struct SeriesOptions {
  SeriesMethod method = SeriesMethod::Automatic;
  std::uint64_t max_tuples = 2'000'000;
  std::size_t max_terms = 256;
};

struct MinorRequest {
  std::size_t p = 0;
  std::vector<double> s_points;
  std::vector<double> t_points;
  Complex lambda{};
  unsigned derivative_order = 0;
  double target_eps = 1e-10;
};

struct MinorValue {
  Complex value{};
  std::size_t terms_used = 1;  ///< number of coefficients summed, n = 0 .. terms_used - 1
  double truncation_bound = 0.0;
  double quadrature_tail = 0.0;
  SeriesMethod method = SeriesMethod::Direct;
};

/// The truncation target could not be met; carries the best value obtained.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, MinorValue best) : Error(what), best_(best) {}
  const MinorValue& best_effort() const noexcept { return best_; }

 private:
  MinorValue best_;
};

/// sqrt(2 (1 + rho^2)).
double c_factor(double rho);

/// n-th term of the majorant: M^{2p} c^{p+n} ((tr Atilde)^n + (tr A)^n) / (2 n!).
double bound_term(const TraceBounds& b, std::size_t p, double rho, std::size_t n);

/// Sum of the majorant over n > N. For a derivative order j >= 1 the Cauchy estimate on the
/// circle of radius rho + 1 is used: j! times the tail at rho + 1.
double tail_bound(const TraceBounds& b, std::size_t p, double rho, std::size_t N,
                  unsigned derivative_order = 0);

/// Smallest N whose tail is below target_eps. Throws CostLimitError past max_terms.
std::size_t truncation_N(const TraceBounds& b, std::size_t p, double rho, double target_eps,
                         std::size_t max_terms = 256, unsigned derivative_order = 0);

/// Kernel values on the nodes of one rule, shared by every evaluation on that rule.
class NodeTables {
 public:
  NodeTables(KernelPair kernel, QuadratureRule rule);

  const KernelPair& kernel() const noexcept { return kernel_; }
  const QuadratureRule& rule() const noexcept { return rule_; }
  std::size_t size() const noexcept { return rule_.size(); }
  const Eigen::MatrixXcd& H() const noexcept { return H_; }
  const Eigen::MatrixXcd& S() const noexcept { return S_; }
  Eigen::MatrixXcd T(Complex lambda) const { return H_ - lambda * S_; }

  /// T_lambda(rows_i, cols_j); either list may be replaced by the nodes (std::nullopt).
  Eigen::MatrixXcd T_block(Complex lambda, std::optional<std::span<const double>> rows,
                           std::optional<std::span<const double>> cols) const;
  /// H and S blocks, as T_block.
  Eigen::MatrixXcd H_block(std::optional<std::span<const double>> rows,
                           std::optional<std::span<const double>> cols) const;
  Eigen::MatrixXcd S_block(std::optional<std::span<const double>> rows,
                           std::optional<std::span<const double>> cols) const;

 private:
  KernelPair kernel_;
  QuadratureRule rule_;
  Eigen::MatrixXcd H_;
  Eigen::MatrixXcd S_;
};

/// Sum over strictly increasing node index sets J with |J| = n of (prod_J w) times the
/// j-th lambda-derivative of the compound on (s, xi_J; t, xi_J). Tuples with a repeated
/// node have two equal rows, so this equals the (1/n!) tensor sum. Throws CostLimitError
/// when C(N, n) exceeds max_tuples.
Complex symmetric_tuple_sum(const NodeTables& tables, std::size_t n, std::span<const double> s,
                            std::span<const double> t, Complex lambda, unsigned j,
                            std::uint64_t max_tuples);

/// Sum over n-subsets J of prod_J w times det K[J, J] for a matrix already on the nodes.
Complex principal_minor_sum(const Eigen::MatrixXcd& K, std::span<const double> weights,
                            std::size_t n, std::uint64_t max_tuples = 2'000'000);

/// B_n^p (or its j-th lambda-derivative) by the direct tuple sum.
Complex coeff_Bnp(const KernelPair& k, const QuadratureRule& q, std::size_t n,
                  std::span<const double> s, std::span<const double> t, Complex lambda,
                  unsigned j = 0, std::uint64_t max_tuples = 2'000'000);

/// For a discretized kernel the tuple sums are the z^n coefficients of
///   det [[T(s, t), z T(s, xi) W], [T(xi, t), I + z T(xi, xi) W]],
/// a polynomial of degree at most N in z. Samples on a half-offset root-of-unity circle
/// recover every coefficient at once.
class BorderedSeries {
 public:
  BorderedSeries(std::shared_ptr<const NodeTables> tables, Complex lambda);

  std::size_t degree() const noexcept { return tables_->size(); }
  Complex lambda() const noexcept { return lambda_; }

  /// Coefficients c_0 .. c_N of the discrete p-th minor at (s; t), derivative order j.
  std::vector<Complex> coefficients(std::span<const double> s, std::span<const double> t,
                                    unsigned j = 0) const;

  /// Partial sum c_0 + ... + c_last.
  Complex partial_sum(std::span<const double> s, std::span<const double> t, unsigned j,
                      std::size_t last) const;

  /// Partial sums (through c_last) of D_{d+1}(a, s_fixed; b, t_fixed) for every a in
  /// s_free and b in t_free, with derivative order 0. Rows follow s_free.
  Eigen::MatrixXcd grid(std::span<const double> s_fixed, std::span<const double> t_fixed,
                        std::span<const double> s_free, std::span<const double> t_free,
                        std::size_t last) const;

 private:
  std::vector<Eigen::MatrixXcd> grid_samples(std::span<const double> s_fixed,
                                             std::span<const double> t_fixed,
                                             std::span<const double> s_free,
                                             std::span<const double> t_free,
                                             bool& real_samples) const;
  std::vector<Complex> derivative_samples(std::span<const double> s, std::span<const double> t,
                                          unsigned j, bool& real_samples) const;
  std::vector<Complex> point_samples(std::span<const double> s, std::span<const double> t,
                                     unsigned j, bool& real_samples) const;
  std::vector<Complex> sample_weights(std::size_t last) const;

  std::shared_ptr<const NodeTables> tables_;
  Complex lambda_;
  std::vector<Complex> z_;
  Eigen::MatrixXcd TW_;  // T(xi, xi) W
  std::vector<Complex> det_samples_;
  bool real_ = false;  // real kernel values and real lambda
};

/// Evaluates truncated minor series at one lambda with error bars from the majorant.
class MinorEvaluator {
 public:
  /// radius defaults to |lambda|.
  MinorEvaluator(std::shared_ptr<const NodeTables> tables, TraceBounds bounds, Complex lambda,
                 double target_eps, SeriesOptions options = {},
                 std::optional<double> radius = std::nullopt);

  /// D_p^{(j)}(s; t) with p = s.size(). Throws TruncationError when the target cannot be
  /// certified within options.max_terms or max_tuples.
  MinorValue evaluate(std::span<const double> s, std::span<const double> t,
                      unsigned j = 0) const;

  /// D_{d+1}^{(j)}(a, s_fixed; b, t_fixed) for a in s_free, b in t_free.
  Eigen::MatrixXcd grid(std::span<const double> s_fixed, std::span<const double> t_fixed,
                        std::span<const double> s_free, std::span<const double> t_free,
                        unsigned j = 0) const;

  /// Index of the last coefficient summed for a p-th minor of derivative order j.
  std::size_t last_term(std::size_t p, unsigned j) const;
  double truncation_bound(std::size_t p, unsigned j) const;
  double quadrature_tail(std::size_t p, unsigned j = 0) const;
  /// truncation_bound + quadrature_tail.
  double error_bar(std::size_t p, unsigned j) const;

  Complex lambda() const noexcept { return lambda_; }
  double radius() const noexcept { return radius_; }
  double target_eps() const noexcept { return target_eps_; }
  const SeriesOptions& options() const noexcept { return options_; }
  const NodeTables& tables() const noexcept { return *tables_; }
  const std::shared_ptr<const NodeTables>& shared_tables() const noexcept { return tables_; }
  const TraceBounds& bounds() const noexcept { return bounds_; }
  const BorderedSeries& bordered() const;

 private:
  std::size_t uncapped_last_term(std::size_t p, unsigned j) const;
  bool use_direct(std::size_t p, std::size_t last) const;

  std::shared_ptr<const NodeTables> tables_;
  TraceBounds bounds_;
  Complex lambda_;
  double target_eps_;
  SeriesOptions options_;
  double radius_;
  double tail_mass_h_ = 0.0;  // integral of |H(x, x)| beyond the truncation radius
  double tail_mass_s_ = 0.0;
  std::shared_ptr<const BorderedSeries> bordered_;
};

/// D_p^{(j)} for one request.
MinorValue minor_Dp(const KernelPair& k, const QuadratureRule& q, const MinorRequest& req,
                    const TraceBounds& b, const SeriesOptions& options = {});

/// One value per lambda, all truncated at the radius max |lambda|.
std::vector<MinorValue> minor_Dp_scan(const KernelPair& k, const QuadratureRule& q,
                                      std::size_t p, std::span<const double> s,
                                      std::span<const double> t,
                                      std::span<const Complex> lambdas, const TraceBounds& b,
                                      double target_eps, const SeriesOptions& options = {});

}  // namespace fredholm
