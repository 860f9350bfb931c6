#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fredholm/error.hpp"
#include "fredholm/kernels.hpp"
#include "fredholm/quadrature.hpp"

namespace fredholm {

/// Equation f + T_lambda f = g collocated on the nodes of a rule.
struct DiscreteSystem {
  std::vector<double> nodes;
  std::vector<double> weights;
  Complex lambda{};
  Eigen::MatrixXcd H;       ///< H(x_i, x_j)
  Eigen::MatrixXcd S;       ///< S(x_i, x_j)
  Eigen::MatrixXcd K;       ///< T_lambda(x_i, x_j)
  Eigen::MatrixXcd system;  ///< I + K W

  std::size_t size() const noexcept { return nodes.size(); }
};

DiscreteSystem discretize(const KernelPair& k, const QuadratureRule& q, Complex lambda);

struct VonKochCheck {
  Complex lhs{};  ///< finite sum of weighted principal compounds
  Complex rhs{};  ///< det(I + K W)
  double gap = 0.0;  ///< |lhs - rhs| / (1 + |rhs|)
};

/// Compares the discrete determinant series with det(I + K W). Requires at most 24 nodes.
VonKochCheck von_koch_check(const DiscreteSystem& sys);

struct NystromSolution {
  std::vector<Complex> f;  ///< solution on the nodes (least-squares when singular)
  bool singular = false;
  std::size_t null_dimension = 0;
  double smallest_singular_value = 0.0;
  double largest_singular_value = 0.0;
  double threshold = 0.0;
  /// Norm of the projection of g on the left null vectors, relative to |g| (0 when regular).
  double compatibility_residual = 0.0;
  Eigen::MatrixXcd null_vectors;       ///< right null vectors as columns, on the nodes
  Eigen::MatrixXcd left_null_vectors;  ///< left null vectors as columns
};

/// Near-singular when sigma_min < N * eps * sigma_max * 1e3.
NystromSolution nystrom_solve(const DiscreteSystem& sys, const std::vector<Complex>& g);

}  // namespace fredholm
