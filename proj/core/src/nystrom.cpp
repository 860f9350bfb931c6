#include "fredholm/nystrom.hpp"

#include <cmath>
#include <limits>

#include "fredholm/series.hpp"
#include "fredholm/parallel.hpp"

namespace fredholm {

DiscreteSystem discretize(const KernelPair& k, const QuadratureRule& q, Complex lambda) {
  if (q.size() == 0 || q.weights.size() != q.size()) throw ConfigError("invalid quadrature rule");
  DiscreteSystem sys;
  sys.nodes = q.nodes;
  sys.weights = q.weights;
  sys.lambda = lambda;
  const auto n = static_cast<Eigen::Index>(q.size());
  sys.H.resize(n, n);
  sys.S.resize(n, n);
  parallel_for(q.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      sys.H(a, b) = k.H(q.nodes[i], q.nodes[j]);
      sys.S(a, b) = k.S(q.nodes[i], q.nodes[j]);
    }
  });
  sys.K = sys.H - lambda * sys.S;
  if (!sys.K.allFinite()) throw EvaluationError("non-finite kernel matrix", 0.0, 0.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = q.weights[static_cast<std::size_t>(i)];
  sys.system = Eigen::MatrixXcd::Identity(n, n) + sys.K * w.asDiagonal();
  return sys;
}

VonKochCheck von_koch_check(const DiscreteSystem& sys) {
  const std::size_t N = sys.size();
  if (N > 24) throw CostLimitError("von Koch check needs at most 24 nodes");
  std::vector<Complex> terms(N + 1);
  for (std::size_t n = 0; n <= N; ++n) {
    terms[n] = principal_minor_sum(sys.K, sys.weights, n, std::uint64_t{1} << 24);
  }
  VonKochCheck out;
  out.lhs = pairwise_sum(terms);
  out.rhs = Eigen::PartialPivLU<Eigen::MatrixXcd>(sys.system).determinant();
  out.gap = std::abs(out.lhs - out.rhs) / (1.0 + std::abs(out.rhs));
  return out;
}

NystromSolution nystrom_solve(const DiscreteSystem& sys, const std::vector<Complex>& g) {
  const auto n = static_cast<Eigen::Index>(sys.size());
  if (static_cast<Eigen::Index>(g.size()) != n) throw ConfigError("right-hand side length mismatch");
  const Eigen::Map<const Eigen::VectorXcd> rhs(g.data(), n);
  NystromSolution out;
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sys.system, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  out.largest_singular_value = sigma(0);
  out.smallest_singular_value = sigma(n - 1);
  out.threshold = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * sigma(0) * 1e3;
  Eigen::Index rank = n;
  while (rank > 0 && sigma(rank - 1) < out.threshold) --rank;
  out.null_dimension = static_cast<std::size_t>(n - rank);
  out.singular = out.null_dimension > 0;
  Eigen::VectorXcd f;
  if (!out.singular) {
    f = Eigen::PartialPivLU<Eigen::MatrixXcd>(sys.system).solve(rhs);
  } else {
    out.null_vectors = svd.matrixV().rightCols(n - rank);
    out.left_null_vectors = svd.matrixU().rightCols(n - rank);
    const double g_norm = rhs.norm();
    out.compatibility_residual =
        g_norm > 0 ? (out.left_null_vectors.adjoint() * rhs).norm() / g_norm : 0.0;
    // minimum-norm least-squares solution on the numerical range
    const Eigen::VectorXcd coeff = svd.matrixU().leftCols(rank).adjoint() * rhs;
    f = svd.matrixV().leftCols(rank) *
        (coeff.array() / sigma.head(rank).array().cast<Complex>()).matrix();
  }
  out.f.assign(f.data(), f.data() + n);
  return out;
}

}  // namespace fredholm
