#include <gtest/gtest.h>

#include <cmath>

#include "fredholm/solver.hpp"
#include "support.hpp"

namespace fredholm {
namespace {

using testing::half_pi_root;
using testing::lambda_star;

struct Setup {
  KernelPair k;
  QuadratureRule q;
  std::shared_ptr<const MinorEvaluator> ev;
  IndexReport idx;
};

Setup prepare(KernelPair k, double lambda, std::size_t nodes = 64) {
  auto q = testing::legendre(nodes, k.default_quadrature_radius());
  auto ev = testing::evaluator(k, q, {lambda, 0.0});
  IndexOptions o;
  o.grid = uniform_grid(3.0, 25);
  auto idx = find_index(*ev, o);
  return {std::move(k), std::move(q), std::move(ev), std::move(idx)};
}

TEST(Solver, RegularRankOneClosedForm) {
  auto s = prepare(testing::rank_one(), 0.5);
  ASSERT_EQ(s.idx.d, 0u);
  const auto rep = solve(s.ev, s.idx, make_rhs(testing::gauss, s.q));
  EXPECT_TRUE(rep.solvable);
  ASSERT_TRUE(rep.particular.has_value());
  EXPECT_TRUE(rep.homogeneous_basis.empty());
  EXPECT_NEAR((*rep.particular)(0.3).real(), 2.44796702588, 1e-10);
  const double c = 1.0 + 0.5 * half_pi_root / (1.0 - 0.5 * half_pi_root);
  for (double x : {-1.7, 0.0, 0.9}) {
    EXPECT_NEAR(std::abs((*rep.particular)(x) - c * testing::gauss(x)), 0.0, 1e-12);
  }
  EXPECT_LT(rep.residual_l2, 1e-10);
  EXPECT_LT(rep.residual_sup, 1e-10);
}

TEST(Solver, RankOneNotSolvable) {
  auto s = prepare(testing::rank_one(), lambda_star);
  ASSERT_EQ(s.idx.d, 1u);
  const auto rep = solve(s.ev, s.idx, make_rhs(testing::gauss, s.q));
  EXPECT_FALSE(rep.solvable);
  EXPECT_FALSE(rep.particular.has_value());
  ASSERT_EQ(rep.adjoint_pairings.size(), 1u);
  // <a, a / |a|> = |a|
  EXPECT_NEAR(std::abs(rep.adjoint_pairings[0]), std::sqrt(half_pi_root), 1e-10);
  EXPECT_NEAR(rep.pairing_tolerance, 1e-6 * std::sqrt(half_pi_root), 1e-12);
}

TEST(Solver, RankOneSolvableOddRightHandSide) {
  auto s = prepare(testing::rank_one(), lambda_star);
  const auto rep = solve(s.ev, s.idx, make_rhs(testing::odd_gauss, s.q));
  EXPECT_TRUE(rep.solvable);
  ASSERT_TRUE(rep.particular.has_value());
  for (double x : {-1.0, 0.2, 1.4}) {
    EXPECT_NEAR(std::abs((*rep.particular)(x) - testing::odd_gauss(x)), 0.0, 1e-12);
  }
  EXPECT_LT(rep.residual_l2, 1e-10);
}

TEST(Solver, NullFunctionsAreGaussian) {
  auto s = prepare(testing::rank_one(), lambda_star);
  const auto phi = homogeneous_basis(s.ev, s.idx);
  const auto psi = adjoint_basis(s.ev, s.idx);
  ASSERT_EQ(phi.size(), 1u);
  ASSERT_EQ(psi.size(), 1u);
  EXPECT_TRUE(psi[0].adjoint());
  // unit-norm multiple of a
  const double scale = 1.0 / std::sqrt(half_pi_root);
  for (double x : {-1.0, 0.0, 0.5}) {
    EXPECT_NEAR(std::abs(phi[0](x)), scale * std::exp(-x * x), 1e-10);
    EXPECT_NEAR(std::abs(psi[0](x)), scale * std::exp(-x * x), 1e-10);
  }
  const auto r = equation_residual(s.k, s.q, s.ev->lambda(),
                                   [&](std::span<const double> xs) { return phi[0].sample(xs); },
                                   [](double) { return Complex{}; });
  EXPECT_LT(r.l2, 1e-12);
  const auto ra = equation_residual(s.k, s.q, s.ev->lambda(),
                                    [&](std::span<const double> xs) { return psi[0].sample(xs); },
                                    [](double) { return Complex{}; }, true);
  EXPECT_LT(ra.l2, 1e-12);
}

TEST(Solver, FiniteRankTwoDimensionalNullSpace) {
  auto s = prepare(builtin("finite-rank-sum", std::vector<double>{2.0, 0.5, 0.5}), 1.5);
  ASSERT_EQ(s.idx.d, 2u);
  const auto h2 = builtin_function("hermite", std::vector<double>{2.0});
  const auto rep = solve(s.ev, s.idx, make_rhs(h2, s.q));
  EXPECT_TRUE(rep.solvable);
  EXPECT_EQ(rep.homogeneous_basis.size(), 2u);
  EXPECT_LT(rep.residual_l2, 1e-8);
  const auto h0 = builtin_function("hermite");
  EXPECT_FALSE(solve(s.ev, s.idx, make_rhs(h0, s.q)).solvable);
}

TEST(Solver, FiniteRankVerdicts) {
  auto s = prepare(builtin("finite-rank-sum"), 1.5);
  ASSERT_EQ(s.idx.d, 1u);
  EXPECT_TRUE(solve(s.ev, s.idx, make_rhs(builtin_function("hermite", std::vector<double>{1.0}), s.q)).solvable);
  EXPECT_FALSE(solve(s.ev, s.idx, make_rhs(builtin_function("hermite"), s.q)).solvable);
}

TEST(Solver, ParticularSolutionIsLinearInRightHandSide) {
  auto s = prepare(builtin("gaussian-product", std::vector<double>{1.0}), 0.5, 48);
  ASSERT_EQ(s.idx.d, 0u);
  const RealFunction g1 = testing::gauss;
  const RealFunction g2 = testing::odd_gauss;
  const RealFunction mix = [](double x) { return 2.0 * testing::gauss(x) - 3.0 * testing::odd_gauss(x); };
  const ParticularSolution f1(s.ev, s.idx, g1), f2(s.ev, s.idx, g2), fm(s.ev, s.idx, mix);
  for (double x : {-1.3, 0.0, 0.6, 2.2}) {
    EXPECT_NEAR(std::abs(fm(x) - (2.0 * f1(x) - 3.0 * f2(x))), 0.0, 1e-12);
  }
  EXPECT_EQ(f1.cached_rows(), 4u);
  (void)f1(0.6);
  EXPECT_EQ(f1.cached_rows(), 4u);
}

TEST(Solver, OutputGridAndResidual) {
  auto s = prepare(builtin("separable-gaussian", std::vector<double>{2.0}), -0.7);
  SolveOptions o;
  o.output_grid = uniform_grid(2.0, 9);
  const auto rep = solve(s.ev, s.idx, make_rhs(testing::gauss, s.q), o);
  ASSERT_EQ(rep.output_values.size(), 9u);
  EXPECT_NEAR(std::abs(rep.output_values[4] - (*rep.particular)(0.0)), 0.0, 1e-15);
  EXPECT_LT(rep.residual_l2, 1e-6);
  EXPECT_GT(rep.f_norm, 0.0);
}

TEST(Solver, ResidualDetectsWrongSolution) {
  const auto k = testing::rank_one();
  const auto q = testing::legendre(64, 4.5);
  const auto r = equation_residual(
      k, q, {0.5, 0.0},
      [](std::span<const double> xs) {
        std::vector<Complex> v;
        for (double x : xs) v.push_back(testing::gauss(x));
        return v;
      },
      testing::gauss);
  EXPECT_GT(r.l2, 0.1);
}

}  // namespace
}  // namespace fredholm
