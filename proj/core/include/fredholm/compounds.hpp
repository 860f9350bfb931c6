#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fredholm/error.hpp"
#include "fredholm/kernels.hpp"

namespace fredholm {

inline constexpr std::size_t max_compound_order = 64;

/// A nu-th compound T_lambda(x_1..x_nu; y_1..y_nu) and the lambda-derivative order wanted.
struct CompoundQuery {
  std::vector<double> x_points;
  std::vector<double> y_points;
  Complex lambda{};
  unsigned derivative_order = 0;
};

/// det [T_lambda(x_i, y_j)] by pivoted LU; exactly 1 for nu = 0. Requires derivative_order 0.
Complex compound(const KernelPair& k, const CompoundQuery& q);

/// d^j/dlambda^j of the compound. Rows are affine in lambda, so the derivative is
/// (-1)^j j! times the sum over j-row subsets of determinants with those rows taken from S.
/// Zero for j > nu.
Complex compound_derivative(const KernelPair& k, const CompoundQuery& q);

/// Determinant of an n x n row-major matrix by LU with partial pivoting; `a` is overwritten.
Complex lu_determinant(std::span<Complex> a, std::size_t n);

/// d^j/dlambda^j det(h - lambda s) for row-major n x n matrices h and s.
Complex affine_determinant_derivative(std::span<const Complex> h, std::span<const Complex> s,
                                      std::size_t n, Complex lambda, unsigned j);

/// Binomial coefficient, saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace fredholm
