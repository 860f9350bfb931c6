#include "fredholm/compounds.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fredholm {
namespace {

void validate(const CompoundQuery& q) {
  if (q.x_points.size() != q.y_points.size()) {
    throw ConfigError("compound needs equally many x and y points");
  }
  if (q.x_points.size() > max_compound_order) {
    throw CostLimitError("compound order " + std::to_string(q.x_points.size()) +
                         " exceeds the cap of " + std::to_string(max_compound_order));
  }
}

void assemble(const KernelPair& k, const CompoundQuery& q, std::vector<Complex>& h,
              std::vector<Complex>& s) {
  const std::size_t n = q.x_points.size();
  h.resize(n * n);
  s.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      h[i * n + j] = k.H(q.x_points[i], q.y_points[j]);
      s[i * n + j] = k.S(q.x_points[i], q.y_points[j]);
    }
  }
}

double factorial(unsigned j) {
  double f = 1.0;
  for (unsigned i = 2; i <= j; ++i) f *= i;
  return f;
}

}  // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    // r * num / i stays integral; guard the multiplication
    if (r > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r * num / i;
  }
  return r;
}

Complex lu_determinant(std::span<Complex> a, std::size_t n) {
  Complex det{1.0, 0.0};
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) return {};
    if (pivot != col) {
      for (std::size_t c = col; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      det = -det;
    }
    const Complex d = a[col * n + col];
    det *= d;
    const Complex inv = Complex{1.0, 0.0} / d;
    for (std::size_t r = col + 1; r < n; ++r) {
      const Complex f = a[r * n + col] * inv;
      if (f == Complex{}) continue;
      for (std::size_t c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
    }
  }
  return det;
}

Complex affine_determinant_derivative(std::span<const Complex> h, std::span<const Complex> s,
                                      std::size_t n, Complex lambda, unsigned j) {
  if (j > n) return {};
  std::vector<Complex> t(n * n);
  for (std::size_t i = 0; i < n * n; ++i) t[i] = h[i] - lambda * s[i];
  if (j == 0) return lu_determinant(t, n);
  if (binomial(n, j) > 10'000'000ULL) {
    throw CostLimitError("row-replacement sum with C(" + std::to_string(n) + ", " +
                         std::to_string(j) + ") terms exceeds the cost cap");
  }
  // enumerate j-subsets of rows in lexicographic order
  std::vector<std::size_t> rows(j);
  for (unsigned i = 0; i < j; ++i) rows[i] = i;
  std::vector<Complex> work(n * n);
  Complex acc{};
  for (;;) {
    work = t;
    for (std::size_t r : rows) {
      for (std::size_t c = 0; c < n; ++c) work[r * n + c] = s[r * n + c];
    }
    acc += lu_determinant(work, n);
    int pos = static_cast<int>(j) - 1;
    while (pos >= 0 && rows[static_cast<std::size_t>(pos)] == n - j + static_cast<std::size_t>(pos)) {
      --pos;
    }
    if (pos < 0) break;
    ++rows[static_cast<std::size_t>(pos)];
    for (std::size_t i = static_cast<std::size_t>(pos) + 1; i < j; ++i) rows[i] = rows[i - 1] + 1;
  }
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  return sign * factorial(j) * acc;
}

Complex compound(const KernelPair& k, const CompoundQuery& q) {
  if (q.derivative_order != 0) {
    throw ConfigError("compound() evaluates the value only; use compound_derivative()");
  }
  return compound_derivative(k, q);
}

Complex compound_derivative(const KernelPair& k, const CompoundQuery& q) {
  validate(q);
  const std::size_t n = q.x_points.size();
  if (q.derivative_order > n) return {};
  if (n == 0) return {1.0, 0.0};
  std::vector<Complex> h;
  std::vector<Complex> s;
  assemble(k, q, h, s);
  const Complex v = affine_determinant_derivative(h, s, n, q.lambda, q.derivative_order);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    throw EvaluationError("non-finite compound", q.x_points.front(), q.y_points.front());
  }
  return v;
}

}  // namespace fredholm
