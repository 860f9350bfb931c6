#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fredholm/error.hpp"

namespace fredholm {

/// A compiled arithmetic expression over named real variables, evaluated in complex
/// arithmetic.
///
/// Grammar: `+ - * / ^`, parentheses, unary minus, numeric literals, the functions
/// `exp`, `abs`, `sqrt`, the constants `pi` and `i` (imaginary unit), and the variables
/// given at compile time. `^` is right-associative and binds tighter than unary minus,
/// so `-s^2` is `-(s^2)`.
class Expression {
 public:
  /// Throws ConfigError with the offending position on a syntax error or an unknown name.
  static Expression compile(std::string_view source, std::vector<std::string> variables);

  Complex operator()(std::span<const double> values) const;
  Complex operator()(double a) const;
  Complex operator()(double a, double b) const;

  const std::string& source() const noexcept { return source_; }

  struct Node;

 private:
  std::string source_;
  std::size_t arity_ = 0;
  std::shared_ptr<const Node> root_;
};

}  // namespace fredholm
