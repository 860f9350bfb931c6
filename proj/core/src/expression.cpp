#include "fredholm/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace fredholm {

struct Expression::Node {
  enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Abs, Sqrt };
  Op op = Op::Constant;
  Complex value{};
  std::size_t variable = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + std::string(src_) + "': " + what + " at position " +
                      std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = make(Node::Op::Add, n, term());
      } else if (accept('-')) {
        n = make(Node::Op::Sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = make(Node::Op::Mul, n, unary());
      } else if (accept('/')) {
        n = make(Node::Op::Div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Node::Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    double value = 0.0;
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{}) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    auto n = std::make_shared<Node>();
    n->value = value;
    return n;
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string id(src_.substr(start, pos_ - start));
    for (std::size_t v = 0; v < vars_.size(); ++v) {
      if (vars_[v] == id) {
        auto n = std::make_shared<Node>();
        n->op = Node::Op::Variable;
        n->variable = v;
        return n;
      }
    }
    if (id == "pi" || id == "i") {
      auto n = std::make_shared<Node>();
      n->value = id == "pi" ? Complex(std::numbers::pi, 0.0) : Complex(0.0, 1.0);
      return n;
    }
    Node::Op op;
    if (id == "exp") {
      op = Node::Op::Exp;
    } else if (id == "abs") {
      op = Node::Op::Abs;
    } else if (id == "sqrt") {
      op = Node::Op::Sqrt;
    } else {
      pos_ = start;
      fail("unknown name '" + id + "'");
    }
    if (!accept('(')) fail("expected '(' after " + id);
    NodePtr arg = expr();
    if (!accept(')')) fail("expected ')'");
    return make(op, arg);
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

Complex integer_power(Complex base, long long k) {
  const bool invert = k < 0;
  unsigned long long e = static_cast<unsigned long long>(invert ? -k : k);
  Complex result{1.0, 0.0};
  while (e > 0) {
    if (e & 1ULL) result *= base;
    base *= base;
    e >>= 1U;
  }
  return invert ? Complex{1.0, 0.0} / result : result;
}

Complex eval(const Node& n, std::span<const double> values) {
  switch (n.op) {
    case Node::Op::Constant: return n.value;
    case Node::Op::Variable: return {values[n.variable], 0.0};
    case Node::Op::Add: return eval(*n.lhs, values) + eval(*n.rhs, values);
    case Node::Op::Sub: return eval(*n.lhs, values) - eval(*n.rhs, values);
    case Node::Op::Mul: return eval(*n.lhs, values) * eval(*n.rhs, values);
    case Node::Op::Div: return eval(*n.lhs, values) / eval(*n.rhs, values);
    case Node::Op::Pow: {
      const Complex base = eval(*n.lhs, values);
      const Complex exponent = eval(*n.rhs, values);
      if (exponent.imag() == 0.0 && std::abs(exponent.real()) <= 64.0 &&
          exponent.real() == std::round(exponent.real())) {
        return integer_power(base, static_cast<long long>(exponent.real()));
      }
      if (base.imag() == 0.0 && base.real() >= 0.0 && exponent.imag() == 0.0) {
        return {std::pow(base.real(), exponent.real()), 0.0};
      }
      return std::pow(base, exponent);
    }
    case Node::Op::Neg: return -eval(*n.lhs, values);
    case Node::Op::Exp: {
      const Complex a = eval(*n.lhs, values);
      if (a.imag() == 0.0) return {std::exp(a.real()), 0.0};
      return std::exp(a);
    }
    case Node::Op::Abs: return {std::abs(eval(*n.lhs, values)), 0.0};
    case Node::Op::Sqrt: {
      const Complex a = eval(*n.lhs, values);
      if (a.imag() == 0.0 && a.real() >= 0.0) return {std::sqrt(a.real()), 0.0};
      return std::sqrt(a);
    }
  }
  return {};
}

}  // namespace

Expression Expression::compile(std::string_view source, std::vector<std::string> variables) {
  Expression e;
  e.source_ = std::string(source);
  e.arity_ = variables.size();
  e.root_ = Parser(e.source_, variables).parse();
  return e;
}

Complex Expression::operator()(std::span<const double> values) const {
  if (values.size() != arity_) throw ConfigError("expression arity mismatch");
  return eval(*root_, values);
}

Complex Expression::operator()(double a) const {
  const double v[] = {a};
  return (*this)(std::span<const double>(v));
}

Complex Expression::operator()(double a, double b) const {
  const double v[] = {a, b};
  return (*this)(std::span<const double>(v));
}

}  // namespace fredholm
