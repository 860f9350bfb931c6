#include "fredholm/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fredholm/compounds.hpp"
#include "fredholm/parallel.hpp"

namespace fredholm {

namespace {

using Points = std::optional<std::span<const double>>;

constexpr std::size_t tuple_chunk = 4096;

bool finite(Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double log_bound_term(const TraceBounds& b, std::size_t p, double c, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  double log_traces;
  if (n == 0) {
    log_traces = std::log(2.0);
  } else {
    const double hi = std::max(b.trace_A, b.trace_Atilde);
    const double lo = std::min(b.trace_A, b.trace_Atilde);
    if (hi <= 0.0) return -inf;
    log_traces = n * std::log(hi) + std::log1p(std::pow(lo / hi, static_cast<double>(n)));
  }
  double log_m = 0.0;
  if (p > 0) {
    if (b.M <= 0.0) return -inf;
    log_m = 2.0 * p * std::log(b.M);
  }
  return log_m + (p + n) * std::log(c) + log_traces - std::log(2.0) - log_factorial(n);
}

void check_bounds(const TraceBounds& b) {
  if (!std::isfinite(b.M) || !std::isfinite(b.trace_A) || !std::isfinite(b.trace_Atilde) ||
      b.M < 0 || b.trace_A < 0 || b.trace_Atilde < 0) {
    throw ConfigError("trace bounds must be finite and non-negative");
  }
}

std::vector<double> resolve(const Points& pts, const QuadratureRule& rule) {
  if (!pts) return rule.nodes;
  return {pts->begin(), pts->end()};
}

Eigen::MatrixXcd eval_block(const std::vector<double>& rows, const std::vector<double>& cols,
                            const std::function<Complex(double, double)>& f) {
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(cols.size()));
  parallel_for(rows.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(rows[i], cols[j]);
    }
  });
  return out;
}

Eigen::VectorXcd weight_vector(const QuadratureRule& rule) {
  Eigen::VectorXcd w(static_cast<Eigen::Index>(rule.size()));
  for (std::size_t i = 0; i < rule.size(); ++i) w(static_cast<Eigen::Index>(i)) = rule.weights[i];
  return w;
}

// Lexicographic unranking of an n-subset of {0..N-1}.
void unrank_subset(std::uint64_t rank, std::size_t N, std::size_t n, std::vector<std::size_t>& out) {
  out.resize(n);
  std::size_t x = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      const std::uint64_t skip = binomial(N - x - 1, n - i - 1);
      if (skip > rank) break;
      rank -= skip;
      ++x;
    }
    out[i] = x++;
  }
}

bool next_subset(std::vector<std::size_t>& idx, std::size_t N) {
  const std::size_t n = idx.size();
  std::size_t pos = n;
  while (pos > 0 && idx[pos - 1] == N - n + pos - 1) --pos;
  if (pos == 0) return false;
  ++idx[pos - 1];
  for (std::size_t i = pos; i < n; ++i) idx[i] = idx[i - 1] + 1;
  return true;
}

// e_j of the eigenvalues of x, from power traces by Newton's identities.
Complex elementary_symmetric(const Eigen::MatrixXcd& x, unsigned j) {
  std::vector<Complex> power_traces(j + 1);
  Eigen::MatrixXcd xk = x;
  for (unsigned k = 1; k <= j; ++k) {
    if (k > 1) xk = xk * x;
    power_traces[k] = xk.trace();
  }
  std::vector<Complex> e(j + 1);
  e[0] = 1.0;
  for (unsigned k = 1; k <= j; ++k) {
    Complex acc{};
    for (unsigned i = 1; i <= k; ++i) {
      const double sign = (i % 2 == 1) ? 1.0 : -1.0;
      acc += sign * e[k - i] * power_traces[i];
    }
    e[k] = acc / static_cast<double>(k);
  }
  return e[j];
}

double factorial_d(unsigned j) { return std::tgamma(static_cast<double>(j) + 1.0); }

constexpr double rcond_floor = 1e-13;

bool is_real(const Eigen::MatrixXcd& m) { return (m.imag().array() == 0.0).all(); }

// Samples at conjugate z are conjugate for real data; only the upper half-circle is computed.
std::size_t computed_samples(std::size_t total, bool real) { return real ? total / 2 : total; }

template <class T>
void mirror(std::vector<T>& v, bool real) {
  if (!real) return;
  const std::size_t K = v.size();
  for (std::size_t k = 0; k < K / 2; ++k) v[K - 1 - k] = v[k].conjugate();
}

void mirror(std::vector<Complex>& v, bool real) {
  if (!real) return;
  const std::size_t K = v.size();
  for (std::size_t k = 0; k < K / 2; ++k) v[K - 1 - k] = std::conj(v[k]);
}

}  // namespace

std::string_view to_string(SeriesMethod method) {
  switch (method) {
    case SeriesMethod::Automatic: return "auto";
    case SeriesMethod::Direct: return "direct";
    case SeriesMethod::Bordered: return "bordered";
  }
  return "auto";
}

SeriesMethod parse_series_method(std::string_view name) {
  if (name == "auto") return SeriesMethod::Automatic;
  if (name == "direct") return SeriesMethod::Direct;
  if (name == "bordered") return SeriesMethod::Bordered;
  throw ConfigError("unknown series method '" + std::string(name) +
                    "' (expected auto, direct or bordered)");
}

double c_factor(double rho) { return std::sqrt(2.0 * (1.0 + rho * rho)); }

double bound_term(const TraceBounds& b, std::size_t p, double rho, std::size_t n) {
  return std::exp(log_bound_term(b, p, c_factor(rho), n));
}

double tail_bound(const TraceBounds& b, std::size_t p, double rho, std::size_t N,
                  unsigned derivative_order) {
  check_bounds(b);
  const double c = c_factor(derivative_order == 0 ? rho : rho + 1.0);
  const double x = c * b.max_trace();
  double sum = 0.0;
  for (std::size_t n = N + 1;; ++n) {
    const double term = std::exp(log_bound_term(b, p, c, n));
    sum += term;
    // beyond n, successive terms shrink at least by q = x / (n + 1)
    const double q = x / static_cast<double>(n + 1);
    if (q < 1.0) {
      const double rest = term * q / (1.0 - q);
      if (term == 0.0 || rest <= 1e-17 * sum) {
        sum += rest;
        break;
      }
    }
    if (!std::isfinite(sum)) break;
  }
  return factorial_d(derivative_order) * sum;
}

std::size_t truncation_N(const TraceBounds& b, std::size_t p, double rho, double target_eps,
                         std::size_t max_terms, unsigned derivative_order) {
  if (!(target_eps > 0.0)) throw ConfigError("target_eps must be positive");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("radius must be finite and >= 0");
  for (std::size_t N = 0; N <= max_terms; ++N) {
    if (tail_bound(b, p, rho, N, derivative_order) < target_eps) return N;
  }
  throw CostLimitError("truncation target " + std::to_string(target_eps) +
                       " needs more than " + std::to_string(max_terms) + " terms");
}

NodeTables::NodeTables(KernelPair kernel, QuadratureRule rule)
    : kernel_(std::move(kernel)), rule_(std::move(rule)) {
  H_ = H_block(std::nullopt, std::nullopt);
  S_ = S_block(std::nullopt, std::nullopt);
}

Eigen::MatrixXcd NodeTables::H_block(Points rows, Points cols) const {
  return eval_block(resolve(rows, rule_), resolve(cols, rule_),
                    [this](double s, double t) { return kernel_.H(s, t); });
}

Eigen::MatrixXcd NodeTables::S_block(Points rows, Points cols) const {
  return eval_block(resolve(rows, rule_), resolve(cols, rule_),
                    [this](double s, double t) { return kernel_.S(s, t); });
}

Eigen::MatrixXcd NodeTables::T_block(Complex lambda, Points rows, Points cols) const {
  if (!rows && !cols && H_.size() > 0) return T(lambda);
  return eval_block(resolve(rows, rule_), resolve(cols, rule_),
                    [this, lambda](double s, double t) { return eval_T(kernel_, lambda, s, t); });
}

namespace {

// Sum over n-subsets J of the nodes of prod_J w times the j-th derivative of
// det(h - lambda s) restricted to rows/columns {0..p-1} + (p + J); h and s are m x m.
Complex tuple_sum(const std::vector<Complex>& hbig, const std::vector<Complex>& sbig, std::size_t m,
                  std::size_t p, std::span<const double> w, std::size_t n, Complex lambda,
                  unsigned j, std::uint64_t max_tuples) {
  const std::size_t N = m - p;
  if (p + n > max_compound_order) throw CostLimitError("compound order exceeds 64");
  if (n > N) return {};
  const std::uint64_t count = binomial(N, n);
  if (count > max_tuples) {
    throw CostLimitError("coefficient n = " + std::to_string(n) + " needs " +
                         std::to_string(count) + " node tuples, above series.max_tuples = " +
                         std::to_string(max_tuples));
  }
  const std::size_t chunks = static_cast<std::size_t>((count + tuple_chunk - 1) / tuple_chunk);
  std::vector<Complex> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::uint64_t first = static_cast<std::uint64_t>(c) * tuple_chunk;
    const std::uint64_t last = std::min<std::uint64_t>(count, first + tuple_chunk);
    const std::size_t k = p + n;
    std::vector<std::size_t> idx;
    unrank_subset(first, N, n, idx);
    std::vector<std::size_t> pick(k);
    std::vector<Complex> hs(k * k), ss(k * k);
    Complex acc{};
    for (std::uint64_t r = first; r < last; ++r) {
      double weight = 1.0;
      for (std::size_t i = 0; i < p; ++i) pick[i] = i;
      for (std::size_t i = 0; i < n; ++i) {
        pick[p + i] = p + idx[i];
        weight *= w[idx[i]];
      }
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          hs[a * k + b] = hbig[pick[a] * m + pick[b]];
          ss[a * k + b] = sbig[pick[a] * m + pick[b]];
        }
      }
      acc += weight * affine_determinant_derivative(hs, ss, k, lambda, j);
      next_subset(idx, N);
    }
    partial[c] = acc;
  });
  const Complex total = pairwise_sum(partial);
  if (!finite(total)) throw EvaluationError("non-finite coefficient", 0.0, 0.0);
  return total;
}

}  // namespace

Complex symmetric_tuple_sum(const NodeTables& tables, std::size_t n, std::span<const double> s,
                            std::span<const double> t, Complex lambda, unsigned j,
                            std::uint64_t max_tuples) {
  if (s.size() != t.size()) throw ConfigError("s and t point lists differ in length");
  const std::size_t p = s.size();
  const std::size_t N = tables.size();
  if (n > N) return {};

  // rows: s then nodes; columns: t then nodes
  const std::size_t m = p + N;
  std::vector<Complex> hbig(m * m), sbig(m * m);
  auto fill = [&](const Eigen::MatrixXcd& blk, std::size_t r0, std::size_t c0, std::vector<Complex>& dst) {
    for (Eigen::Index r = 0; r < blk.rows(); ++r) {
      for (Eigen::Index c = 0; c < blk.cols(); ++c) {
        dst[(r0 + static_cast<std::size_t>(r)) * m + c0 + static_cast<std::size_t>(c)] = blk(r, c);
      }
    }
  };
  fill(tables.H(), p, p, hbig);
  fill(tables.S(), p, p, sbig);
  if (p > 0) {
    fill(tables.H_block(s, t), 0, 0, hbig);
    fill(tables.H_block(s, std::nullopt), 0, p, hbig);
    fill(tables.H_block(std::nullopt, t), p, 0, hbig);
    fill(tables.S_block(s, t), 0, 0, sbig);
    fill(tables.S_block(s, std::nullopt), 0, p, sbig);
    fill(tables.S_block(std::nullopt, t), p, 0, sbig);
  }
  return tuple_sum(hbig, sbig, m, p, tables.rule().weights, n, lambda, j, max_tuples);
}

Complex principal_minor_sum(const Eigen::MatrixXcd& K, std::span<const double> weights,
                            std::size_t n, std::uint64_t max_tuples) {
  const auto N = static_cast<std::size_t>(K.rows());
  if (K.cols() != K.rows() || weights.size() != N) throw ConfigError("matrix and weights disagree in size");
  std::vector<Complex> hbig(N * N), sbig(N * N);
  for (std::size_t r = 0; r < N; ++r) {
    for (std::size_t c = 0; c < N; ++c) {
      hbig[r * N + c] = K(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return tuple_sum(hbig, sbig, N, 0, weights, n, Complex{}, 0, max_tuples);
}

Complex coeff_Bnp(const KernelPair& k, const QuadratureRule& q, std::size_t n,
                  std::span<const double> s, std::span<const double> t, Complex lambda,
                  unsigned j, std::uint64_t max_tuples) {
  if (s.size() != t.size()) throw ConfigError("s and t point lists differ in length");
  if (n > q.size()) return {};
  const NodeTables tables(k, q);
  return symmetric_tuple_sum(tables, n, s, t, lambda, j, max_tuples);
}

BorderedSeries::BorderedSeries(std::shared_ptr<const NodeTables> tables, Complex lambda)
    : tables_(std::move(tables)), lambda_(lambda) {
  const std::size_t N = tables_->size();
  const std::size_t samples = (N + 1) + ((N + 1) % 2);
  z_.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double angle = std::numbers::pi * static_cast<double>(2 * k + 1) / static_cast<double>(samples);
    z_[k] = std::polar(1.0, angle);
  }
  TW_ = tables_->T(lambda_) * weight_vector(tables_->rule()).asDiagonal();
  real_ = lambda_.imag() == 0.0 && is_real(TW_);
  det_samples_.resize(samples);
  const auto n = static_cast<Eigen::Index>(N);
  parallel_for(computed_samples(samples, real_), [&](std::size_t k) {
    const Eigen::MatrixXcd d = Eigen::MatrixXcd::Identity(n, n) + z_[k] * TW_;
    det_samples_[k] = Eigen::PartialPivLU<Eigen::MatrixXcd>(d).determinant();
  });
  mirror(det_samples_, real_);
}

std::vector<Complex> BorderedSeries::sample_weights(std::size_t last) const {
  const std::size_t K = z_.size();
  const std::size_t top = std::min(last, degree());
  std::vector<Complex> omega(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Complex zinv = std::conj(z_[k]);
    Complex acc{}, power{1.0, 0.0};
    for (std::size_t n = 0; n <= top; ++n) {
      acc += power;
      power *= zinv;
    }
    omega[k] = acc / static_cast<double>(K);
  }
  return omega;
}

std::vector<Eigen::MatrixXcd> BorderedSeries::grid_samples(std::span<const double> s_fixed,
                                                           std::span<const double> t_fixed,
                                                           std::span<const double> s_free,
                                                           std::span<const double> t_free,
                                                           bool& real_samples) const {
  if (s_fixed.size() != t_fixed.size()) throw ConfigError("fixed point lists differ in length");
  const NodeTables& tb = *tables_;
  const auto d = static_cast<Eigen::Index>(s_fixed.size());
  const auto N = static_cast<Eigen::Index>(tb.size());
  const auto na = static_cast<Eigen::Index>(s_free.size());
  const auto nb = static_cast<Eigen::Index>(t_free.size());
  const auto m = d + N;
  const Eigen::VectorXcd w = weight_vector(tb.rule());

  const Eigen::MatrixXcd Tff = tb.T_block(lambda_, s_fixed, t_fixed);
  const Eigen::MatrixXcd TfX = tb.T_block(lambda_, s_fixed, std::nullopt) * w.asDiagonal();
  const Eigen::MatrixXcd TXf = tb.T_block(lambda_, std::nullopt, t_fixed);
  const Eigen::MatrixXcd A = tb.T_block(lambda_, s_free, t_free);
  const Eigen::MatrixXcd RaF = tb.T_block(lambda_, s_free, t_fixed);
  const Eigen::MatrixXcd RaX = tb.T_block(lambda_, s_free, std::nullopt) * w.asDiagonal();
  Eigen::MatrixXcd C(m, nb);
  C.topRows(d) = tb.T_block(lambda_, s_fixed, t_free);
  C.bottomRows(N) = tb.T_block(lambda_, std::nullopt, t_free);
  const bool real = real_ && is_real(Tff) && is_real(TfX) && is_real(TXf) && is_real(A) &&
                    is_real(RaF) && is_real(RaX) && is_real(C);

  std::vector<Eigen::MatrixXcd> out(z_.size());
  parallel_for(computed_samples(z_.size(), real), [&](std::size_t k) {
    const Complex z = z_[k];
    Eigen::MatrixXcd F(m, m);
    F.topLeftCorner(d, d) = Tff;
    F.topRightCorner(d, N) = z * TfX;
    F.bottomLeftCorner(N, d) = TXf;
    F.bottomRightCorner(N, N) = Eigen::MatrixXcd::Identity(N, N) + z * TW_;
    Eigen::MatrixXcd R(na, m);
    R.leftCols(d) = RaF;
    R.rightCols(N) = z * RaX;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(F);
    const Complex det_f = lu.determinant();
    if (lu.rcond() > rcond_floor && finite(det_f)) {
      out[k] = det_f * (A - R * lu.solve(C));
      return;
    }
    // near-singular border block: expand every entry separately
    Eigen::MatrixXcd full(m + 1, m + 1);
    full.bottomRightCorner(m, m) = F;
    Eigen::MatrixXcd vals(na, nb);
    for (Eigen::Index a = 0; a < na; ++a) {
      for (Eigen::Index b = 0; b < nb; ++b) {
        full(0, 0) = A(a, b);
        full.block(0, 1, 1, m) = R.row(a);
        full.block(1, 0, m, 1) = C.col(b);
        vals(a, b) = Eigen::PartialPivLU<Eigen::MatrixXcd>(full).determinant();
      }
    }
    out[k] = vals;
  });
  mirror(out, real);
  real_samples = real;
  return out;
}

std::vector<Complex> BorderedSeries::derivative_samples(std::span<const double> s,
                                                        std::span<const double> t, unsigned j,
                                                        bool& real_samples) const {
  const NodeTables& tb = *tables_;
  const auto p = static_cast<Eigen::Index>(s.size());
  const auto N = static_cast<Eigen::Index>(tb.size());
  const auto m = p + N;
  std::vector<Complex> out(z_.size());
  real_samples = false;
  if (static_cast<Eigen::Index>(j) > m) return out;
  const Eigen::VectorXcd w = weight_vector(tb.rule());
  Eigen::MatrixXcd Hb(m, m), Sb(m, m);
  Hb.bottomRightCorner(N, N) = tb.H() * w.asDiagonal();
  Sb.bottomRightCorner(N, N) = tb.S() * w.asDiagonal();
  if (p > 0) {
    Hb.topLeftCorner(p, p) = tb.H_block(s, t);
    Hb.topRightCorner(p, N) = tb.H_block(s, std::nullopt) * w.asDiagonal();
    Hb.bottomLeftCorner(N, p) = tb.H_block(std::nullopt, t);
    Sb.topLeftCorner(p, p) = tb.S_block(s, t);
    Sb.topRightCorner(p, N) = tb.S_block(s, std::nullopt) * w.asDiagonal();
    Sb.bottomLeftCorner(N, p) = tb.S_block(std::nullopt, t);
  }
  const bool real = real_ && is_real(Hb) && is_real(Sb);
  parallel_for(computed_samples(z_.size(), real), [&](std::size_t k) {
    // columns belonging to nodes carry the factor z; the identity block does not
    Eigen::MatrixXcd Mh = Hb, Ms = Sb;
    Mh.topRightCorner(p, N) *= z_[k];
    Mh.bottomRightCorner(N, N) *= z_[k];
    Ms.topRightCorner(p, N) *= z_[k];
    Ms.bottomRightCorner(N, N) *= z_[k];
    Mh.bottomRightCorner(N, N) += Eigen::MatrixXcd::Identity(N, N);
    const Eigen::MatrixXcd M = Mh - lambda_ * Ms;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    const Complex det_m = lu.determinant();
    if (lu.rcond() > rcond_floor && finite(det_m)) {
      // det(M - e Ms) = det M * det(I - e M^{-1} Ms)
      const Eigen::MatrixXcd X = -lu.solve(Ms);
      out[k] = det_m * factorial_d(j) * elementary_symmetric(X, j);
      return;
    }
    std::vector<Complex> h(static_cast<std::size_t>(m * m)), sv(static_cast<std::size_t>(m * m));
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) {
        h[static_cast<std::size_t>(r * m + c)] = Mh(r, c);
        sv[static_cast<std::size_t>(r * m + c)] = Ms(r, c);
      }
    }
    out[k] = affine_determinant_derivative(h, sv, static_cast<std::size_t>(m), lambda_, j);
  });
  mirror(out, real);
  real_samples = real;
  return out;
}

std::vector<Complex> BorderedSeries::point_samples(std::span<const double> s,
                                                   std::span<const double> t, unsigned j,
                                                   bool& real_samples) const {
  if (s.size() != t.size()) throw ConfigError("s and t point lists differ in length");
  if (j > 0) return derivative_samples(s, t, j, real_samples);
  if (s.empty()) {
    real_samples = real_;
    return det_samples_;
  }
  const std::size_t p = s.size();
  const auto g = grid_samples(s.first(p - 1), t.first(p - 1), s.last(1), t.last(1), real_samples);
  std::vector<Complex> v(z_.size());
  for (std::size_t k = 0; k < z_.size(); ++k) v[k] = g[k](0, 0);
  return v;
}

std::vector<Complex> BorderedSeries::coefficients(std::span<const double> s,
                                                  std::span<const double> t, unsigned j) const {
  bool real = false;
  const auto v = point_samples(s, t, j, real);
  const std::size_t K = z_.size();
  std::vector<Complex> c(degree() + 1);
  for (std::size_t n = 0; n <= degree(); ++n) {
    Complex acc{};
    for (std::size_t k = 0; k < K; ++k) {
      acc += v[k] * std::pow(std::conj(z_[k]), static_cast<double>(n));
    }
    c[n] = acc / static_cast<double>(K);
    if (real) c[n].imag(0.0);
  }
  return c;
}

Complex BorderedSeries::partial_sum(std::span<const double> s, std::span<const double> t,
                                    unsigned j, std::size_t last) const {
  const auto omega = sample_weights(last);
  bool real = false;
  const auto v = point_samples(s, t, j, real);
  Complex acc{};
  for (std::size_t k = 0; k < v.size(); ++k) acc += omega[k] * v[k];
  if (real) acc.imag(0.0);
  return acc;
}

Eigen::MatrixXcd BorderedSeries::grid(std::span<const double> s_fixed,
                                      std::span<const double> t_fixed,
                                      std::span<const double> s_free,
                                      std::span<const double> t_free, std::size_t last) const {
  const auto omega = sample_weights(last);
  bool real = false;
  const auto samples = grid_samples(s_fixed, t_fixed, s_free, t_free, real);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(s_free.size()),
                                                static_cast<Eigen::Index>(t_free.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) out += omega[k] * samples[k];
  if (real) out.imag().setZero();
  return out;
}

MinorEvaluator::MinorEvaluator(std::shared_ptr<const NodeTables> tables, TraceBounds bounds,
                               Complex lambda, double target_eps, SeriesOptions options,
                               std::optional<double> radius)
    : tables_(std::move(tables)),
      bounds_(bounds),
      lambda_(lambda),
      target_eps_(target_eps),
      options_(options),
      radius_(radius.value_or(std::abs(lambda))) {
  check_bounds(bounds_);
  if (!(target_eps_ > 0.0)) throw ConfigError("target_eps must be positive");
  if (!finite(lambda_)) throw ConfigError("lambda must be finite");
  if (radius_ < std::abs(lambda_) * (1.0 - 1e-12)) throw ConfigError("radius must cover |lambda|");

  // mass of the diagonal beyond the truncation radius, on both sides
  const KernelPair& k = tables_->kernel();
  const double R = tables_->rule().truncation_radius;
  const double far = R + std::max(3.0 * R, 8.0 * k.decay_radius());
  const QuadratureRule outer = build_rule(RuleKind::GaussLegendreTruncated, 64, 1.0);
  const double half = 0.5 * (far - R);
  tail_mass_h_ = 0.0;
  tail_mass_s_ = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double x = R + half * (outer.nodes[i] + 1.0);
    for (double sx : {x, -x}) {
      tail_mass_h_ += outer.weights[i] * half * std::abs(k.H(sx, sx));
      tail_mass_s_ += outer.weights[i] * half * std::abs(k.S(sx, sx));
    }
  }
  if (options_.method != SeriesMethod::Direct) {
    bordered_ = std::make_shared<const BorderedSeries>(tables_, lambda_);
  }
}

const BorderedSeries& MinorEvaluator::bordered() const {
  if (!bordered_) throw ConfigError("bordered route disabled by series.method = direct");
  return *bordered_;
}

std::size_t MinorEvaluator::uncapped_last_term(std::size_t p, unsigned j) const {
  return truncation_N(bounds_, p, radius_, target_eps_, options_.max_terms, j);
}

std::size_t MinorEvaluator::last_term(std::size_t p, unsigned j) const {
  std::size_t n;
  try {
    n = uncapped_last_term(p, j);
  } catch (const CostLimitError&) {
    n = options_.max_terms;
  }
  return std::min(n, tables_->size());
}

double MinorEvaluator::truncation_bound(std::size_t p, unsigned j) const {
  std::size_t n;
  try {
    n = uncapped_last_term(p, j);
  } catch (const CostLimitError&) {
    n = options_.max_terms;
  }
  return tail_bound(bounds_, p, radius_, n, j);
}

double MinorEvaluator::quadrature_tail(std::size_t p, unsigned j) const {
  const double rho = j == 0 ? radius_ : radius_ + 1.0;
  const double c = c_factor(rho);
  const double scale = p == 0 ? 1.0 : std::pow(bounds_.M, 2.0 * static_cast<double>(p));
  const double mass = tail_mass_h_ + rho * tail_mass_s_;
  return factorial_d(j) * scale * std::pow(c, static_cast<double>(p + 1)) * mass *
         std::exp(c * bounds_.max_trace());
}

double MinorEvaluator::error_bar(std::size_t p, unsigned j) const {
  return truncation_bound(p, j) + quadrature_tail(p, j);
}

bool MinorEvaluator::use_direct(std::size_t p, std::size_t last) const {
  switch (options_.method) {
    case SeriesMethod::Direct: return true;
    case SeriesMethod::Bordered: return false;
    case SeriesMethod::Automatic: break;
  }
  if (p + last > max_compound_order) return false;
  std::uint64_t total = 0;
  for (std::size_t n = 0; n <= last; ++n) {
    const std::uint64_t c = binomial(tables_->size(), n);
    if (c > options_.max_tuples || total > options_.max_tuples - c) return false;
    total += c;
  }
  return true;
}

MinorValue MinorEvaluator::evaluate(std::span<const double> s, std::span<const double> t,
                                    unsigned j) const {
  if (s.size() != t.size()) throw ConfigError("s and t point lists differ in length");
  if (s.size() > max_compound_order) throw ConfigError("minor order exceeds 64");
  bool capped = false;
  std::size_t certified;
  try {
    certified = uncapped_last_term(s.size(), j);
  } catch (const CostLimitError&) {
    certified = options_.max_terms;
    capped = true;
  }
  const std::size_t last = std::min(certified, tables_->size());
  MinorValue out;
  out.quadrature_tail = quadrature_tail(s.size(), j);
  if (use_direct(s.size(), last)) {
    out.method = SeriesMethod::Direct;
    Complex acc{};
    for (std::size_t n = 0; n <= last; ++n) {
      try {
        acc += symmetric_tuple_sum(*tables_, n, s, t, lambda_, j, options_.max_tuples);
      } catch (const CostLimitError& e) {
        out.value = acc;
        out.terms_used = n;
        out.truncation_bound = n == 0 ? std::numeric_limits<double>::max()
                                      : tail_bound(bounds_, s.size(), radius_, n - 1, j);
        throw TruncationError(e.what(), out);
      }
    }
    out.value = acc;
  } else {
    out.method = SeriesMethod::Bordered;
    out.value = bordered().partial_sum(s, t, j, last);
  }
  out.terms_used = last + 1;
  out.truncation_bound = tail_bound(bounds_, s.size(), radius_, certified, j);
  if (!finite(out.value)) throw EvaluationError("non-finite minor", s.empty() ? 0.0 : s[0], t.empty() ? 0.0 : t[0]);
  if (capped) {
    throw TruncationError("truncation target " + std::to_string(target_eps_) +
                              " not reached within series.max_terms = " +
                              std::to_string(options_.max_terms),
                          out);
  }
  return out;
}

Eigen::MatrixXcd MinorEvaluator::grid(std::span<const double> s_fixed,
                                      std::span<const double> t_fixed,
                                      std::span<const double> s_free,
                                      std::span<const double> t_free, unsigned j) const {
  if (s_fixed.size() != t_fixed.size()) throw ConfigError("fixed point lists differ in length");
  const std::size_t p = s_fixed.size() + 1;
  if (j == 0 && options_.method != SeriesMethod::Direct) {
    const std::size_t last = std::min(uncapped_last_term(p, 0), tables_->size());
    if (!use_direct(p, last)) return bordered().grid(s_fixed, t_fixed, s_free, t_free, last);
  }
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(s_free.size()),
                       static_cast<Eigen::Index>(t_free.size()));
  std::vector<double> s(p), t(p);
  for (std::size_t a = 0; a < s_free.size(); ++a) {
    for (std::size_t b = 0; b < t_free.size(); ++b) {
      s[0] = s_free[a];
      t[0] = t_free[b];
      std::copy(s_fixed.begin(), s_fixed.end(), s.begin() + 1);
      std::copy(t_fixed.begin(), t_fixed.end(), t.begin() + 1);
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = evaluate(s, t, j).value;
    }
  }
  return out;
}

MinorValue minor_Dp(const KernelPair& k, const QuadratureRule& q, const MinorRequest& req,
                    const TraceBounds& b, const SeriesOptions& options) {
  if (req.s_points.size() != req.p || req.t_points.size() != req.p) {
    throw ConfigError("minor request needs p s-points and p t-points");
  }
  auto tables = std::make_shared<const NodeTables>(k, q);
  const MinorEvaluator ev(tables, b, req.lambda, req.target_eps, options);
  return ev.evaluate(req.s_points, req.t_points, req.derivative_order);
}

std::vector<MinorValue> minor_Dp_scan(const KernelPair& k, const QuadratureRule& q,
                                      std::size_t p, std::span<const double> s,
                                      std::span<const double> t,
                                      std::span<const Complex> lambdas, const TraceBounds& b,
                                      double target_eps, const SeriesOptions& options) {
  if (lambdas.empty()) throw ConfigError("lambda list is empty");
  if (s.size() != p || t.size() != p) throw ConfigError("scan needs p s-points and p t-points");
  double rho = 0.0;
  for (Complex l : lambdas) rho = std::max(rho, std::abs(l));
  auto tables = std::make_shared<const NodeTables>(k, q);
  std::vector<MinorValue> out(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) {
    const MinorEvaluator ev(tables, b, lambdas[i], target_eps, options, rho);
    out[i] = ev.evaluate(s, t);
  });
  return out;
}

}  // namespace fredholm
