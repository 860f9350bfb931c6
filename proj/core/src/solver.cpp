#include "fredholm/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <string>
#include <unordered_map>

#include "fredholm/parallel.hpp"

namespace fredholm {

namespace {

std::vector<double> without(const std::vector<double>& v, std::size_t i) {
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k != i) out.push_back(v[k]);
  }
  return out;
}

std::vector<Complex> sample_function(const RealFunction& g, std::span<const double> xs) {
  std::vector<Complex> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = g(xs[i]);
    if (!std::isfinite(out[i].real()) || !std::isfinite(out[i].imag())) {
      throw EvaluationError("non-finite right-hand side", xs[i], 0.0);
    }
  }
  return out;
}

}  // namespace

RightHandSide make_rhs(RealFunction g, const QuadratureRule& q) {
  if (!g) throw ConfigError("right-hand side is empty");
  RightHandSide rhs{std::move(g), 0.0};
  rhs.norm_estimate = l2_norm(q, sample_function(rhs.eval_g, q.nodes));
  return rhs;
}

BasisFunction::BasisFunction(std::shared_ptr<const MinorEvaluator> ev, const IndexReport& idx,
                             std::size_t slot, bool adjoint)
    : ev_(std::move(ev)),
      fixed_s_(without(idx.base_s, slot)),
      fixed_t_(without(idx.base_t, slot)),
      partner_(adjoint ? idx.base_s.at(slot) : idx.base_t.at(slot)),
      r_(static_cast<unsigned>(idx.r)),
      adjoint_(adjoint) {
  const QuadratureRule& q = ev_->tables().rule();
  raw_norm_ = l2_norm(q, raw(q.nodes));
  if (!(raw_norm_ > 0.0) || !std::isfinite(raw_norm_)) {
    throw DiscretizationError("null function vanishes on the quadrature nodes");
  }
}

std::vector<Complex> BasisFunction::raw(std::span<const double> xs) const {
  const double partner[] = {partner_};
  std::vector<Complex> out(xs.size());
  if (!adjoint_) {
    const Eigen::MatrixXcd col = ev_->grid(fixed_s_, fixed_t_, xs, partner, r_);
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = col(static_cast<Eigen::Index>(i), 0);
  } else {
    const Eigen::MatrixXcd row = ev_->grid(fixed_s_, fixed_t_, partner, xs, r_);
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std::conj(row(0, static_cast<Eigen::Index>(i)));
  }
  return out;
}

std::vector<Complex> BasisFunction::sample(std::span<const double> xs) const {
  auto out = raw(xs);
  for (auto& v : out) v /= raw_norm_;
  return out;
}

Complex BasisFunction::operator()(double x) const {
  const double xs[] = {x};
  return sample(xs)[0];
}

std::vector<BasisFunction> homogeneous_basis(std::shared_ptr<const MinorEvaluator> ev,
                                             const IndexReport& idx) {
  std::vector<BasisFunction> out;
  for (std::size_t i = 0; i < idx.d; ++i) out.emplace_back(ev, idx, i, false);
  return out;
}

std::vector<BasisFunction> adjoint_basis(std::shared_ptr<const MinorEvaluator> ev,
                                         const IndexReport& idx) {
  std::vector<BasisFunction> out;
  for (std::size_t i = 0; i < idx.d; ++i) out.emplace_back(ev, idx, i, true);
  return out;
}

struct ParticularSolution::State {
  std::shared_ptr<const MinorEvaluator> ev;
  std::vector<double> base_s;
  std::vector<double> base_t;
  Complex delta;
  unsigned r;
  RealFunction g;
  std::vector<Complex> weighted_g;  // w_j g(x_j)
  mutable std::mutex mutex;
  std::unordered_map<std::uint64_t, std::vector<Complex>> rows;
};

ParticularSolution::ParticularSolution(std::shared_ptr<const MinorEvaluator> ev,
                                       const IndexReport& idx, RealFunction g)
    : state_(std::make_shared<State>()) {
  if (std::abs(idx.delta) == 0.0) throw ConfigError("delta vanishes");
  const QuadratureRule& q = ev->tables().rule();
  state_->ev = std::move(ev);
  state_->base_s = idx.base_s;
  state_->base_t = idx.base_t;
  state_->delta = idx.delta;
  state_->r = static_cast<unsigned>(idx.r);
  state_->g = std::move(g);
  state_->weighted_g = sample_function(state_->g, q.nodes);
  for (std::size_t j = 0; j < q.size(); ++j) state_->weighted_g[j] *= q.weights[j];
}

std::vector<Complex> ParticularSolution::sample(std::span<const double> xs) const {
  State& st = *state_;
  const QuadratureRule& q = st.ev->tables().rule();
  std::vector<double> missing;
  {
    std::lock_guard lock(st.mutex);
    for (double x : xs) {
      const auto key = std::bit_cast<std::uint64_t>(x);
      if (!st.rows.contains(key) &&
          std::find(missing.begin(), missing.end(), x) == missing.end()) {
        missing.push_back(x);
      }
    }
  }
  if (!missing.empty()) {
    const Eigen::MatrixXcd block = st.ev->grid(st.base_s, st.base_t, missing, q.nodes, st.r);
    std::lock_guard lock(st.mutex);
    for (std::size_t a = 0; a < missing.size(); ++a) {
      std::vector<Complex> row(q.size());
      for (std::size_t j = 0; j < q.size(); ++j) {
        row[j] = block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
      }
      st.rows.try_emplace(std::bit_cast<std::uint64_t>(missing[a]), std::move(row));
    }
  }
  const auto gx = sample_function(st.g, xs);
  std::vector<Complex> out(xs.size());
  std::lock_guard lock(st.mutex);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& row = st.rows.at(std::bit_cast<std::uint64_t>(xs[i]));
    Complex acc{};
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * st.weighted_g[j];
    out[i] = gx[i] - acc / st.delta;
  }
  return out;
}

Complex ParticularSolution::operator()(double x) const {
  const double xs[] = {x};
  return sample(xs)[0];
}

std::size_t ParticularSolution::cached_rows() const {
  std::lock_guard lock(state_->mutex);
  return state_->rows.size();
}

Residual equation_residual(const KernelPair& k, const QuadratureRule& q, Complex lambda,
                           const std::function<std::vector<Complex>(std::span<const double>)>& f,
                           const RealFunction& g, bool adjoint) {
  const QuadratureRule fine = refined(q);
  const std::size_t n = fine.size();
  const auto fv = f(fine.nodes);
  std::vector<Complex> gv(n);
  if (g) gv = sample_function(g, fine.nodes);
  std::vector<Complex> res(n);
  parallel_for(n, [&](std::size_t i) {
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) {
      const Complex kij = adjoint ? std::conj(eval_T(k, lambda, fine.nodes[j], fine.nodes[i]))
                                  : eval_T(k, lambda, fine.nodes[i], fine.nodes[j]);
      acc += kij * fine.weights[j] * fv[j];
    }
    res[i] = fv[i] + acc - gv[i];
  });
  Residual out;
  out.f_norm = l2_norm(fine, fv);
  out.g_norm = l2_norm(fine, gv);
  double sup_r = 0.0, sup_f = 0.0, sup_g = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sup_r = std::max(sup_r, std::abs(res[i]));
    sup_f = std::max(sup_f, std::abs(fv[i]));
    sup_g = std::max(sup_g, std::abs(gv[i]));
  }
  const double scale = out.f_norm + out.g_norm;
  out.l2 = scale > 0 ? l2_norm(fine, res) / scale : 0.0;
  out.sup = (sup_f + sup_g) > 0 ? sup_r / (sup_f + sup_g) : 0.0;
  return out;
}

SolutionReport solve(std::shared_ptr<const MinorEvaluator> ev, const IndexReport& idx,
                     const RightHandSide& g, const SolveOptions& options) {
  if (!g.eval_g) throw ConfigError("right-hand side is empty");
  if (std::abs(ev->lambda() - idx.lambda0) > 1e-14 * (1.0 + std::abs(idx.lambda0))) {
    throw ConfigError("index report belongs to a different lambda");
  }
  if (!(std::abs(idx.delta) > idx.tau)) throw ConfigError("|delta| does not exceed tau");
  if (idx.base_s.size() != idx.d || idx.base_t.size() != idx.d) {
    throw ConfigError("index report needs d base points");
  }
  const QuadratureRule& q = ev->tables().rule();
  SolutionReport rep;
  rep.index = idx;
  rep.homogeneous_basis = homogeneous_basis(ev, idx);
  rep.adjoint_basis = adjoint_basis(ev, idx);
  const auto g_nodes = sample_function(g.eval_g, q.nodes);
  rep.g_norm = l2_norm(q, g_nodes);
  rep.pairing_tolerance = options.solvability_tol * rep.g_norm;
  rep.solvable = true;
  for (const auto& psi : rep.adjoint_basis) {
    const Complex pairing = inner_product(q, g_nodes, psi.sample(q.nodes));
    rep.adjoint_pairings.push_back(pairing);
    if (std::abs(pairing) > rep.pairing_tolerance) rep.solvable = false;
  }
  rep.output_grid = options.output_grid;
  if (!rep.solvable) return rep;

  rep.particular.emplace(ev, idx, g.eval_g);
  const ParticularSolution& f = *rep.particular;
  const Residual res = equation_residual(
      ev->tables().kernel(), q, ev->lambda(),
      [&f](std::span<const double> xs) { return f.sample(xs); }, g.eval_g);
  rep.residual_l2 = res.l2;
  rep.residual_sup = res.sup;
  rep.f_norm = l2_norm(q, f.sample(q.nodes));
  if (!rep.output_grid.empty()) rep.output_values = f.sample(rep.output_grid);
  if (!(rep.residual_l2 <= options.residual_tol)) {
    throw ResidualError("relative residual " + std::to_string(rep.residual_l2) +
                            " exceeds solve.residual_tol",
                        std::make_shared<SolutionReport>(rep));
  }
  return rep;
}

}  // namespace fredholm
