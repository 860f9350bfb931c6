#include "fredholm/spectral_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fredholm {

namespace {

bool contains(const std::vector<double>& v, double x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<double> without(const std::vector<double>& v, std::size_t i) {
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k != i) out.push_back(v[k]);
  }
  return out;
}

// |det T_lambda| on (a, piv_s; b, piv_t).
double compound_magnitude(const NodeTables& tb, Complex lambda, double a, double b,
                          const std::vector<double>& piv_s, const std::vector<double>& piv_t) {
  std::vector<double> rows{a}, cols{b};
  rows.insert(rows.end(), piv_s.begin(), piv_s.end());
  cols.insert(cols.end(), piv_t.begin(), piv_t.end());
  const Eigen::MatrixXcd m = tb.T_block(lambda, std::span<const double>(rows), std::span<const double>(cols));
  return std::abs(Eigen::PartialPivLU<Eigen::MatrixXcd>(m).determinant());
}

}  // namespace

std::vector<double> uniform_grid(double radius, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {0.0};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

double default_tau(const std::shared_ptr<const NodeTables>& tables, const TraceBounds& b,
                   Complex lambda0, double target_eps, std::size_t d_max,
                   const SeriesOptions& options) {
  const double step = 0.25 * std::max(1.0, std::abs(lambda0));
  const Complex offsets[] = {{0, 0}, {step, 0}, {-step, 0}, {0, step}, {0, -step}};
  double scale = 0.0;
  double bar = 0.0;
  for (Complex off : offsets) {
    const MinorEvaluator ev(tables, b, lambda0 + off, target_eps, options);
    scale = std::max(scale, std::abs(ev.evaluate({}, {}).value));
    if (off == Complex{}) {
      for (std::size_t p = 0; p <= d_max; ++p) bar = std::max(bar, ev.error_bar(p, 0));
    }
  }
  return std::max(1e4 * std::numeric_limits<double>::epsilon() * scale, 10.0 * bar * (1.0 + 1e-9));
}

IndexReport find_index(const MinorEvaluator& ev, const IndexOptions& options) {
  if (options.grid.empty()) throw ConfigError("index.grid is empty");
  const std::vector<double>& grid = options.grid;
  IndexReport rep;
  rep.lambda0 = ev.lambda();
  rep.search_grid_size = grid.size();
  const bool explicit_tau = options.tau > 0.0;
  rep.tau = explicit_tau ? options.tau
                         : default_tau(ev.shared_tables(), ev.bounds(), ev.lambda(),
                                       ev.target_eps(), options.d_max, ev.options());

  for (unsigned r = 0; r <= options.r_max; ++r) {
    for (std::size_t p = 0; p <= options.d_max; ++p) {
      const double bar = ev.error_bar(p, r);
      rep.error_bar = std::max(rep.error_bar, bar);
      // derivative levels have larger bars; a default threshold grows to cover them
      if (!explicit_tau) rep.tau = std::max(rep.tau, 10.0 * bar * (1.0 + 1e-9));
      if (rep.tau < 10.0 * bar) {
        throw ConfigError("index.tau = " + std::to_string(rep.tau) +
                          " is below 10 x the series error bar " + std::to_string(bar) +
                          " at p = " + std::to_string(p));
      }
    }
    std::vector<double> piv_s, piv_t;
    for (std::size_t p = 0; p <= options.d_max; ++p) {
      if (p == 0) {
        const Complex v = ev.evaluate({}, {}, r).value;
        rep.level_maxima.push_back(std::abs(v));
        if (std::abs(v) > rep.tau) {
          rep.d = 0;
          rep.r = r;
          rep.delta = v;
          rep.anomaly = r > 0;
          return rep;
        }
        continue;
      }
      const Eigen::MatrixXcd vals = ev.grid(piv_s, piv_t, grid, grid, r);
      double best = -1.0;
      std::size_t ba = 0, bb = 0;
      for (std::size_t a = 0; a < grid.size(); ++a) {
        if (contains(piv_s, grid[a])) continue;
        for (std::size_t b = 0; b < grid.size(); ++b) {
          if (contains(piv_t, grid[b])) continue;
          const double m = std::abs(vals(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
          if (m > best) {
            best = m;
            ba = a;
            bb = b;
          }
        }
      }
      if (best < 0.0) break;  // grid exhausted
      rep.level_maxima.push_back(best);
      if (best > rep.tau) {
        rep.d = p;
        rep.r = r;
        rep.base_s = piv_s;
        rep.base_t = piv_t;
        rep.base_s.insert(rep.base_s.begin(), grid[ba]);
        rep.base_t.insert(rep.base_t.begin(), grid[bb]);
        rep.delta = vals(static_cast<Eigen::Index>(ba), static_cast<Eigen::Index>(bb));
        rep.condition = 1.0;
        rep.anomaly = r > 0;
        return rep;
      }
      // the level vanishes: pick the pivot from the plain compound instead of noise
      double best_c = 0.0;
      std::size_t ca = ba, cb = bb;
      for (std::size_t a = 0; a < grid.size(); ++a) {
        if (contains(piv_s, grid[a])) continue;
        for (std::size_t b = 0; b < grid.size(); ++b) {
          if (contains(piv_t, grid[b])) continue;
          const double m = compound_magnitude(ev.tables(), ev.lambda(), grid[a], grid[b], piv_s, piv_t);
          if (m > best_c) {
            best_c = m;
            ca = a;
            cb = b;
          }
        }
      }
      piv_s.insert(piv_s.begin(), grid[ca]);
      piv_t.insert(piv_t.begin(), grid[cb]);
    }
  }
  throw IndexNotFoundError("no minor above tau = " + std::to_string(rep.tau) + " for p <= " +
                           std::to_string(options.d_max) + ", r <= " +
                           std::to_string(options.r_max) +
                           " (tau too large, grid too coarse, or d above index.d_max)");
}

IndexReport refine_base_points(const MinorEvaluator& ev, const IndexReport& coarse,
                               double half_width, unsigned sweeps) {
  IndexReport rep = coarse;
  if (rep.d == 0 || rep.base_s.size() != rep.d || rep.base_t.size() != rep.d) return rep;
  const auto r = static_cast<unsigned>(rep.r);
  double current = std::abs(rep.delta);
  const double coarse_grid_max = current / std::max(rep.condition, 1e-300);

  // |D_d| with coordinate i of the s (or t) points replaced by x
  auto value_at = [&](bool row, std::size_t i, double x) -> Complex {
    const std::vector<double> fs = without(rep.base_s, i), ft = without(rep.base_t, i);
    const double sx = row ? x : rep.base_s[i];
    const double tx = row ? rep.base_t[i] : x;
    const double sv[] = {sx}, tv[] = {tx};
    return ev.grid(fs, ft, sv, tv, r)(0, 0);
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  try {
    for (unsigned sweep = 0; sweep < sweeps; ++sweep) {
      for (std::size_t i = 0; i < rep.d; ++i) {
        for (bool row : {true, false}) {
          double& coord = row ? rep.base_s[i] : rep.base_t[i];
          double lo = coord - half_width, hi = coord + half_width;
          double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
          double f1 = std::abs(value_at(row, i, x1)), f2 = std::abs(value_at(row, i, x2));
          for (int it = 0; it < 30; ++it) {
            if (f1 > f2) {
              hi = x2;
              x2 = x1;
              f2 = f1;
              x1 = hi - inv_phi * (hi - lo);
              f1 = std::abs(value_at(row, i, x1));
            } else {
              lo = x1;
              x1 = x2;
              f1 = f2;
              x2 = lo + inv_phi * (hi - lo);
              f2 = std::abs(value_at(row, i, x2));
            }
          }
          const double cand = f1 > f2 ? x1 : x2;
          const Complex v = value_at(row, i, cand);
          if (std::abs(v) > current) {
            coord = cand;
            current = std::abs(v);
            rep.delta = v;
          }
        }
      }
    }
  } catch (const Error&) {
    return coarse;
  }
  rep.condition = current / std::max(coarse_grid_max, 1e-300);
  return rep;
}

}  // namespace fredholm
