#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "fredholm/error.hpp"
#include "fredholm/series.hpp"

namespace fredholm {

/// Outcome of the index search at lambda0.
struct IndexReport {
  Complex lambda0{};
  std::size_t d = 0;
  std::size_t r = 0;
  std::vector<double> base_s;
  std::vector<double> base_t;
  Complex delta{};
  std::size_t search_grid_size = 0;
  double tau = 0.0;
  /// Largest series error bar over the levels examined.
  double error_bar = 0.0;
  /// |delta| over the largest |D_d| seen on the grid.
  double condition = 1.0;
  /// Largest |D_p^{(r)}| found at each level examined, in search order.
  std::vector<double> level_maxima;
  /// r > 0 came out, which the theory rules out; signals failing numerics.
  bool anomaly = false;
};

struct IndexOptions {
  double tau = 0.0;  ///< zero threshold; 0 selects default_tau, raised to 10x the bar of every level
  std::size_t d_max = 6;
  unsigned r_max = 2;
  std::vector<double> grid;
};

/// No level up to (d_max, r_max) has a minor above tau on the grid.
class IndexNotFoundError : public Error {
 public:
  using Error::Error;
};

/// max(1e4 * eps_machine * max |D_0| over lambda0 and four neighbours at distance
/// 0.25 max(1, |lambda0|), 10 * the largest error bar for p <= d_max).
double default_tau(const std::shared_ptr<const NodeTables>& tables, const TraceBounds& b,
                   Complex lambda0, double target_eps, std::size_t d_max,
                   const SeriesOptions& options = {});

/// Greedy search for d(lambda0), r(lambda0) and base points. At each level every grid point
/// pair is tried as the new (s', t') with the previous pivots kept; a level that stays below
/// tau contributes the pair maximizing the plain compound of T as its pivot.
/// Throws ConfigError when an explicit tau is below 10 times the series error bar.
IndexReport find_index(const MinorEvaluator& ev, const IndexOptions& options);

/// Coordinate-wise golden-section maximization of |D_d^{(r)}| around the base points
/// (two sweeps, brackets of +-half_width); a step is kept only if it increases |delta|.
IndexReport refine_base_points(const MinorEvaluator& ev, const IndexReport& coarse,
                               double half_width = 0.5, unsigned sweeps = 2);

/// Uniform grid of n points on [-radius, radius].
std::vector<double> uniform_grid(double radius, std::size_t n);

}  // namespace fredholm
