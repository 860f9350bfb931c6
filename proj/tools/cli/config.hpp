#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fredholm/kernels.hpp"
#include "fredholm/quadrature.hpp"
#include "fredholm/series.hpp"

namespace fredholm::cli {

enum class Command { DetScan, MinorEval, Index, Solve, Validate };

std::string_view to_string(Command c);

struct IndexSection {
  double tau = 0.0;
  std::size_t d_max = 6;
  std::vector<double> grid;  // empty: 25 points on [-R0, R0]
  bool refine = true;
};

struct SolveSection {
  Complex lambda{};
  nlohmann::json rhs;
  RealFunction g;
  std::vector<double> output_grid;
  double solvability_tol = 1e-6;
  double residual_tol = 1e-6;
};

struct MinorSection {
  std::vector<double> s;
  std::vector<double> t;
  Complex lambda{};
  unsigned derivative_order = 0;
};

struct ValidateSection {
  std::vector<Complex> lambdas{{0, 0}, {1, 0}, {-1, 0}, {0, 1}};
  std::vector<std::size_t> von_koch_nodes{4, 8, 12};
};

/// Everything a run needs, parsed and validated.
struct RunConfig {
  Command command = Command::DetScan;
  bool reproducible = false;
  nlohmann::json kernel_spec;
  std::optional<KernelPair> kernel;
  RuleKind rule_kind = RuleKind::GaussLegendreTruncated;
  std::size_t nodes = 64;
  std::optional<double> radius;  // default: the kernel's quadrature radius
  SeriesOptions series;
  double target_eps = 1e-12;
  std::optional<TraceBounds> trace_bounds;
  std::vector<Complex> scan_lambdas;
  MinorSection minor;
  IndexSection index;
  Complex index_lambda{};
  SolveSection solve;
  ValidateSection validate;
};

/// Parses and validates a configuration document; unknown keys are rejected and every
/// message names the offending key. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace fredholm::cli
