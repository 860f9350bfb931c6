#include "run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "fredholm/nystrom.hpp"
#include "fredholm/parallel.hpp"
#include "fredholm/solver.hpp"
#include "fredholm/spectral_index.hpp"

namespace fredholm::cli {

namespace {

using nlohmann::json;

json cjson(Complex v) { return json{{"re", v.real()}, {"im", v.imag()}}; }

json cjson_list(const std::vector<Complex>& vs) {
  json out = json::array();
  for (Complex v : vs) out.push_back(cjson(v));
  return out;
}

void ensure_finite(const json& j, const std::string& path) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw Error("report value " + path + " is not finite");
  }
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) ensure_finite(v, path + "." + k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) ensure_finite(j[i], path + "[" + std::to_string(i) + "]");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
  ensure_finite(j, "");
  write_text(path, j.dump(2) + "\n");
}

std::string g17(double x) {
  if (!std::isfinite(x)) throw Error("CSV value is not finite");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json minor_json(const MinorValue& v) {
  return json{{"value", cjson(v.value)},
              {"terms_used", v.terms_used},
              {"truncation_bound", v.truncation_bound},
              {"quadrature_tail", v.quadrature_tail},
              {"method", std::string(to_string(v.method))}};
}

json bounds_json(const TraceBounds& b) {
  return json{{"M", b.M}, {"trace_A", b.trace_A}, {"trace_Atilde", b.trace_Atilde}, {"error", b.error}};
}

json index_json(const IndexReport& r) {
  return json{{"lambda0", cjson(r.lambda0)},
              {"d", r.d},
              {"r", r.r},
              {"base_s", r.base_s},
              {"base_t", r.base_t},
              {"delta", cjson(r.delta)},
              {"search_grid_size", r.search_grid_size},
              {"tau", r.tau},
              {"error_bar", r.error_bar},
              {"condition", r.condition},
              {"level_maxima", r.level_maxima},
              {"anomaly", r.anomaly},
              {"r_zero", r.r == 0 ? "consistent" : "violated"}};
}

struct Context {
  const RunConfig& cfg;
  KernelPair kernel;
  QuadratureRule rule;
  TraceBounds bounds;
  std::shared_ptr<const NodeTables> tables;
};

TraceBounds bounds_for(const RunConfig& cfg, const KernelPair& k, const QuadratureRule& q) {
  if (cfg.trace_bounds) return *cfg.trace_bounds;
  if (q.size() >= 64) return estimate_trace_bounds(k, q);
  return estimate_trace_bounds(k, build_rule(q.kind, 64, q.kind == RuleKind::GaussHermiteWeighted
                                                             ? 1.0
                                                             : q.truncation_radius));
}

IndexReport locate(const Context& c, const std::shared_ptr<const MinorEvaluator>& ev) {
  IndexOptions opt;
  opt.tau = c.cfg.index.tau;
  opt.d_max = c.cfg.index.d_max;
  opt.grid = c.cfg.index.grid.empty() ? uniform_grid(c.kernel.decay_radius(), 25) : c.cfg.index.grid;
  IndexReport rep = find_index(*ev, opt);
  if (c.cfg.index.refine && rep.d > 0) {
    const double spacing = opt.grid.size() > 1
                               ? (opt.grid.back() - opt.grid.front()) / static_cast<double>(opt.grid.size() - 1)
                               : 0.5;
    rep = refine_base_points(*ev, rep, std::abs(spacing));
  }
  return rep;
}

int det_scan(const Context& c, const std::filesystem::path& dir, json& report, RunResult& res) {
  const auto values = minor_Dp_scan(c.kernel, c.rule, 0, {}, {}, c.cfg.scan_lambdas, c.bounds,
                                    c.cfg.target_eps, c.cfg.series);
  std::string csv = "re_lambda,im_lambda,re_D0,im_D0,truncation_bound,quad_tail\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Complex l = c.cfg.scan_lambdas[i];
    csv += g17(l.real()) + "," + g17(l.imag()) + "," + g17(values[i].value.real()) + "," +
           g17(values[i].value.imag()) + "," + g17(values[i].truncation_bound) + "," +
           g17(values[i].quadrature_tail) + "\n";
  }
  write_text(dir / "det_scan.csv", csv);
  res.files.push_back("det_scan.csv");
  report["rows"] = values.size();
  return exit_ok;
}

int minor_eval(const Context& c, const std::filesystem::path& dir, json&, RunResult& res) {
  const auto& m = c.cfg.minor;
  MinorRequest req{m.s.size(), m.s, m.t, m.lambda, m.derivative_order, c.cfg.target_eps};
  json out{{"p", req.p}, {"s", m.s}, {"t", m.t}, {"lambda", cjson(m.lambda)},
           {"derivative_order", m.derivative_order}, {"target_eps", c.cfg.target_eps}};
  try {
    out.update(minor_json(minor_Dp(c.kernel, c.rule, req, c.bounds, c.cfg.series)));
  } catch (const TruncationError& e) {
    out.update(minor_json(e.best_effort()));
    out["error"] = e.what();
    write_json(dir / "minor.json", out);
    res.files.push_back("minor.json");
    throw;
  }
  write_json(dir / "minor.json", out);
  res.files.push_back("minor.json");
  return exit_ok;
}

int index_cmd(const Context& c, const std::filesystem::path& dir, json&, RunResult& res) {
  auto ev = std::make_shared<const MinorEvaluator>(c.tables, c.bounds, c.cfg.index_lambda,
                                                   c.cfg.target_eps, c.cfg.series);
  write_json(dir / "index.json", index_json(locate(c, ev)));
  res.files.push_back("index.json");
  return exit_ok;
}

int solve_cmd(const Context& c, const std::filesystem::path& dir, json&, RunResult& res) {
  const auto& sc = c.cfg.solve;
  auto ev = std::make_shared<const MinorEvaluator>(c.tables, c.bounds, sc.lambda, c.cfg.target_eps,
                                                   c.cfg.series);
  const IndexReport idx = locate(c, ev);
  SolveOptions opt;
  opt.solvability_tol = sc.solvability_tol;
  opt.residual_tol = sc.residual_tol;
  opt.output_grid = sc.output_grid.empty() ? uniform_grid(c.kernel.decay_radius(), 81) : sc.output_grid;
  const RightHandSide g = make_rhs(sc.g, c.rule);

  auto report_json = [&](const SolutionReport& rep) {
    json basis = json::array();
    for (const auto& phi : rep.homogeneous_basis) {
      basis.push_back(json{{"raw_norm", phi.raw_norm()}, {"samples", cjson_list(phi.sample(rep.output_grid))}});
    }
    json out{{"lambda", cjson(sc.lambda)},
             {"rhs", sc.rhs},
             {"index", index_json(rep.index)},
             {"adjoint_pairings", cjson_list(rep.adjoint_pairings)},
             {"pairing_tolerance", rep.pairing_tolerance},
             {"solvable", rep.solvable},
             {"g_norm", rep.g_norm},
             {"homogeneous_basis", basis},
             {"output_grid", rep.output_grid}};
    if (rep.solvable) {
      out["f_norm"] = rep.f_norm;
      out["residual_l2"] = rep.residual_l2;
      out["residual_sup"] = rep.residual_sup;
    }
    return out;
  };
  auto write_csv = [&](const SolutionReport& rep) {
    std::string csv = "s,re_f,im_f\n";
    for (std::size_t i = 0; i < rep.output_grid.size(); ++i) {
      csv += g17(rep.output_grid[i]) + "," + g17(rep.output_values[i].real()) + "," +
             g17(rep.output_values[i].imag()) + "\n";
    }
    write_text(dir / "solution.csv", csv);
    res.files.push_back("solution.csv");
  };

  SolutionReport rep;
  try {
    rep = solve(ev, idx, g, opt);
  } catch (const ResidualError& e) {
    json out = report_json(e.report());
    out["error"] = e.what();
    write_json(dir / "solution.json", out);
    res.files.push_back("solution.json");
    write_csv(e.report());
    throw;
  }
  write_json(dir / "solution.json", report_json(rep));
  res.files.push_back("solution.json");
  if (!rep.solvable) return exit_not_solvable;
  write_csv(rep);
  return exit_ok;
}

int validate_cmd(const Context& c, const std::filesystem::path& dir, json&, RunResult& res) {
  bool passed = true;
  json out;
  const auto hs = check_hilbert_schmidt(c.kernel, c.rule);
  out["hilbert_schmidt"] = json{{"norm_H", hs.norm_H}, {"norm_S", hs.norm_S},
                                {"relative_change_H", hs.relative_change_H},
                                {"relative_change_S", hs.relative_change_S}, {"passed", hs.passed}};
  passed = passed && hs.passed;
  json carleman = json::array();
  for (Complex l : c.cfg.validate.lambdas) {
    const auto ck = check_carleman(c.kernel, c.rule, l);
    carleman.push_back(json{{"lambda", cjson(l)},
                            {"row_ratio_far", ck.row_ratio_far},
                            {"column_ratio_far", ck.column_ratio_far},
                            {"max_relative_jump", ck.max_relative_jump},
                            {"passed", ck.passed}});
    passed = passed && ck.passed;
  }
  out["carleman"] = carleman;
  json koch = json::array();
  for (std::size_t n : c.cfg.validate.von_koch_nodes) {
    const QuadratureRule q = build_rule(c.rule.kind, n, c.rule.kind == RuleKind::GaussHermiteWeighted
                                                            ? 1.0
                                                            : c.rule.truncation_radius);
    for (Complex l : c.cfg.validate.lambdas) {
      const auto vk = von_koch_check(discretize(c.kernel, q, l));
      const bool ok = vk.gap < 1e-10;
      koch.push_back(json{{"nodes", n}, {"lambda", cjson(l)}, {"lhs", cjson(vk.lhs)},
                          {"rhs", cjson(vk.rhs)}, {"gap", vk.gap}, {"passed", ok}});
      passed = passed && ok;
    }
  }
  out["von_koch"] = koch;
  out["trace_bounds"] = bounds_json(c.bounds);
  out["passed"] = passed;
  write_json(dir / "validate.json", out);
  res.files.push_back("validate.json");
  return passed ? exit_ok : exit_error;
}

}  // namespace

RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  json report{{"command", std::string(to_string(cfg.command))}};
  try {
    std::filesystem::create_directories(out_dir);
    const KernelPair& k = *cfg.kernel;
    QuadratureRule rule = build_rule(cfg.rule_kind, cfg.nodes, cfg.radius.value_or(k.default_quadrature_radius()));
    const TraceBounds b = bounds_for(cfg, k, rule);
    Context c{cfg, k, rule, b, std::make_shared<const NodeTables>(k, rule)};
    report["kernel"] = cfg.kernel_spec;
    report["quadrature"] = json{{"kind", std::string(to_string(rule.kind))},
                                {"nodes", rule.size()},
                                {"truncation_radius", rule.truncation_radius}};
    report["trace_bounds"] = bounds_json(b);
    switch (cfg.command) {
      case Command::DetScan: res.exit_code = det_scan(c, out_dir, report, res); break;
      case Command::MinorEval: res.exit_code = minor_eval(c, out_dir, report, res); break;
      case Command::Index: res.exit_code = index_cmd(c, out_dir, report, res); break;
      case Command::Solve: res.exit_code = solve_cmd(c, out_dir, report, res); break;
      case Command::Validate: res.exit_code = validate_cmd(c, out_dir, report, res); break;
    }
  } catch (const std::exception& e) {
    res.exit_code = exit_error;
    res.error = e.what();
  }
  report["exit_code"] = res.exit_code;
  report["status"] = res.exit_code == exit_ok ? "ok"
                     : res.exit_code == exit_not_solvable ? "not-solvable"
                     : res.error.empty() ? "failed" : "error";
  if (!res.error.empty()) report["error"] = res.error;
  report["outputs"] = res.files;
  if (!cfg.reproducible) {
    report["threads"] = thread_cap();
    report["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  try {
    write_json(out_dir / "run.json", report);
  } catch (const std::exception& e) {
    res.exit_code = exit_error;
    if (res.error.empty()) res.error = e.what();
  }
  return res;
}

void write_failure(const std::filesystem::path& out_dir, const std::string& error) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const json report{{"status", "error"}, {"exit_code", exit_error}, {"error", error}};
  std::ofstream(out_dir / "run.json", std::ios::binary | std::ios::trunc) << report.dump(2) << "\n";
}

}  // namespace fredholm::cli
