#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace fredholm::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

double positive(const json& v, const std::string& key) {
  const double x = number(v, key);
  if (!(x > 0.0)) fail(key, "must be positive");
  return x;
}

std::size_t count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "expected a non-negative integer");
  return static_cast<std::size_t>(v.get<long long>());
}

Complex complex_value(const json& v, const std::string& key) {
  if (v.is_number()) return {number(v, key), 0.0};
  if (v.is_array() && v.size() == 2) return {number(v[0], key + "[0]"), number(v[1], key + "[1]")};
  fail(key, "expected a number or [re, im]");
}

std::vector<double> real_list(const json& v, const std::string& key) {
  if (!v.is_array()) fail(key, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> grid_value(const json& v, const std::string& key) {
  if (v.is_array()) {
    auto out = real_list(v, key);
    if (out.empty()) fail(key, "grid is empty");
    return out;
  }
  check_keys(v, key, {"radius", "count"});
  if (!v.contains("radius") || !v.contains("count")) fail(key, "needs radius and count");
  const double r = positive(v["radius"], key + ".radius");
  const std::size_t n = count(v["count"], key + ".count");
  if (n == 0) fail(key + ".count", "grid is empty");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? 0.0 : -r + 2.0 * r * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> params_value(const json& obj, const std::string& path) {
  return obj.contains("params") ? real_list(obj["params"], join(path, "params")) : std::vector<double>{};
}

KernelFunction component(const json& v, const std::string& path) {
  if (v.is_null()) return zero_kernel();
  check_keys(v, path, {"name", "params", "expr", "decay_radius"});
  if (v.contains("name") == v.contains("expr")) fail(path, "give exactly one of name or expr");
  try {
    if (v.contains("name")) {
      if (!v["name"].is_string()) fail(join(path, "name"), "expected a string");
      if (v.contains("decay_radius")) fail(join(path, "decay_radius"), "only valid with expr");
      return builtin_component(v["name"].get<std::string>(), params_value(v, path));
    }
    if (!v["expr"].is_string()) fail(join(path, "expr"), "expected a string");
    if (v.contains("params")) fail(join(path, "params"), "only valid with name");
    if (!v.contains("decay_radius")) fail(join(path, "decay_radius"), "required with expr");
    return expression_kernel(v["expr"].get<std::string>(), positive(v["decay_radius"], join(path, "decay_radius")));
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("config key", 0) == 0) throw;
    fail(path, msg);
  }
}

KernelPair kernel_value(const json& v) {
  const std::string path = "kernel";
  if (!v.is_object()) fail(path, "expected an object");
  try {
    if (v.contains("name")) {
      check_keys(v, path, {"name", "params"});
      if (!v["name"].is_string()) fail("kernel.name", "expected a string");
      return builtin(v["name"].get<std::string>(), params_value(v, path));
    }
    check_keys(v, path, {"H", "S", "label"});
    if (!v.contains("H") && !v.contains("S")) fail(path, "needs name, or H and/or S");
    const KernelFunction h = v.contains("H") ? component(v["H"], "kernel.H") : zero_kernel();
    const KernelFunction s = v.contains("S") ? component(v["S"], "kernel.S") : zero_kernel();
    std::string label = v.value("label", std::string{});
    return KernelPair(h, s, label);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("config key", 0) == 0) throw;
    fail(path, msg);
  }
}

RealFunction rhs_value(const json& v, const std::string& path) {
  check_keys(v, path, {"name", "params", "expr"});
  if (v.contains("name") == v.contains("expr")) fail(path, "give exactly one of name or expr");
  try {
    if (v.contains("name")) {
      if (!v["name"].is_string()) fail(join(path, "name"), "expected a string");
      return builtin_function(v["name"].get<std::string>(), params_value(v, path));
    }
    if (!v["expr"].is_string()) fail(join(path, "expr"), "expected a string");
    return expression_function(v["expr"].get<std::string>());
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("config key", 0) == 0) throw;
    fail(path, msg);
  }
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(join(path, key), "required");
  return obj[key];
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::DetScan: return "det-scan";
    case Command::MinorEval: return "minor-eval";
    case Command::Index: return "index";
    case Command::Solve: return "solve";
    case Command::Validate: return "validate";
  }
  return "unknown";
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "", {"schema", "command", "reproducible", "kernel", "quadrature", "series",
                       "trace_bounds", "det_scan", "minor", "index", "solve", "validate"});
  RunConfig cfg;
  const json& schema = require(doc, "", "schema");
  if (!schema.is_number_integer() || schema.get<int>() != 1) fail("schema", "only schema 1 is supported");

  const json& cmd = require(doc, "", "command");
  if (!cmd.is_string()) fail("command", "expected a string");
  const auto name = cmd.get<std::string>();
  if (name == "det-scan") cfg.command = Command::DetScan;
  else if (name == "minor-eval") cfg.command = Command::MinorEval;
  else if (name == "index") cfg.command = Command::Index;
  else if (name == "solve") cfg.command = Command::Solve;
  else if (name == "validate") cfg.command = Command::Validate;
  else fail("command", "expected det-scan, minor-eval, index, solve or validate");

  if (doc.contains("reproducible")) {
    if (!doc["reproducible"].is_boolean()) fail("reproducible", "expected true or false");
    cfg.reproducible = doc["reproducible"].get<bool>();
  }

  cfg.kernel_spec = require(doc, "", "kernel");
  cfg.kernel = kernel_value(cfg.kernel_spec);

  if (doc.contains("quadrature")) {
    const json& q = doc["quadrature"];
    check_keys(q, "quadrature", {"kind", "nodes", "radius"});
    if (q.contains("kind")) {
      if (!q["kind"].is_string()) fail("quadrature.kind", "expected a string");
      try {
        cfg.rule_kind = parse_rule_kind(q["kind"].get<std::string>());
      } catch (const ConfigError& e) {
        fail("quadrature.kind", e.what());
      }
    }
    if (q.contains("nodes")) cfg.nodes = count(q["nodes"], "quadrature.nodes");
    if (cfg.nodes < 2 || cfg.nodes > max_rule_nodes) fail("quadrature.nodes", "must lie in [2, 2048]");
    if (q.contains("radius")) cfg.radius = positive(q["radius"], "quadrature.radius");
  }

  if (doc.contains("series")) {
    const json& s = doc["series"];
    check_keys(s, "series", {"max_tuples", "max_terms", "method", "target_eps"});
    if (s.contains("max_tuples")) cfg.series.max_tuples = count(s["max_tuples"], "series.max_tuples");
    if (s.contains("max_terms")) cfg.series.max_terms = count(s["max_terms"], "series.max_terms");
    if (s.contains("target_eps")) cfg.target_eps = positive(s["target_eps"], "series.target_eps");
    if (s.contains("method")) {
      if (!s["method"].is_string()) fail("series.method", "expected a string");
      try {
        cfg.series.method = parse_series_method(s["method"].get<std::string>());
      } catch (const ConfigError& e) {
        fail("series.method", e.what());
      }
    }
  }

  if (doc.contains("trace_bounds")) {
    const json& b = doc["trace_bounds"];
    check_keys(b, "trace_bounds", {"M", "trace_A", "trace_Atilde"});
    TraceBounds tb;
    tb.M = number(require(b, "trace_bounds", "M"), "trace_bounds.M");
    tb.trace_A = number(require(b, "trace_bounds", "trace_A"), "trace_bounds.trace_A");
    tb.trace_Atilde = number(require(b, "trace_bounds", "trace_Atilde"), "trace_bounds.trace_Atilde");
    if (tb.M < 0 || tb.trace_A < 0 || tb.trace_Atilde < 0) fail("trace_bounds", "values must be >= 0");
    cfg.trace_bounds = tb;
  }

  if (doc.contains("det_scan") || cfg.command == Command::DetScan) {
    const json& d = require(doc, "", "det_scan");
    check_keys(d, "det_scan", {"lambdas", "from", "to", "count"});
    if (d.contains("lambdas")) {
      if (d.contains("from") || d.contains("to") || d.contains("count")) {
        fail("det_scan", "give either lambdas or from/to/count");
      }
      const json& l = d["lambdas"];
      if (!l.is_array() || l.empty()) fail("det_scan.lambdas", "expected a nonempty list");
      for (std::size_t i = 0; i < l.size(); ++i) {
        cfg.scan_lambdas.push_back(complex_value(l[i], "det_scan.lambdas[" + std::to_string(i) + "]"));
      }
    } else {
      const Complex a = complex_value(require(d, "det_scan", "from"), "det_scan.from");
      const Complex b = complex_value(require(d, "det_scan", "to"), "det_scan.to");
      const std::size_t n = count(require(d, "det_scan", "count"), "det_scan.count");
      if (n == 0) fail("det_scan.count", "lambda grid is empty");
      for (std::size_t i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        cfg.scan_lambdas.push_back(a + f * (b - a));
      }
    }
  }

  if (doc.contains("minor") || cfg.command == Command::MinorEval) {
    const json& m = require(doc, "", "minor");
    check_keys(m, "minor", {"p", "s", "t", "lambda", "derivative_order"});
    cfg.minor.s = m.contains("s") ? real_list(m["s"], "minor.s") : std::vector<double>{};
    cfg.minor.t = m.contains("t") ? real_list(m["t"], "minor.t") : std::vector<double>{};
    if (m.contains("p") && count(m["p"], "minor.p") != cfg.minor.s.size()) {
      fail("minor.p", "must equal the number of s points");
    }
    if (cfg.minor.s.size() != cfg.minor.t.size()) fail("minor.t", "needs as many points as minor.s");
    cfg.minor.lambda = complex_value(require(m, "minor", "lambda"), "minor.lambda");
    if (m.contains("derivative_order")) {
      cfg.minor.derivative_order = static_cast<unsigned>(count(m["derivative_order"], "minor.derivative_order"));
    }
  }

  if (doc.contains("index")) {
    const json& x = doc["index"];
    check_keys(x, "index", {"lambda", "tau", "d_max", "grid", "refine"});
    if (x.contains("lambda")) cfg.index_lambda = complex_value(x["lambda"], "index.lambda");
    if (x.contains("tau")) cfg.index.tau = positive(x["tau"], "index.tau");
    if (x.contains("d_max")) cfg.index.d_max = count(x["d_max"], "index.d_max");
    if (x.contains("grid")) cfg.index.grid = grid_value(x["grid"], "index.grid");
    if (x.contains("refine")) {
      if (!x["refine"].is_boolean()) fail("index.refine", "expected true or false");
      cfg.index.refine = x["refine"].get<bool>();
    }
  }
  if (cfg.command == Command::Index && !(doc.contains("index") && doc["index"].contains("lambda"))) {
    fail("index.lambda", "required");
  }

  if (doc.contains("solve") || cfg.command == Command::Solve) {
    const json& s = require(doc, "", "solve");
    check_keys(s, "solve", {"lambda", "rhs", "output_grid", "solvability_tol", "residual_tol"});
    cfg.solve.lambda = complex_value(require(s, "solve", "lambda"), "solve.lambda");
    cfg.solve.rhs = require(s, "solve", "rhs");
    cfg.solve.g = rhs_value(cfg.solve.rhs, "solve.rhs");
    if (s.contains("output_grid")) cfg.solve.output_grid = grid_value(s["output_grid"], "solve.output_grid");
    if (s.contains("solvability_tol")) cfg.solve.solvability_tol = positive(s["solvability_tol"], "solve.solvability_tol");
    if (s.contains("residual_tol")) cfg.solve.residual_tol = positive(s["residual_tol"], "solve.residual_tol");
  }

  if (doc.contains("validate")) {
    const json& v = doc["validate"];
    check_keys(v, "validate", {"lambdas", "von_koch_nodes"});
    if (v.contains("lambdas")) {
      const json& l = v["lambdas"];
      if (!l.is_array() || l.empty()) fail("validate.lambdas", "expected a nonempty list");
      cfg.validate.lambdas.clear();
      for (std::size_t i = 0; i < l.size(); ++i) {
        cfg.validate.lambdas.push_back(complex_value(l[i], "validate.lambdas[" + std::to_string(i) + "]"));
      }
    }
    if (v.contains("von_koch_nodes")) {
      const json& n = v["von_koch_nodes"];
      if (!n.is_array()) fail("validate.von_koch_nodes", "expected a list of integers");
      cfg.validate.von_koch_nodes.clear();
      for (std::size_t i = 0; i < n.size(); ++i) {
        const std::string key = "validate.von_koch_nodes[" + std::to_string(i) + "]";
        const std::size_t m = count(n[i], key);
        if (m < 2 || m > 24) fail(key, "must lie in [2, 24]");
        cfg.validate.von_koch_nodes.push_back(m);
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace fredholm::cli
