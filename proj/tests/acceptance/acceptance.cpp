// Acceptance checks AC1..AC8. Usage: acceptance <fredholm binary> <golden config dir>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fredholm/compounds.hpp"
#include "fredholm/kernels.hpp"
#include "fredholm/nystrom.hpp"
#include "fredholm/quadrature.hpp"
#include "fredholm/series.hpp"
#include "fredholm/solver.hpp"
#include "fredholm/spectral_index.hpp"

namespace fs = std::filesystem;
using namespace fredholm;

namespace {

const double half_pi_root = std::sqrt(std::numbers::pi / 2.0);
const double lambda_star = std::sqrt(2.0 / std::numbers::pi);

struct Outcome {
  bool passed = true;
  std::string detail;
};

// Records the first few failures of one criterion.
class Ledger {
 public:
  void check(bool ok, const std::string& what) {
    if (ok) return;
    passed_ = false;
    if (++failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  bool passed() const { return passed_; }
  Outcome outcome(const std::string& summary) const {
    std::string d = summary;
    if (!passed_) {
      d += " | " + notes_;
      if (failures_ > 3) d += " (+" + std::to_string(failures_ - 3) + " more)";
    }
    return {passed_, d};
  }

 private:
  bool passed_ = true;
  int failures_ = 0;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

QuadratureRule legendre(const KernelPair& k, std::size_t n) {
  return build_rule(RuleKind::GaussLegendreTruncated, n, k.default_quadrature_radius());
}

std::shared_ptr<const MinorEvaluator> evaluator(const KernelPair& k, const QuadratureRule& q,
                                                Complex lambda, double eps = 1e-12) {
  auto tables = std::make_shared<const NodeTables>(k, q);
  return std::make_shared<const MinorEvaluator>(tables, estimate_trace_bounds(k, q), lambda, eps);
}

IndexReport locate(const MinorEvaluator& ev, double radius = 3.0, std::size_t count = 25) {
  IndexOptions o;
  o.grid = uniform_grid(radius, count);
  const IndexReport coarse = find_index(ev, o);
  return refine_base_points(ev, coarse, 2.0 * radius / static_cast<double>(count - 1));
}

KernelPair rank_one() { return builtin("gaussian-product"); }

// ---------------------------------------------------------------------------------------

Outcome ac1() {
  Ledger led;
  double worst = 0.0;
  const std::vector<Complex> lambdas{{0, 0}, {1, 0}, {-1, 0}, {0, 1}};
  for (const auto& name : builtin_names()) {
    const auto k = builtin(name);
    for (std::size_t n : {4, 8, 12}) {
      for (Complex lam : lambdas) {
        const auto vk = von_koch_check(discretize(k, legendre(k, n), lam));
        worst = std::max(worst, vk.gap);
        led.check(vk.gap < 1e-10, name + " N=" + std::to_string(n) + " gap " + fmt("%.2e", vk.gap));
      }
    }
  }
  return led.outcome("max gap " + fmt("%.2e", worst));
}

Outcome ac2() {
  Ledger led;
  const auto k = rank_one();
  const auto q = legendre(k, 64);
  const auto b = estimate_trace_bounds(k, q);
  std::vector<Complex> lams;
  for (int i = 0; i <= 400; ++i) lams.emplace_back(-2.0 + 0.01 * i, 0.0);
  const auto vals = minor_Dp_scan(k, q, 0, {}, {}, lams, b, 1e-10);
  double worst = 0.0;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    const double err = std::abs(vals[i].value - (1.0 - lams[i] * half_pi_root));
    worst = std::max(worst, err);
    led.check(err < 1e-8, "lambda " + fmt("%g", lams[i].real()) + " err " + fmt("%.2e", err));
  }
  // bisection on the scanned determinant
  std::size_t i0 = lams.size();
  for (std::size_t i = 0; i + 1 < lams.size(); ++i) {
    if (vals[i].value.real() > 0.0 && vals[i + 1].value.real() <= 0.0) {
      i0 = i;
      break;
    }
  }
  led.check(i0 < lams.size(), "no sign change on the scan");
  double root = 0.0;
  if (i0 < lams.size()) {
    double lo = lams[i0].real(), hi = lams[i0 + 1].real();
    const auto tables = std::make_shared<const NodeTables>(k, q);
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const MinorEvaluator ev(tables, b, {mid, 0.0}, 1e-10, {}, 2.0);
      (ev.evaluate({}, {}).value.real() > 0.0 ? lo : hi) = mid;
    }
    root = 0.5 * (lo + hi);
    led.check(std::abs(root - lambda_star) < 1e-6, "root " + fmt("%.12f", root));
  }
  return led.outcome("max err " + fmt("%.2e", worst) + ", root " + fmt("%.12f", root) +
                     " (|dev| " + fmt("%.1e", std::abs(root - lambda_star)) + ")");
}

Outcome ac3() {
  Ledger led;
  const auto k = rank_one();
  const auto q = legendre(k, 64);
  const auto star = find_index(*evaluator(k, q, {lambda_star, 0.0}), {0.0, 6, 2, uniform_grid(3.0, 25)});
  led.check(star.d == 1 && star.r == 0,
            "lambda* gave (" + std::to_string(star.d) + ", " + std::to_string(star.r) + ")");
  const std::vector<Complex> regular{{0.5, 0}, {-1, 0}, {1.5, 0}, {0.3, 0.4}, {-2, 0}};
  std::string seen;
  for (Complex lam : regular) {
    const auto idx = find_index(*evaluator(k, q, lam), {0.0, 6, 2, uniform_grid(3.0, 25)});
    led.check(idx.d == 0 && idx.r == 0, "lambda " + fmt("%g", lam.real()) + " gave d=" +
                                             std::to_string(idx.d) + " r=" + std::to_string(idx.r));
    led.check(!idx.anomaly, "anomaly flagged");
    seen += std::to_string(idx.d) + std::to_string(idx.r) + " ";
  }
  return led.outcome("lambda*: (" + std::to_string(star.d) + "," + std::to_string(star.r) +
                     "), regular: " + seen);
}

Outcome ac4() {
  Ledger led;
  const auto k = rank_one();
  const auto q = legendre(k, 64);
  const auto ev = evaluator(k, q, {lambda_star, 0.0});
  const auto idx = locate(*ev);
  led.check(idx.d == 1, "index " + std::to_string(idx.d));
  if (idx.d != 1) return led.outcome("");
  const auto phi = homogeneous_basis(ev, idx).front();
  const auto psi = adjoint_basis(ev, idx).front();
  const auto zero = [](double) { return Complex{}; };
  const auto rh = equation_residual(k, q, ev->lambda(),
                                    [&](std::span<const double> xs) { return phi.sample(xs); }, zero);
  const auto ra = equation_residual(
      k, q, ev->lambda(), [&](std::span<const double> xs) { return psi.sample(xs); }, zero, true);
  led.check(rh.l2 < 1e-6, "homogeneous residual " + fmt("%.2e", rh.l2));
  led.check(ra.l2 < 1e-6, "adjoint residual " + fmt("%.2e", ra.l2));
  const auto fine = refined(q);
  const auto ps = phi.sample(fine.nodes);
  const auto qs = psi.sample(fine.nodes);
  std::vector<Complex> a;
  for (double x : fine.nodes) a.emplace_back(std::exp(-x * x), 0.0);
  const double na = l2_norm(fine, a);
  const double cos_phi = std::abs(inner_product(fine, ps, a)) / (l2_norm(fine, ps) * na);
  const double cos_psi = std::abs(inner_product(fine, qs, a)) / (l2_norm(fine, qs) * na);
  led.check(cos_phi >= 1.0 - 1e-6, "cos(phi, a) " + fmt("%.12f", cos_phi));
  led.check(cos_psi >= 1.0 - 1e-6, "cos(psi, a) " + fmt("%.12f", cos_psi));
  return led.outcome("residuals " + fmt("%.1e", rh.l2) + "/" + fmt("%.1e", ra.l2) +
                     ", 1-cos " + fmt("%.1e", 1.0 - cos_phi) + "/" + fmt("%.1e", 1.0 - cos_psi));
}

// Largest real characteristic value below `hi` found by bisection of D_0 on a real scan.
double bisect_characteristic(const KernelPair& k, const QuadratureRule& q, double lo, double hi) {
  const auto tables = std::make_shared<const NodeTables>(k, q);
  const auto b = estimate_trace_bounds(k, q);
  auto d0 = [&](double lam) {
    return MinorEvaluator(tables, b, {lam, 0.0}, 1e-13, {}, hi).evaluate({}, {}).value.real();
  };
  double a = lo;
  double fa = d0(a);
  for (double x = lo + 0.05; x <= hi; x += 0.05) {
    const double fx = d0(x);
    if ((fa > 0.0) != (fx > 0.0)) {
      double l = a, h = x;
      for (int it = 0; it < 200 && h - l > 4e-16 * h; ++it) {
        const double mid = 0.5 * (l + h);
        ((d0(mid) > 0.0) == (fa > 0.0) ? l : h) = mid;
      }
      return 0.5 * (l + h);
    }
    a = x;
    fa = fx;
  }
  throw Error("no characteristic value on the scan");
}

struct SuiteCase {
  std::string label;
  KernelPair kernel;
  double lambda;
  RealFunction g;
};

Outcome ac5() {
  Ledger led;
  const auto gauss = builtin_function("gaussian");
  const auto odd = builtin_function("odd-gaussian");
  const auto h0 = builtin_function("hermite", std::vector<double>{0.0});
  const auto h1 = builtin_function("hermite", std::vector<double>{1.0});
  const auto h2 = builtin_function("hermite", std::vector<double>{2.0});
  const auto frs = builtin("finite-rank-sum");
  const auto frs_double = builtin("finite-rank-sum", std::vector<double>{2.0, 0.5, 0.5});
  const auto coupled = builtin("gaussian-product", std::vector<double>{1.0});
  const double lambda_c = bisect_characteristic(coupled, legendre(coupled, 64), 0.05, 4.0);
  const std::vector<SuiteCase> suite{
      {"rank-one l=0.5 g=gauss", rank_one(), 0.5, gauss},
      {"rank-one l* g=gauss", rank_one(), lambda_star, gauss},
      {"rank-one l* g=odd", rank_one(), lambda_star, odd},
      {"rank-2 H l=0.3 g=gauss", frs, 0.3, gauss},
      {"rank-2 H l=1.5 g=h1", frs, 1.5, h1},
      {"rank-2 H l=1.5 g=h0", frs, 1.5, h0},
      {"double root l=1.5 g=h2", frs_double, 1.5, h2},
      {"double root l=1.5 g=h1", frs_double, 1.5, h1},
      {"coupled l=0.5 g=gauss", coupled, 0.5, gauss},
      {"coupled l_c g=odd", coupled, lambda_c, odd},
      {"coupled l_c g=gauss", coupled, lambda_c, gauss},
  };
  int solvable_count = 0;
  for (const auto& c : suite) {
    const auto q = legendre(c.kernel, 64);
    const auto ev = evaluator(c.kernel, q, {c.lambda, 0.0});
    const auto idx = locate(*ev);
    const auto rhs = make_rhs(c.g, q);
    SolutionReport rep;
    try {
      rep = solve(ev, idx, rhs);
    } catch (const ResidualError& e) {
      rep = e.report();
      led.check(false, c.label + ": " + e.what());
    }
    const auto sys = discretize(c.kernel, q, {c.lambda, 0.0});
    std::vector<Complex> gn;
    for (double x : q.nodes) gn.push_back(c.g(x));
    const auto ny = nystrom_solve(sys, gn);
    const bool oracle = !ny.singular || ny.compatibility_residual <= 1e-6;
    led.check(rep.solvable == oracle, c.label + ": verdict " + std::to_string(rep.solvable) +
                                          " vs oracle " + std::to_string(oracle));
    if (!rep.solvable || !rep.particular) continue;
    ++solvable_count;
    led.check(rep.residual_l2 < 1e-6, c.label + ": residual " + fmt("%.2e", rep.residual_l2));
    // difference modulo the discrete null space
    const auto fs_nodes = rep.particular->sample(q.nodes);
    Eigen::VectorXcd diff(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) diff[static_cast<Eigen::Index>(i)] = fs_nodes[i] - ny.f[i];
    if (ny.null_vectors.cols() > 0) {
      const Eigen::VectorXcd coef = ny.null_vectors.colPivHouseholderQr().solve(diff);
      diff -= ny.null_vectors * coef;
    }
    const double sup = diff.cwiseAbs().maxCoeff();
    led.check(sup < 1e-6 * rhs.norm_estimate,
              c.label + ": sup diff " + fmt("%.2e", sup) + " vs " + fmt("%.2e", 1e-6 * rhs.norm_estimate));
  }
  return led.outcome(std::to_string(suite.size()) + " cases, " + std::to_string(solvable_count) +
                     " solvable, lambda_c = " + fmt("%.12f", lambda_c));
}

Outcome ac6() {
  Ledger led;
  std::mt19937_64 rng(20261015);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_ratio = 0.0;
  int capped = 0;
  for (const auto& name : builtin_names()) {
    const auto k = builtin(name);
    const auto q = legendre(k, 64);
    const auto tables = std::make_shared<const NodeTables>(k, q);
    const auto b = estimate_trace_bounds(k, q);
    for (int i = 0; i < 20; ++i) {
      const double r = 2.0 * std::sqrt(unit(rng));
      const double th = 2.0 * std::numbers::pi * unit(rng);
      const Complex lam = std::polar(r, th);
      const MinorEvaluator ev(tables, b, lam, 1e-8);
      const std::size_t n = ev.last_term(0, 0);
      if (n + 5 > q.size()) ++capped;
      const auto& bs = ev.bordered();
      const double realized = std::abs(bs.partial_sum({}, {}, 0, n) - bs.partial_sum({}, {}, 0, n + 5));
      const double bound = ev.truncation_bound(0, 0);
      worst_ratio = std::max(worst_ratio, realized / bound);
      led.check(realized < bound, name + " lambda " + fmt("%.3f", lam.real()) + fmt("%+.3fi", lam.imag()) +
                                      ": tail " + fmt("%.2e", realized) + " bound " + fmt("%.2e", bound));
    }
  }
  return led.outcome("max tail/bound " + fmt("%.2e", worst_ratio) + ", runs reaching node count " +
                     std::to_string(capped));
}

Outcome ac7() {
  Ledger led;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pt(-2.0, 2.0);
  // non-separable H with a rank-two S, so T_lambda has full rank and mixes both parts
  const KernelPair k(builtin_component("gaussian-product", std::vector<double>{1.0}),
                     builtin_component("separable-gaussian", std::vector<double>{2.0}), "mixed");
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nu = 1 + static_cast<std::size_t>(trial % 4);
    CompoundQuery cq;
    for (std::size_t i = 0; i < nu; ++i) {
      cq.x_points.push_back(pt(rng));
      cq.y_points.push_back(pt(rng));
    }
    cq.lambda = {pt(rng), pt(rng)};
    cq.derivative_order = 1 + static_cast<unsigned>(trial % 2);
    const double h = 1e-2;
    auto at = [&](double shift) {
      CompoundQuery c = cq;
      c.lambda += shift;
      c.derivative_order = 0;
      return compound(k, c);
    };
    // sixth-order central stencils
    const Complex fd =
        cq.derivative_order == 1
            ? (-at(-3 * h) + 9.0 * at(-2 * h) - 45.0 * at(-h) + 45.0 * at(h) - 9.0 * at(2 * h) + at(3 * h)) / (60 * h)
            : (2.0 * at(-3 * h) - 27.0 * at(-2 * h) + 270.0 * at(-h) - 490.0 * at(0) + 270.0 * at(h) -
               27.0 * at(2 * h) + 2.0 * at(3 * h)) / (180 * h * h);
    const Complex exact = compound_derivative(k, cq);
    const double rel = std::abs(exact - fd) / std::abs(exact);
    worst = std::max(worst, rel);
    led.check(rel < 1e-6, "nu=" + std::to_string(nu) + " j=" + std::to_string(cq.derivative_order) +
                              " rel " + fmt("%.2e", rel));
  }
  // degree of B_n^p in lambda: interpolate through n+p+1 points, test at 3 more
  const auto q = build_rule(RuleKind::GaussLegendreTruncated, 8, 3.0);
  double worst_interp = 0.0;
  for (std::size_t n = 0; n <= 2; ++n) {
    for (std::size_t p = 0; p <= 2; ++p) {
      std::vector<double> s{0.35, -0.6}, t{-0.2, 0.9};
      s.resize(p);
      t.resize(p);
      const std::size_t deg = n + p;
      std::vector<double> xs;
      std::vector<Complex> ys;
      for (std::size_t m = 0; m <= deg; ++m) {
        xs.push_back(std::cos(std::numbers::pi * (m + 0.5) / static_cast<double>(deg + 1)));
        ys.push_back(coeff_Bnp(k, q, n, s, t, {xs.back(), 0.0}));
      }
      double scale = 0.0;
      for (auto y : ys) scale = std::max(scale, std::abs(y));
      for (double x : {-0.83, 0.12, 0.71}) {
        Complex interp{};
        for (std::size_t m = 0; m <= deg; ++m) {
          double l = 1.0;
          for (std::size_t o = 0; o <= deg; ++o) {
            if (o != m) l *= (x - xs[o]) / (xs[m] - xs[o]);
          }
          interp += l * ys[m];
        }
        const double res = std::abs(interp - coeff_Bnp(k, q, n, s, t, {x, 0.0})) / scale;
        worst_interp = std::max(worst_interp, res);
        led.check(res < 1e-9, "B_" + std::to_string(n) + "^" + std::to_string(p) + " residual " + fmt("%.2e", res));
      }
    }
  }
  return led.outcome("max FD rel err " + fmt("%.2e", worst) + ", max interpolation residual " +
                     fmt("%.2e", worst_interp));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& binary, const fs::path& config, const fs::path& out, unsigned threads) {
  const std::string cmd = "\"" + binary + "\" --config \"" + config.string() + "\" --output \"" +
                          out.string() + "\" --threads " + std::to_string(threads) +
                          " --reproducible > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome ac8(const std::string& binary, const fs::path& golden) {
  Ledger led;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(golden)) {
    if (e.path().extension() == ".json") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  led.check(!configs.empty(), "no golden configs in " + golden.string());
  const fs::path work = fs::temp_directory_path() / "fredholm_acceptance_ac8";
  fs::remove_all(work);
  std::size_t files = 0;
  for (const auto& cfg : configs) {
    const auto name = cfg.stem().string();
    const fs::path a = work / (name + "_a"), b = work / (name + "_b");
    fs::create_directories(a);
    fs::create_directories(b);
    const int ca = run_cli(binary, cfg, a, 1);
    const int cb = run_cli(binary, cfg, b, 3);
    led.check(ca == cb, name + ": exit codes " + std::to_string(ca) + " vs " + std::to_string(cb));
    led.check(ca == 0 || ca == 2, name + ": exit code " + std::to_string(ca));
    std::vector<std::string> la, lb;
    for (const auto& e : fs::directory_iterator(a)) la.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) lb.push_back(e.path().filename().string());
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    led.check(la == lb, name + ": different file sets");
    for (const auto& f : la) {
      ++files;
      led.check(slurp(a / f) == slurp(b / f), name + "/" + f + " differs");
    }
  }
  return led.outcome(std::to_string(configs.size()) + " configs, " + std::to_string(files) +
                     " files compared");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: acceptance <fredholm binary> <golden config dir>\n");
    return 1;
  }
  const std::string binary = argv[1];
  const fs::path golden = argv[2];
  struct Criterion {
    const char* id;
    const char* title;
    double limit_seconds;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "von Koch exactness", 10.0, ac1},
      {"AC2", "rank-one closed form and root", 30.0, ac2},
      {"AC3", "index at characteristic and regular points", 0.0, ac3},
      {"AC4", "null bases", 0.0, ac4},
      {"AC5", "Fredholm alternative vs Nystrom", 300.0, ac5},
      {"AC6", "truncation honesty", 0.0, ac6},
      {"AC7", "derivative exactness and coefficient degree", 0.0, ac7},
      {"AC8", "reproducible CLI outputs", 0.0, [&] { return ac8(binary, golden); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
      out.passed = false;
      out.detail += " | runtime above " + fmt("%.0f", c.limit_seconds) + " s";
    }
    if (!out.passed) ++failed;
    std::printf("%s %s %s (%.2f s): %s\n", c.id, out.passed ? "PASS" : "FAIL", c.title, secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
