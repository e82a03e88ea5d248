// One line per acceptance criterion; exit status 1 when any criterion fails.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rwlab/boundary.hpp"
#include "rwlab/dynamics.hpp"
#include "rwlab/experiments.hpp"
#include "rwlab/harnack.hpp"

using namespace rwlab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("criterion %2d  %s  %s: %s\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GroupElement z(std::int64_t v) { return LatticePoint({v}); }

// m(g) = max over roots c of p e^c + (1-p) e^{-c} = 1 of e^{c g}; the roots
// are c = 0 and e^c = (1-p)/p.
mpq_class two_point_majorant(const mpq_class& p, std::int64_t g) {
  const mpq_class lambda = (1 - p) / p;
  mpq_class pow = 1;
  const mpq_class base = g >= 0 ? lambda : 1 / lambda;
  for (std::int64_t i = 0; i < std::abs(g); ++i) pow *= base;
  return pow > 1 ? pow : mpq_class(1);
}

double alpha_formula(const std::vector<double>& g, double s, double t, const std::vector<double>& b) {
  double q = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) q += std::pow(g[i] - (t - s) * b[i], 2);
  return std::pow(t / s, 0.5 * g.size()) * std::exp(q / (4 * (t - s)));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const auto p = make_params();

  // 1: fixed point, Monte Carlo agreement, runtime.
  const auto t_solve = std::chrono::steady_clock::now();
  const auto sd = fixed_point_solve(p);
  const double solve_s = seconds_since(t_solve);
  const auto& rho = sd.rho;
  {
    const auto R = simulate_R_infty(p, 200, 100000, 1);
    const double ks = ks_one_sample(R.values, [&](double y) { return rho.cdf(y); });
    report(1, sd.residual < 1e-6 && ks < 0.01 && solve_s < 60.0, "stationary density",
           fmt("residual %.3e (< 1e-6), KS %.4f (< 0.01), solve %.2f s (< 60)", sd.residual, ks, solve_s));
  }

  // 2: proven lower bound with constants recomputed here.
  {
    const double c_A = 1.0 / (p.M * std::pow(0.5, p.beta) / p.beta + 2 * p.delta);
    const double c_B = 1.0 / boost::math::tgamma((1 - p.alpha) / 2);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double c0 = ts.integrate([&](double x) { return std::pow(x, -p.beta) * rho(x); }, 1.0, 2.0, 1e-12);
    const double C = c0 * c_A * c_B * p.M / (std::exp(1.0) * p.beta * std::pow(2.0, p.beta));
    std::size_t nodes = 0, violations = 0;
    double worst = INFINITY;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double x = rho.nodes()[i];
      if (!(x > 0 && x < 0.125)) continue;
      ++nodes;
      const double r = rho.values()[i] / (C * std::pow(x, p.beta - p.alpha));
      worst = std::min(worst, r);
      violations += r < 1.0;
    }
    report(2, violations == 0 && nodes > 0, "blow-up lower bound",
           fmt("%zu violations over %zu nodes, C = %.6g, min rho/(C x^(beta-alpha)) = %.4f", violations, nodes, C, worst));
  }

  // 3: unbounded Radon-Nikodym kernel of g_1.
  {
    auto sup_over = [](const GridDensity& d, double lo) {
      double s = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.nodes()[i];
        if (x > lo && x < 0.125) s = std::max(s, d(x) / d(1.0 + x));
      }
      return s;
    };
    const double base = sup_over(rho, 1e-6);
    const double base_full = sup_over(rho, 0.0);
    const auto deep = fixed_point_solve(p, GridSpec{}.deepened(1e6));
    const double deep_sup = sup_over(deep.rho, 0.0);
    const double growth = deep_sup / base_full;
    report(3, base > 1e3 && growth >= 2.0, "Radon-Nikodym sup",
           fmt("sup over (1e-6, 1/8) = %.1f (> 1e3), deepened 1e6x sup = %.1f, growth %.2f (>= 2)", base, deep_sup,
               growth));
  }

  // 4: cocycle identity.
  {
    Rng rng(4);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const AffMap g = random_affine(rng), h = random_affine(rng);
      const double x = rng.uniform(-3, 3);
      const double lhs = rn_strict(compose(g, h), x, rho);
      const double rhs = rn_strict(g, h.apply(x), rho) * rn_strict(h, x, rho);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    }
    report(4, worst <= 1e-9, "cocycle identity", fmt("worst relative error %.3e on 1000 triples (<= 1e-9)", worst));
  }

  // 5: certificates against the exact oracle on the drifted Z walk.
  {
    const auto theta = named_measure("drift-z");
    const auto o = exp_oracle(theta);
    const mpq_class pp(2, 3);
    bool ok = *o.exact_value(-1) == 2 && *o.exact_value(1) == 1 && two_point_majorant(pp, -1) == 2 &&
              two_point_majorant(pp, 1) == 1;
    int verified = 0;
    for (int g = -6; g <= 6; ++g) {
      for (int n = 1; n <= 6; ++n) {
        try {
          const auto c = discrete_certificate(theta, z(g), n);
          if (verify_certificate(theta, c).ok) {
            ++verified;
            ok = ok && c.bound() >= two_point_majorant(pp, g);
          }
        } catch (const CertificateError&) {
        }
      }
    }
    const auto c1 = discrete_certificate(theta, z(-1), 1);
    ok = ok && c1.bound() == 3 && verify_certificate(theta, c1).ok;
    report(5, ok, "certificate soundness",
           fmt("m(-1) = %s, m(1) = %s, depth-1 bound for -1 = %s, %d verifying certificates dominate",
               format_rational(*o.exact_value(-1)).c_str(), format_rational(*o.exact_value(1)).c_str(),
               format_rational(c1.bound()).c_str(), verified));
  }

  // 6: submultiplicativity and normalization, exactly.
  {
    const auto o = exp_oracle(named_measure("drift-z"));
    bool ok = *o.exact_value(0) == 1;
    int pairs = 0;
    for (int g = -8; g <= 8; ++g) {
      for (int h = -8; h <= 8; ++h) {
        ++pairs;
        ok = ok && *o.exact_value(g + h) <= *o.exact_value(g) * *o.exact_value(h) && *o.exact_value(g) >= 1;
      }
    }
    report(6, ok, "oracle submultiplicativity", fmt("%d exact pairs, m(e) = %s", pairs,
                                                    format_rational(*o.exact_value(0)).c_str()));
  }

  // 7: Gaussian alpha attained.
  {
    Rng rng(7);
    double lo = INFINITY, hi = 0.0;
    for (int i = 0; i < 20; ++i) {
      const int d = 1 + i % 3;
      std::vector<double> g(d), b(d);
      for (auto& v : g) v = rng.uniform(-2, 2);
      for (auto& v : b) v = rng.uniform(-1, 1);
      const double s = rng.uniform(0.5, 2), t = s + rng.uniform(0.5, 3);
      const double a = alpha_formula(g, s, t, b);
      const double sup = gaussian_ratio_grid_sup(g, s, t, b);
      lo = std::min(lo, sup / a);
      hi = std::max(hi, sup / a);
    }
    report(7, lo >= 0.99 && hi <= 1.0 + 1e-12, "Gaussian alpha tightness",
           fmt("sup/alpha in [%.6f, %.15f] over 20 draws", lo, hi));
  }

  // 8: martingale z_n mu(A).
  {
    const auto m = martingale_experiment(p, rho, 0, 1, 50, 10000, 8);
    bool ok = std::abs(m.rows[1].M.mean - m.mu_A) < 3 * m.rows[1].M.se;
    std::string detail = fmt("E[M_1] - mu(A) = %.2e (3 SE %.2e)", m.rows[1].M.mean - m.mu_A, 3 * m.rows[1].M.se);
    for (int n : {1, 10, 50}) {
      const auto& inc = m.rows[static_cast<std::size_t>(n)].increment;
      // Identically zero increments (SE = 0) satisfy the martingale property exactly.
      const bool degenerate = inc.sd == 0.0 && inc.mean == 0.0;
      ok = ok && (std::abs(inc.mean) < 3 * inc.se || degenerate);
      detail += fmt("; n=%d |drift| %.2e vs 3 SE %.2e%s", n, std::abs(inc.mean), 3 * inc.se,
                    degenerate ? " (identically zero)" : "");
    }
    report(8, ok, "martingale property", detail);
  }

  // 9: escape.
  {
    const auto aff = escape_experiment(StepLaw::counterexample(p), CompactSet::affine_box(0.5, 2, 2), {500}, 10000, 9);
    const auto drift =
        escape_experiment(StepLaw::discrete(named_measure("drift-z")), CompactSet::lattice_box(-10, 10), {500}, 10000, 10);
    const double fa = aff.rows.back().frequency, fd = drift.rows.back().frequency;
    report(9, fa < 0.05 && fd < 0.05, "escape", fmt("stay frequency at 500: affine %.4f, drifted Z %.4f (< 0.05)", fa, fd));
  }

  // 10: delta(K).
  {
    const auto box = GridDensity::sample(GridSpec::uniform(-4, 4, 1600),
                                         [](double x) { return std::abs(x) <= 1 + 1e-12 ? 0.5 : 0.0; });
    const std::vector<double> radii{0.01, 0.25, 0.5, 1.0, 1.5, 2.0};
    const auto d = delta_K(box, [](double) { return 1.0; }, radii);
    double worst = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) worst = std::max(worst, std::abs(d[i] - radii[i]));
    const auto phi = GridDensity::sample(GridSpec::uniform(-4, 5, 1800),
                                         [](double x) { return x >= -1 - 1e-12 && x <= 2 + 1e-12 ? 1.0 / 3 : 0.0; });
    const auto o = exp_oracle(phi);
    const auto dd = delta_K(phi, [&](double x) { return o.value(x); }, {0.01, 1.0});
    const double ratio = dd[0] / dd[1];
    report(10, worst <= 1e-4 && ratio < 0.05, "delta(K) decay",
           fmt("max |delta(r) - r| = %.2e (<= 1e-4), drifted delta(0.01)/delta(1) = %.4f (< 0.05)", worst, ratio));
  }

  // 11: Harnack exponent.
  {
    const auto drift = harnack_exponent(named_measure("drift-z"), {1, 2, 3, 4, 5}, 6);
    const auto lazy = harnack_exponent(named_measure("lazy-z"), {1, 2, 3, 4, 5}, 6);
    const double err = std::abs(drift.gamma_hat - std::log(2.0));
    report(11, err <= 1e-6 && lazy.gamma_hat == 0.0, "Harnack exponent",
           fmt("drifted |gamma - log 2| = %.2e (<= 1e-6), lazy gamma = %g (== 0)", err, lazy.gamma_hat));
  }

  // 12: Maharam algebra.
  {
    Rng rng(12);
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      const AffMap g = random_affine(rng);
      const MaharamPoint q{rng.uniform(-2, 2), rng.uniform(-5, 5), rng.uniform(-5, 5)};
      const double s = rng.uniform(-5, 5);
      const auto a = maharam_step(g, fiber_translate(s, q), rho);
      const auto b = fiber_translate(s, maharam_step(g, q, rho));
      mismatches += !(a.x == b.x && a.t() == b.t());
    }
    const auto coc = maharam_cocycle_check(rho, 1000, 13);
    double rect = 0.0;
    for (const auto& [g, r] : std::vector<std::pair<AffMap, std::array<double, 4>>>{
             {AffMap(1.5, -0.3), {-1.0, 0.5, -2.0, 3.0}},
             {AffMap(0.5, 0.2), {0.2, 1.5, 0.0, 1.0}},
             {AffMap(2.0, 1.0), {-3.0, -0.1, -5.0, 5.0}},
             {AffMap::translation(1.0), {0.5, 2.0, -1.0, 2.0}}}) {
      rect = std::max(rect, maharam_rectangle_probe(g, r[0], r[1], r[2], r[3], rho).error);
    }
    report(12, mismatches == 0 && coc.worst_fiber <= 1e-9 && rect <= 1e-4, "Maharam algebra",
           fmt("%zu commutation mismatches, cocycle %.2e (<= 1e-9), rectangles %.2e (<= 1e-4)", mismatches,
               coc.worst_fiber, rect));
  }

  // 13: every experiment at default budgets, twice, single-threaded.
  {
    const fs::path root = fs::temp_directory_path() / "rwlab_acceptance";
    fs::remove_all(root);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t csvs = 0, differing = 0, failed_runs = 0;
    for (const auto& e : cli::list_experiments()) {
      for (const char* pass : {"a", "b"}) {
        const auto cfg = cli::resolve_config(e.name, {{"seed", "7"}},
                                             {{"out", (root / pass / e.name).string()}, {"workers", "1"}});
        if (!cli::run_experiment(cfg).all_pass() && std::string(pass) == "a") ++failed_runs;
      }
      for (const auto& f : fs::directory_iterator(root / "a" / e.name)) {
        if (f.path().extension() != ".csv") continue;
        ++csvs;
        differing += slurp(f.path()) != slurp(root / "b" / e.name / f.path().filename());
      }
    }
    const double total = seconds_since(t0);
    report(13, total < 600.0 && differing == 0 && csvs > 0, "suite time and determinism",
           fmt("two default-budget passes over 11 experiments in %.1f s (< 600), %zu/%zu CSVs differ, "
               "%zu experiments with failing assertions",
               total, differing, csvs, failed_runs));
  }

  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
