#include "rwlab/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

namespace rwlab {

mpq_class SuitabilityCertificate::bound() const {
  mpq_class s = 0;
  for (const auto& t : terms) s += t.alpha;
  return s;
}

int SuitabilityCertificate::max_power() const {
  int m = k;
  for (const auto& t : terms) m = std::max(m, t.k_r);
  return m;
}

std::string certificate_to_json(const SuitabilityCertificate& c) {
  nlohmann::json j;
  j["element"] = format_element(c.element);
  j["k"] = c.k;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : c.terms) j["terms"].push_back({t.k_r, format_rational(t.alpha)});
  return j.dump();
}

SuitabilityCertificate certificate_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("certificate JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("element") || !j.contains("k") || !j.contains("terms")) {
    throw ParseError("certificate JSON needs element, k and terms");
  }
  SuitabilityCertificate c{parse_element(j.at("element").get<std::string>()), j.at("k").get<int>(), {}};
  if (c.k < 0) throw ParseError("certificate k must be nonnegative");
  for (const auto& t : j.at("terms")) {
    if (!t.is_array() || t.size() != 2) throw ParseError("certificate term must be [k_r, alpha]");
    CertificateTerm term{t[0].get<int>(), parse_rational(t[1].is_string() ? t[1].get<std::string>() : t[1].dump())};
    if (term.k_r < 0 || term.alpha <= 0) throw ParseError("certificate terms need k_r >= 0 and alpha > 0");
    c.terms.push_back(term);
  }
  if (c.terms.empty()) throw ParseError("certificate needs at least one term");
  return c;
}

Verdict verify_certificate(const DiscreteMeasure& theta, const SuitabilityCertificate& cert, PowerLimits limits) {
  if (family_of(cert.element) != theta.family()) throw FamilyMismatch("certificate element family differs from measure");
  if (cert.terms.empty()) return {false, 0.0, 0, "certificate has no terms"};
  std::vector<DiscreteMeasure> powers;
  try {
    powers = convolution_powers(theta, cert.max_power(), limits);
  } catch (const std::length_error& e) {
    throw CertificateError(std::string("verification refused: ") + e.what());
  }
  FiniteMeasure rhs;
  for (const auto& t : cert.terms) {
    for (const auto& [z, w] : powers[t.k_r].atoms()) rhs[z] += t.alpha * w;
  }
  const FiniteMeasure lhs = translate(cert.element, powers[cert.k]);
  Verdict v;
  v.ok = true;
  std::optional<mpq_class> margin;
  for (const auto& [z, w] : lhs) {
    auto it = rhs.find(z);
    const mpq_class diff = (it == rhs.end() ? mpq_class(0) : it->second) - w;
    if (!margin || diff < *margin) margin = diff;
    ++v.points_checked;
    if (diff < 0 && v.ok) {
      v.ok = false;
      v.diagnostic = "domination fails at " + format_element(z) + ": lhs " + format_rational(w) + " > rhs " +
                     format_rational(w + diff);
    }
  }
  v.margin = margin ? margin->get_d() : 0.0;
  return v;
}

GridPowers::GridPowers(GridDensity phi) {
  if (!phi.is_uniform()) throw std::invalid_argument("convolution powers need a density on a uniform grid");
  powers_.push_back(std::move(phi));
}

const GridDensity& GridPowers::power(int n) {
  if (n < 1) throw std::invalid_argument("grid powers start at n = 1");
  while (static_cast<int>(powers_.size()) < n) powers_.push_back(grid_convolve(powers_.back(), powers_.front()));
  return powers_[static_cast<std::size_t>(n) - 1];
}

namespace {

double translation_of(const GroupElement& g) {
  const auto* m = std::get_if<AffMap>(&g);
  if (m == nullptr || m->log_a() != 0.0) throw FamilyMismatch("grid certificates need a real shift aff:1,t");
  return m->b();
}

}  // namespace

Verdict verify_certificate(GridPowers& phi, const SuitabilityCertificate& cert, double slack) {
  const double g = translation_of(cert.element);
  Verdict v;
  if (cert.terms.empty()) return {false, 0.0, 0, "certificate has no terms"};
  if (cert.k == 0) {
    mpq_class dirac_weight = 0;
    for (const auto& t : cert.terms) {
      if (t.k_r == 0) dirac_weight += t.alpha;
    }
    v.points_checked = 1;
    v.margin = mpq_class(dirac_weight - 1).get_d();
    v.ok = g == 0.0 && dirac_weight >= 1;
    if (!v.ok) v.diagnostic = "a Dirac left side is dominated only by Dirac terms at the identity";
    return v;
  }
  const GridDensity& lhs = phi.power(cert.k);
  std::vector<std::pair<double, const GridDensity*>> rhs;
  for (const auto& t : cert.terms) {
    if (t.k_r > 0) rhs.emplace_back(t.alpha.get_d(), &phi.power(t.k_r));
  }
  auto rhs_at = [&](double x) {
    double s = 0.0;
    for (const auto& [a, d] : rhs) s += a * (*d)(x);
    return s;
  };
  auto lhs_at = [&](double x) { return lhs(x - g); };

  const auto& ln = lhs.nodes();
  const auto& lv = lhs.values();
  std::size_t first = ln.size(), last = 0;
  for (std::size_t i = 0; i < ln.size(); ++i) {
    if (lv[i] > 0.0) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == ln.size()) return {true, 0.0, 0, "left side vanishes"};
  const double lo = ln[first == 0 ? 0 : first - 1] + g;
  const double hi = ln[std::min(last + 1, ln.size() - 1)] + g;

  std::vector<double> pts;
  for (std::size_t i = first == 0 ? 0 : first - 1; i <= std::min(last + 1, ln.size() - 1); ++i) pts.push_back(ln[i] + g);
  for (const auto& [a, d] : rhs) {
    for (double x : d->nodes()) {
      if (x > lo && x < hi) pts.push_back(x);
    }
  }
  v.ok = true;
  v.margin = std::numeric_limits<double>::infinity();
  for (double x : pts) {
    const double diff = rhs_at(x) - lhs_at(x);
    ++v.points_checked;
    if (diff < v.margin) v.margin = diff;
    if (diff < -slack && v.ok) {
      v.ok = false;
      std::ostringstream os;
      os.precision(10);
      os << "domination fails at x = " << x << ": lhs " << lhs_at(x) << " > rhs " << rhs_at(x);
      v.diagnostic = os.str();
    }
  }
  return v;
}

namespace {

SuitabilityCertificate certificate_from_powers(const std::vector<DiscreteMeasure>& powers, const GroupElement& g) {
  int best_n = -1;
  mpq_class best = 0;
  for (std::size_t n = 0; n < powers.size(); ++n) {
    const mpq_class w = powers[n].weight(g);
    if (w > best) {
      best = w;
      best_n = static_cast<int>(n);
    }
  }
  if (best_n < 0) {
    throw CertificateError("no certificate at this depth: " + format_element(g) + " is not reached within " +
                           std::to_string(powers.size() - 1) + " steps");
  }
  return SuitabilityCertificate{g, 0, {CertificateTerm{best_n, mpq_class(1) / best}}};
}

}  // namespace

SuitabilityCertificate discrete_certificate(const DiscreteMeasure& theta, const GroupElement& g, int max_n,
                                            PowerLimits limits) {
  if (max_n < 1) throw std::invalid_argument("max_n must be >= 1");
  if (family_of(g) != theta.family()) throw FamilyMismatch("element family differs from measure");
  std::vector<DiscreteMeasure> powers;
  try {
    powers = convolution_powers(theta, max_n, limits);
  } catch (const std::length_error& e) {
    throw CertificateError(std::string("certificate search refused: ") + e.what());
  }
  return certificate_from_powers(powers, g);
}

CoveringReport covering_certificate(GridPowers& phi, double g, int N, int max_n) {
  if (N < 2) throw std::invalid_argument("covering needs N >= 2 so that phi^{*N} is continuous");
  if (max_n < 0) throw std::invalid_argument("max_n must be nonnegative");
  CoveringReport rep;
  if (g == 0.0) {
    rep.certificate = SuitabilityCertificate{AffMap::translation(0.0), 0, {CertificateTerm{0, mpq_class(1)}}};
    rep.verdict = verify_certificate(phi, rep.certificate);
    rep.sup_phi_n = 1.0;
    return rep;
  }
  const GridDensity& fn = phi.power(N);
  rep.sup_phi_n = fn.max_value();
  const double threshold = 1e-12 * rep.sup_phi_n;
  const auto& x = fn.nodes();
  const auto& v = fn.values();

  // Chosen power offset per covering cell.
  std::map<int, double> c_min;
  std::vector<std::string> uncovered;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (v[i] <= threshold && v[i + 1] <= threshold) continue;
    ++rep.cells;
    const double a = x[i] + g, b = x[i + 1] + g;
    int best_n = -1;
    double best_c = 0.0;
    for (int n = 0; n <= max_n; ++n) {
      const GridDensity& p = phi.power(n + N);
      double c = std::min(p(a), p(b));
      const auto& pn = p.nodes();
      auto it = std::upper_bound(pn.begin(), pn.end(), a);
      for (; it != pn.end() && *it < b; ++it) c = std::min(c, p(*it));
      if (c > best_c) {
        best_c = c;
        best_n = n;
      }
    }
    if (best_n < 0) {
      if (uncovered.size() < 5) {
        std::ostringstream os;
        os << "[" << a << ", " << b << "]";
        uncovered.push_back(os.str());
      }
      continue;
    }
    auto [it, inserted] = c_min.emplace(best_n, best_c);
    if (!inserted) it->second = std::min(it->second, best_c);
  }
  if (!uncovered.empty()) {
    std::string msg = "cover construction failed within n <= " + std::to_string(max_n) + "; uncovered cells:";
    for (const auto& s : uncovered) msg += " " + s;
    throw CertificateError(msg);
  }
  rep.c_of_n = c_min;
  rep.certificate.element = AffMap::translation(g);
  rep.certificate.k = N;
  for (const auto& [n, c] : c_min) rep.certificate.terms.push_back({n + N, mpq_class(rep.sup_phi_n / c)});
  rep.verdict = verify_certificate(phi, rep.certificate);
  return rep;
}

double OracleResult::value(double g) const {
  double best = 1.0;
  if (exact_lambda) return std::max(1.0, std::pow(exact_lambda->get_d(), g));
  for (double c : roots) best = std::max(best, std::exp(c * g));
  return best;
}

std::optional<mpq_class> OracleResult::exact_value(std::int64_t g) const {
  if (exact_lambda) {
    mpq_class base = g >= 0 ? *exact_lambda : mpq_class(1) / *exact_lambda;
    mpq_class p = 1;
    for (std::int64_t i = 0; i < (g >= 0 ? g : -g); ++i) p *= base;
    return p > 1 ? p : mpq_class(1);
  }
  if (roots.size() == 1) return mpq_class(1);
  return std::nullopt;
}

namespace {

/// Finds the nonzero root of the convex function mgf(c) - 1 on the side
/// `dir` (+1 or -1). Returns nullopt and sets `note` when no bracket exists.
std::optional<double> second_root(const std::function<double(double)>& mgf, double dir, std::string& note) {
  for (int j = 1; j <= 100; ++j) {
    const double c = dir * 0.5 * j;
    const double m = mgf(c);
    if (!std::isfinite(m)) {
      note = "moment generating function overflowed before a second root was bracketed";
      return std::nullopt;
    }
    if (m >= 1.0) {
      // Golden-section search for the minimizer between 0 and c; the minimum
      // lies strictly below 1 and brackets the root together with c.
      double lo = std::min(0.0, c), hi = std::max(0.0, c);
      const double r = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
      double f1 = mgf(x1), f2 = mgf(x2);
      for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - r * (hi - lo);
          f1 = mgf(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + r * (hi - lo);
          f2 = mgf(x2);
        }
      }
      double inside = 0.5 * (lo + hi);
      if (mgf(inside) >= 1.0) {
        note = "mean too close to zero to separate a second root";
        return std::nullopt;
      }
      double outside = c;
      while (std::abs(outside - inside) > 1e-12) {
        const double mid = 0.5 * (inside + outside);
        (mgf(mid) < 1.0 ? inside : outside) = mid;
      }
      return 0.5 * (inside + outside);
    }
  }
  note = "no second root bracketed in [-50, 50]";
  return std::nullopt;
}

/// Continued-fraction convergents of x with denominators up to max_den.
std::vector<mpq_class> convergents(double x, long max_den) {
  std::vector<mpq_class> out;
  mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int i = 0; i < 40; ++i) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e15) break;
    const mpz_class az(static_cast<long>(a));
    const mpz_class h2 = az * h1 + h0, k2 = az * k1 + k0;
    if (k2 > max_den) break;
    out.emplace_back(h2, k2);
    out.back().canonicalize();
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return out;
}

}  // namespace

OracleResult exp_oracle(const DiscreteMeasure& theta) {
  if (theta.family() != Family::kLattice || theta.rank() != 1) {
    throw std::invalid_argument("the exponential oracle is available on Z and R only");
  }
  std::vector<std::pair<std::int64_t, mpq_class>> atoms;
  mpq_class mean = 0;
  for (const auto& [g, w] : theta.atoms()) {
    const auto h = std::get<LatticePoint>(g)[0];
    atoms.emplace_back(h, w);
    mean += w * h;
  }
  OracleResult res;
  res.roots.push_back(0.0);
  if (mean == 0) {
    res.note = "zero mean: M(c) = 1 only at c = 0";
    return res;
  }
  auto mgf = [&](double c) {
    double s = 0.0;
    for (const auto& [h, w] : atoms) s += w.get_d() * std::exp(c * static_cast<double>(h));
    return s;
  };
  auto root = second_root(mgf, mean > 0 ? -1.0 : 1.0, res.note);
  if (!root) {
    res.warning = true;
    return res;
  }
  res.roots.push_back(*root);
  for (const auto& q : convergents(std::exp(*root), 1000000)) {
    if (q <= 0 || q == 1) continue;
    mpq_class s = 0;
    for (const auto& [h, w] : atoms) {
      mpq_class p = 1;
      const mpq_class base = h >= 0 ? q : mpq_class(1) / q;
      for (std::int64_t i = 0; i < (h >= 0 ? h : -h); ++i) p *= base;
      s += w * p;
    }
    if (s == 1) {
      res.exact_lambda = q;
      res.roots.back() = std::log(q.get_d());
      res.note = "nonzero root e^c = " + format_rational(q) + " (exact)";
      break;
    }
  }
  return res;
}

OracleResult exp_oracle(const GridDensity& theta) {
  if (!theta.is_uniform()) throw std::invalid_argument("the grid oracle expects a density on a uniform grid");
  const auto& x = theta.nodes();
  const auto& v = theta.values();
  const double h = theta.spec().spacing();
  const double mass = theta.mass();
  // Exact integrals of the piecewise-linear interpolant against e^{cx} and x.
  auto mgf = [&](double c) {
    if (c == 0.0) return 1.0;
    const double u = c * h;
    double e1, e2;  // (e^u - 1)/u and (e^u (u - 1) + 1)/u^2
    if (std::abs(u) < 1e-3) {
      e1 = 1.0 + u / 2.0 + u * u / 6.0 + u * u * u / 24.0;
      e2 = 0.5 + u / 3.0 + u * u / 8.0 + u * u * u / 30.0;
    } else {
      e1 = std::expm1(u) / u;
      e2 = (std::exp(u) * (u - 1.0) + 1.0) / (u * u);
    }
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      s += std::exp(c * x[i]) * (v[i] * h * e1 + (v[i + 1] - v[i]) * h * e2);
    }
    return s / mass;
  };
  double mean = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    mean += v[i] * (x[i] * h + h * h / 2.0) + (v[i + 1] - v[i]) * (x[i] * h / 2.0 + h * h / 3.0);
  }
  mean /= mass;
  OracleResult res;
  res.roots.push_back(0.0);
  if (std::abs(mean) < 1e-12) {
    res.note = "zero mean: M(c) = 1 only at c = 0";
    return res;
  }
  auto root = second_root(mgf, mean > 0 ? -1.0 : 1.0, res.note);
  if (!root) {
    res.warning = true;
    return res;
  }
  res.roots.push_back(*root);
  return res;
}

PropertyReport majorant_properties_check(const std::vector<MajorantEstimate>& estimates, double tol) {
  PropertyReport rep;
  std::map<GroupElement, const MajorantEstimate*> by_element;
  for (const auto& e : estimates) by_element[e.element] = &e;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failures.push_back(std::move(msg));
  };
  for (const auto& e : estimates) {
    const std::string name = format_element(e.element);
    if (e.oracle_exact) {
      if (*e.oracle_exact < 1) fail("oracle below 1 at " + name);
      if (is_identity(e.element) && *e.oracle_exact != 1) fail("oracle at the identity differs from 1");
    } else if (e.oracle) {
      if (*e.oracle < 1.0 - tol) fail("oracle below 1 at " + name);
      if (is_identity(e.element) && std::abs(*e.oracle - 1.0) > tol) fail("oracle at the identity differs from 1");
    }
    const double oracle = e.oracle_exact ? e.oracle_exact->get_d() : e.oracle.value_or(1.0);
    if ((e.oracle || e.oracle_exact) && e.upper < oracle * (1.0 - tol)) fail("certificate bound below oracle at " + name);
  }
  for (const auto& g : estimates) {
    for (const auto& h : estimates) {
      if (family_of(g.element) != family_of(h.element)) continue;
      auto it = by_element.find(compose(g.element, h.element));
      if (it == by_element.end()) continue;
      const auto& gh = *it->second;
      if (gh.oracle_exact && g.oracle_exact && h.oracle_exact) {
        ++rep.pairs_checked;
        if (*gh.oracle_exact > *g.oracle_exact * *h.oracle_exact) {
          fail("submultiplicativity fails for " + format_element(g.element) + " * " + format_element(h.element));
        }
      } else if (gh.oracle && g.oracle && h.oracle) {
        ++rep.pairs_checked;
        if (*gh.oracle > *g.oracle * *h.oracle * (1.0 + tol)) {
          fail("submultiplicativity fails for " + format_element(g.element) + " * " + format_element(h.element));
        }
      }
    }
  }
  return rep;
}

double gaussian_alpha(const std::vector<double>& g, double s, double t, const std::vector<double>& b) {
  if (!(s > 0.0) || !(t > s)) throw std::domain_error("gaussian_alpha needs 0 < s < t");
  if (g.size() != b.size() || g.empty()) throw std::invalid_argument("g and drift must share a positive dimension");
  const double d = static_cast<double>(g.size());
  double q2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double q = g[i] - (t - s) * b[i];
    q2 += q * q;
  }
  return std::pow(t / s, d / 2.0) * std::exp(q2 / (4.0 * (t - s)));
}

double gaussian_log_ratio(const std::vector<double>& v, const std::vector<double>& g, double s, double t,
                          const std::vector<double>& b) {
  const double d = static_cast<double>(g.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double u = v[i] - g[i] - s * b[i];
    const double w = v[i] - t * b[i];
    num += u * u;
    den += w * w;
  }
  return 0.5 * d * std::log(t / s) - num / (4.0 * s) + den / (4.0 * t);
}

double gaussian_ratio_grid_sup(const std::vector<double>& g, double s, double t, const std::vector<double>& b,
                               int points_per_axis, int levels) {
  if (!(s > 0.0) || !(t > s)) throw std::domain_error("gaussian ratio needs 0 < s < t");
  if (points_per_axis < 3) throw std::invalid_argument("need at least 3 points per axis");
  const std::size_t d = g.size();
  double scale = 1.0;
  for (std::size_t i = 0; i < d; ++i) scale += std::abs(g[i]) + t * std::abs(b[i]);
  double half = 4.0 * scale * t / (t - s);
  std::vector<double> center = g;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_v = center;
  std::vector<int> idx(d);
  std::vector<double> v(d);
  const int P = points_per_axis;
  for (int level = 0; level < levels; ++level) {
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (std::size_t i = 0; i < d; ++i) v[i] = center[i] - half + 2.0 * half * idx[i] / (P - 1);
      const double lr = gaussian_log_ratio(v, g, s, t, b);
      if (lr > best) {
        best = lr;
        best_v = v;
      }
      std::size_t i = 0;
      while (i < d && ++idx[i] == P) idx[i++] = 0;
      if (i == d) break;
    }
    center = best_v;
    half *= 2.0 / (P - 1);
  }
  return std::exp(best);
}

std::vector<GroupElement> word_ball(const DiscreteMeasure& theta, int r) {
  if (r < 0) throw std::invalid_argument("radius must be nonnegative");
  std::set<GroupElement> ball{theta.identity()};
  std::vector<GroupElement> gens;
  if (theta.family() == Family::kLattice) {
    for (auto& p : lattice_generators(static_cast<std::size_t>(theta.rank()))) gens.emplace_back(p);
  } else {
    for (auto& w : free_generators(theta.rank())) gens.emplace_back(w);
  }
  std::vector<GroupElement> frontier{theta.identity()};
  for (int step = 0; step < r; ++step) {
    std::vector<GroupElement> next;
    for (const auto& x : frontier) {
      for (const auto& s : gens) {
        auto y = compose(x, s);
        if (ball.insert(y).second) next.push_back(std::move(y));
      }
    }
    frontier = std::move(next);
  }
  return {ball.begin(), ball.end()};
}

HarnackExponentReport harnack_exponent(const DiscreteMeasure& theta, const std::vector<int>& radii, int max_n,
                                       PowerLimits limits) {
  if (radii.empty()) throw std::invalid_argument("need at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 1 || (i > 0 && radii[i] <= radii[i - 1])) throw std::invalid_argument("radii must be increasing and >= 1");
  }
  HarnackExponentReport rep;
  rep.radii = radii;
  const bool use_oracle = theta.family() == Family::kLattice && theta.rank() == 1;
  std::optional<OracleResult> oracle;
  if (use_oracle) {
    oracle = exp_oracle(theta);
    if (oracle->warning) rep.warnings.push_back("oracle: " + oracle->note);
  }
  std::vector<DiscreteMeasure> powers;
  auto bound_of = [&](const GroupElement& g) -> std::optional<double> {
    if (oracle && !oracle->warning) {
      const auto k = std::get<LatticePoint>(g)[0];
      if (auto ex = oracle->exact_value(k)) return ex->get_d();
      return oracle->value(static_cast<double>(k));
    }
    if (powers.empty()) powers = convolution_powers(theta, max_n, limits);
    try {
      rep.upper_estimate = true;
      return certificate_from_powers(powers, g).bound_double();
    } catch (const CertificateError&) {
      return std::nullopt;
    }
  };
  std::map<GroupElement, std::optional<double>> cache;
  for (int r : radii) {
    double worst = 1.0;
    std::size_t excluded = 0;
    for (const auto& g : word_ball(theta, r)) {
      auto it = cache.find(g);
      if (it == cache.end()) it = cache.emplace(g, bound_of(g)).first;
      if (it->second) {
        worst = std::max(worst, *it->second);
      } else {
        ++excluded;
      }
    }
    if (excluded > 0) {
      rep.warnings.push_back(std::to_string(excluded) + " elements of B_" + std::to_string(r) + " unreachable within " +
                             std::to_string(max_n) + " steps were excluded");
    }
    rep.theta_of_r.push_back(std::log(worst));
    rep.slope.push_back(rep.theta_of_r.back() / r);
  }
  rep.gamma_hat = *std::min_element(rep.slope.begin(), rep.slope.end());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    for (std::size_t j = 0; j < radii.size(); ++j) {
      auto it = std::find(radii.begin(), radii.end(), radii[i] + radii[j]);
      if (it == radii.end()) continue;
      const auto k = static_cast<std::size_t>(it - radii.begin());
      if (rep.theta_of_r[k] > rep.theta_of_r[i] + rep.theta_of_r[j] + 1e-9) rep.subadditive = false;
    }
  }
  return rep;
}

std::vector<double> delta_K(const GridDensity& phi, const std::function<double(double)>& majorant,
                            const std::vector<double>& radii) {
  if (!phi.is_uniform()) throw std::invalid_argument("delta_K expects a density on a uniform grid");
  const double h = phi.spec().spacing();
  double rmax = 0.0;
  for (double r : radii) {
    if (r < 0.0) throw std::invalid_argument("radii must be nonnegative");
    rmax = std::max(rmax, r);
  }
  const auto& v = phi.values();
  const long n = static_cast<long>(v.size());
  const long jmax = static_cast<long>(std::floor(rmax / h + 1e-9));
  const double x0 = phi.nodes().front();
  // Extended node i corresponds to x0 + (i - jmax) h.
  std::vector<double> m(static_cast<std::size_t>(n + 2 * jmax));
  for (long i = 0; i < static_cast<long>(m.size()); ++i) m[i] = majorant(x0 + static_cast<double>(i - jmax) * h);
  auto val = [&](long i) { return i >= 0 && i < n ? v[i] : 0.0; };
  // I[j] for shifts j = 0, 1, ..., jmax and -1, ..., -jmax.
  std::vector<double> best(static_cast<std::size_t>(jmax) + 1, 0.0);
  for (long j = 1; j <= jmax; ++j) {
    for (long sgn : {1L, -1L}) {
      const long shift = sgn * j;
      double s = 0.0;
      for (long i = 0; i < static_cast<long>(m.size()); ++i) {
        const long k = i - jmax;
        const double d = std::abs(val(k) - val(k - shift));
        const bool end = i == 0 || i + 1 == static_cast<long>(m.size());
        s += (end ? 0.5 : 1.0) * m[i] * d;
      }
      best[j] = std::max(best[j], s * h);
    }
  }
  for (std::size_t j = 1; j < best.size(); ++j) best[j] = std::max(best[j], best[j - 1]);
  std::vector<double> out;
  for (double r : radii) out.push_back(best[static_cast<std::size_t>(std::floor(r / h + 1e-9))]);
  return out;
}

}  // namespace rwlab
