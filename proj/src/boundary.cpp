#include "rwlab/boundary.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace rwlab {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;

// expm1(y)/y, continuous at 0.
double expm1_over(double y) { return std::abs(y) < 1e-12 ? 1.0 + 0.5 * y : std::expm1(y) / y; }

// Integral of t^s va (t/xa)^p over [xa, z].
double power_piece(double va, double xa, double s, double p, double z) {
  const double L = std::log(z / xa);
  return va * std::exp((s + 1.0) * std::log(xa)) * L * expm1_over((s + p + 1.0) * L);
}

// Integral of t^s over [xa, z].
double power_moment(double xa, double k, double z) {
  const double L = std::log(z / xa);
  return std::exp(k * std::log(xa)) * L * expm1_over(k * L);
}

/// One side of a density on the composite grid, seen as a function of the
/// distance t > 0 to the singular point, with cumulative moment integrals
/// int t^s rho(t) dt for s in {0, -1, -beta}. Segments are power laws when
/// both ends are positive (linear otherwise) and the first segment is
/// extended to 0 as a power law.
class HalfLine {
 public:
  HalfLine(std::vector<double> t, std::vector<double> v, double beta) : t_(std::move(t)), v_(std::move(v)) {
    s_ = {0.0, -1.0, -beta};
    p0_ = 0.0;
    if (t_.size() >= 2 && v_[0] > 0.0 && v_[1] > 0.0) p0_ = std::log(v_[1] / v_[0]) / std::log(t_[1] / t_[0]);
    if (!std::isfinite(p0_)) p0_ = 0.0;
    p0_ = std::max(p0_, -0.95);
    const std::size_t n = t_.size();
    for (int k = 0; k < 3; ++k) {
      full_[k].resize(n > 0 ? n - 1 : 0);
      for (std::size_t j = 0; j + 1 < n; ++j) full_[k][j] = seg(k, j, t_[j + 1]);
      pre_[k].assign(n, 0.0);
      for (std::size_t j = 1; j < n; ++j) pre_[k][j] = pre_[k][j - 1] + full_[k][j - 1];
      suf_[k].assign(n, 0.0);
      for (std::size_t j = n - 1; j-- > 0;) suf_[k][j] = suf_[k][j + 1] + full_[k][j];
      const double e = s_[k] + p0_ + 1.0;
      below_[k] = e > 0.0 && n > 0 ? v_[0] * std::exp((s_[k] + 1.0) * std::log(t_[0])) / e
                                   : std::numeric_limits<double>::quiet_NaN();
    }
  }

  bool empty() const { return t_.empty(); }

  /// int_{t_0}^{z} (negative for z < t_0).
  double rel(int k, double z) const {
    if (t_.empty() || z <= 0.0) return 0.0;
    if (z <= t_.front()) return power_piece(v_[0], t_[0], s_[k], p0_, z);
    if (z >= t_.back()) return pre_[k].back();
    const std::size_t j = locate(z);
    return pre_[k][j] + seg(k, j, z);
  }
  /// int_0^z (convergent moments only).
  double cum(int k, double z) const {
    if (t_.empty() || z <= 0.0) return 0.0;
    return below_[k] + rel(k, z);
  }
  /// int_z^infinity.
  double tail(int k, double z) const {
    if (t_.empty()) return 0.0;
    if (z >= t_.back()) return 0.0;
    if (z <= t_.front()) return suf_[k][0] - rel(k, z);
    const std::size_t j = locate(z);
    return suf_[k][j + 1] + (full_[k][j] - seg(k, j, z));
  }
  double total(int k) const { return t_.empty() ? 0.0 : below_[k] + suf_[k][0]; }

 private:
  std::size_t locate(double z) const {
    return static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), z) - t_.begin()) - 1;
  }
  // int_{t_j}^{z} t^s rho, z in [t_j, t_{j+1}]
  double seg(int k, std::size_t j, double z) const {
    const double ta = t_[j], tb = t_[j + 1], va = v_[j], vb = v_[j + 1];
    if (z <= ta) return 0.0;
    if (va > 0.0 && vb > 0.0) {
      const double p = std::log(vb / va) / std::log(tb / ta);
      return power_piece(va, ta, s_[k], p, z);
    }
    const double c1 = (vb - va) / (tb - ta), c0 = va - c1 * ta;
    return c0 * power_moment(ta, s_[k] + 1.0, z) + c1 * power_moment(ta, s_[k] + 2.0, z);
  }

  std::vector<double> t_, v_;
  std::array<double, 3> s_{};
  double p0_ = 0.0;
  std::array<std::vector<double>, 3> full_, pre_, suf_;
  std::array<double, 3> below_{};
};

/// Distribution of U = A R restricted to one sign, as a function of |y|.
class HalfMixture {
 public:
  HalfMixture(const HalfLine& r, const CounterexampleParams& p) : r_(r), p_(p) {
    mass_ = r_.total(0);
    pa_ = p_.c_A * p_.M * std::pow(0.5, p_.beta) / p_.beta;
  }
  double mass() const { return mass_; }
  /// P(0 < |U| <= y) on this side.
  double lower(double y) const {
    if (r_.empty() || y <= 0.0) return 0.0;
    const double b = p_.beta, d = p_.delta;
    const double lo = y / (1.0 + d), hi = y / (1.0 - d);
    const double power = pa_ * r_.cum(0, 2.0 * y) + p_.c_A * p_.M * std::pow(y, b) / b * r_.tail(2, 2.0 * y);
    const double unif = 2.0 * d * r_.cum(0, lo) + y * (r_.rel(1, hi) - r_.rel(1, lo)) -
                        (1.0 - d) * (r_.cum(0, hi) - r_.cum(0, lo));
    return power + p_.c_A * unif;
  }
  /// P(|U| > y) on this side, accurate in the far tail.
  double upper(double y) const {
    if (r_.empty()) return 0.0;
    if (y <= 0.0) return mass_;
    const double b = p_.beta, d = p_.delta;
    const double lo = y / (1.0 + d), hi = y / (1.0 - d);
    const double power = p_.c_A * p_.M / b * (std::pow(0.5, b) * r_.tail(0, 2.0 * y) - std::pow(y, b) * r_.tail(2, 2.0 * y));
    const double band = (r_.tail(0, lo) - r_.tail(0, hi));
    const double unif = 2.0 * d * r_.tail(0, hi) + (1.0 + d) * band - y * (r_.rel(1, hi) - r_.rel(1, lo));
    return power + p_.c_A * unif;
  }
  /// Mass of U in (y1, y2] on this side, 0 <= y1 < y2.
  double between(double y1, double y2) const {
    double m;
    if (lower(y1) < 0.5 * mass_) {
      m = lower(y2) - lower(y1);
    } else {
      m = upper(y1) - upper(y2);
    }
    return std::max(0.0, m);
  }
  /// Density of |U| at y > 0.
  double density(double y) const {
    if (r_.empty()) return 0.0;
    const double b = p_.beta, d = p_.delta;
    return p_.c_A * (p_.M * std::pow(y, b - 1.0) * r_.tail(2, 2.0 * y) + r_.rel(1, y / (1.0 - d)) - r_.rel(1, y / (1.0 + d)));
  }

 private:
  const HalfLine& r_;
  const CounterexampleParams& p_;
  double mass_ = 0.0;
  double pa_ = 0.0;
};

struct Sides {
  HalfLine pos, neg;
  std::size_t first_pos = 0;  // index of the first node > 0
};

Sides split_sides(const GridDensity& rho, double beta) {
  if (!rho.spec().refine || rho.spec().singular_point != 0.0) {
    throw std::invalid_argument("the scale-mixture operator needs a composite grid refined at 0");
  }
  const auto& x = rho.nodes();
  const auto& v = rho.values();
  const std::size_t fp = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), 0.0) - x.begin());
  if (fp == 0 || fp == x.size()) throw std::invalid_argument("grid must contain nodes on both sides of 0");
  std::vector<double> tp(x.begin() + static_cast<long>(fp), x.end()), vp(v.begin() + static_cast<long>(fp), v.end());
  std::vector<double> tn, vn;
  for (std::size_t i = fp; i-- > 0;) {
    tn.push_back(-x[i]);
    vn.push_back(v[i]);
  }
  return {HalfLine(std::move(tp), std::move(vp), beta), HalfLine(std::move(tn), std::move(vn), beta), fp};
}

/// H(z) = sgn(z) P((1-alpha)/2, z^2), so that the distribution function of B
/// is (1 + H)/2; differences are taken in the upper tail where needed.
class BKernel {
 public:
  explicit BKernel(const CounterexampleParams& p) : p_(p) {
    a_ = (1.0 - p.alpha) / 2.0;
    inv_gamma_a1_ = 1.0 / boost::math::tgamma(a_ + 1.0);
  }
  double P(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 2.0) return boost::math::gamma_p(a_, x);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= x / (a_ + k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::exp(a_ * std::log(x) - x) * inv_gamma_a1_ * sum;
  }
  double Q(double x) const { return x < 2.0 ? 1.0 - P(x) : boost::math::gamma_q(a_, x); }
  double H(double z) const { return z >= 0.0 ? P(z * z) : -P(z * z); }
  /// H(z1) - H(z2) for z1 >= z2.
  double diff(double z1, double z2) const {
    if (z2 >= 1.0) return Q(z2 * z2) - Q(z1 * z1);
    if (z1 <= -1.0) return Q(z1 * z1) - Q(z2 * z2);
    return H(z1) - H(z2);
  }
  double density(double b) const {
    const double ab = std::abs(b);
    return p_.c_B * std::pow(ab, -p_.alpha) * std::exp(-b * b);
  }
  /// Density at x of (mass m spread uniformly on [lo, hi]) + B.
  double cell(double x, double lo, double hi, double m) const {
    if (m == 0.0) return 0.0;
    const double w = hi - lo, mid = 0.5 * (lo + hi);
    if (w < 1e-4 * std::abs(x - mid)) return m * density(x - mid);
    return m * diff(x - lo, x - hi) / (2.0 * w);
  }

 private:
  const CounterexampleParams& p_;
  double a_ = 0.0;
  double inv_gamma_a1_ = 0.0;
};

struct PanelCell {
  double lo, hi, mass;
};

constexpr int kCentralSubcells = 60;
constexpr long kEdgeCells = 16;
constexpr double kNearRadius = 0.5;

}  // namespace

CounterexampleParams make_params(double alpha, double beta, double delta, double M) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParamError("alpha must lie in (0,1)");
  if (!(beta > 0.0 && beta < alpha)) throw ParamError("beta must satisfy 0 < beta < alpha");
  if (!(delta > 0.0 && delta < 0.25)) throw ParamError("delta must lie in (0, 1/4)");
  if (!(M > 0.0) || !std::isfinite(M)) throw ParamError("M must be positive");
  CounterexampleParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.delta = delta;
  p.M = M;
  const double half_pow = std::pow(0.5, beta) / beta;  // int_0^{1/2} a^{beta-1} da
  p.c_A = 1.0 / (M * half_pow + 2.0 * delta);
  p.c_B = 1.0 / boost::math::tgamma((1.0 - alpha) / 2.0);
  p.p_power = p.c_A * M * half_pow;

  auto xlogx = [](double a) { return a * std::log(a) - a; };
  p.E_log_A = p.c_A * M * half_pow * (std::log(0.5) - 1.0 / beta) + p.c_A * (xlogx(1.0 + delta) - xlogx(1.0 - delta));

  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double q_pow = ts.integrate([&](double a) { return std::pow(a, beta - 1.0) * std::log(a); }, 0.0, 0.5);
  const double q_uni = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [](double a) { return std::log(a); }, 1.0 - delta, 1.0 + delta);
  p.E_log_A_quadrature = p.c_A * (M * q_pow + q_uni);

  const double half_b = ts.integrate([&](double b) { return std::pow(b, -alpha) * std::exp(-b * b); }, 0.0, 1.0) +
                        es.integrate([&](double b) { return std::pow(b + 1.0, -alpha) * std::exp(-(b + 1.0) * (b + 1.0)); });
  p.c_B_quadrature = 1.0 / (2.0 * half_b);
  p.E_log_plus_abs_B = 2.0 * p.c_B * es.integrate([&](double u) {
    const double b = u + 1.0;
    return std::log(b) * std::pow(b, -alpha) * std::exp(-b * b);
  });
  if (!(p.E_log_A < 0.0)) throw ParamError("E[log A] >= 0 for these parameters; increase M");
  return p;
}

double density_A(const CounterexampleParams& p, double a) {
  if (a <= 0.0) return 0.0;
  double f = 0.0;
  if (a < 0.5) f += p.M * std::pow(a, p.beta - 1.0);
  if (a > 1.0 - p.delta && a < 1.0 + p.delta) f += 1.0;
  return p.c_A * f;
}

double cdf_A(const CounterexampleParams& p, double a) {
  if (a <= 0.0) return 0.0;
  const double power = p.M * std::pow(std::min(a, 0.5), p.beta) / p.beta;
  const double unif = std::clamp(a - (1.0 - p.delta), 0.0, 2.0 * p.delta);
  return p.c_A * (power + unif);
}

double density_B(const CounterexampleParams& p, double b) {
  if (b == 0.0) return std::numeric_limits<double>::infinity();
  return p.c_B * std::pow(std::abs(b), -p.alpha) * std::exp(-b * b);
}

double cdf_B(const CounterexampleParams& p, double b) {
  const double P = boost::math::gamma_p((1.0 - p.alpha) / 2.0, b * b);
  return 0.5 * (1.0 + (b >= 0.0 ? P : -P));
}

double sample_A(const CounterexampleParams& p, Rng& rng) {
  const double u = rng.uniform();
  if (u < p.p_power) return 0.5 * std::pow(rng.uniform_open(), 1.0 / p.beta);
  return rng.uniform(1.0 - p.delta, 1.0 + p.delta);
}

double sample_B(const CounterexampleParams& p, Rng& rng) {
  const double a = p.alpha;
  const double K = 2.0 * p.c_B * std::max(2.0 / (1.0 - a), 1.0 / kInvSqrtPi);
  double b;
  while (true) {
    if (rng.uniform() < 0.5) {
      b = std::pow(rng.uniform_open(), 1.0 / (1.0 - a));
    } else {
      b = std::abs(rng.normal()) / std::sqrt(2.0);
      if (b == 0.0) continue;
    }
    const double q = (b <= 1.0 ? 0.5 * (1.0 - a) * std::pow(b, -a) : 0.0) + kInvSqrtPi * std::exp(-b * b);
    const double target = 2.0 * p.c_B * std::pow(b, -a) * std::exp(-b * b);
    if (rng.uniform() * K * q <= target) break;
  }
  return (rng.bits() >> 63) ? -b : b;
}

double ScaleMixture::total_mass() const {
  return std::accumulate(cell_mass.begin(), cell_mass.end(), 0.0);
}

double ScaleMixture::positive_mass() const {
  double s = central_pos;
  for (std::size_t k = central_cell + 1; k < cell_mass.size(); ++k) s += cell_mass[k];
  return s;
}

ScaleMixture rho_U_of(const GridDensity& rho, const CounterexampleParams& p) {
  const Sides sides = split_sides(rho, p.beta);
  const HalfMixture pos(sides.pos, p), neg(sides.neg, p);
  const auto& x = rho.nodes();
  std::vector<double> dens(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dens[i] = x[i] > 0.0 ? pos.density(x[i]) : neg.density(-x[i]);
  for (double& d : dens) d = std::max(0.0, d);
  ScaleMixture out{GridDensity(rho.spec(), x, std::move(dens)), {}, sides.first_pos - 1, 0.0, 0.0,
                   pos.mass() + neg.mass()};
  out.cell_mass.resize(x.size() - 1);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    if (k == out.central_cell) {
      out.central_pos = pos.lower(x[k + 1]);
      out.central_neg = neg.lower(-x[k]);
      out.cell_mass[k] = out.central_pos + out.central_neg;
    } else if (x[k] > 0.0) {
      out.cell_mass[k] = pos.between(x[k], x[k + 1]);
    } else {
      out.cell_mass[k] = neg.between(-x[k + 1], -x[k]);
    }
  }
  return out;
}

GridDensity initial_density(const CounterexampleParams& p, const GridSpec& spec) {
  return GridDensity::sample(spec, [&](double x) { return density_B(p, x); }).normalized();
}

GridDensity apply_T(const GridDensity& rho, const CounterexampleParams& p) {
  const GridSpec& spec = rho.spec();
  const Sides sides = split_sides(rho, p.beta);
  const HalfMixture pos(sides.pos, p), neg(sides.neg, p);
  const BKernel B(p);
  const auto& x = rho.nodes();
  const double h = spec.spacing();
  const long N = spec.uniform_intervals;

  // Uniform index of each node, or -1 for refinement nodes.
  const double outer = spec.panel_outer();
  std::vector<long> uidx(x.size(), -1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) < outer * (1.0 - 1e-12)) continue;
    const double u = (x[i] - spec.x_lo) / h;
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-7) uidx[i] = static_cast<long>(r);
  }

  std::vector<double> um(static_cast<std::size_t>(N), 0.0);    // uniform cell masses
  std::vector<double> lump(static_cast<std::size_t>(N), 0.0);  // refinement masses binned
  std::vector<PanelCell> panel;
  auto add_panel = [&](double lo, double hi, double m) {
    if (m <= 0.0) return;
    panel.push_back({lo, hi, m});
    const long bin = std::clamp(static_cast<long>(std::floor((0.5 * (lo + hi) - spec.x_lo) / h)), 0L, N - 1);
    lump[static_cast<std::size_t>(bin)] += m;
  };
  const std::size_t cc = sides.first_pos - 1;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    if (k == cc) {
      // Split (x_-, 0) and (0, x_+) into geometric sub-cells toward 0.
      for (int side = 0; side < 2; ++side) {
        const HalfMixture& hm = side == 0 ? pos : neg;
        const double r0 = side == 0 ? x[k + 1] : -x[k];
        double outer = r0;
        for (int j = 0; j < kCentralSubcells; ++j) {
          const double inner = 0.5 * outer;
          const double m = hm.between(inner, outer);
          side == 0 ? add_panel(inner, outer, m) : add_panel(-outer, -inner, m);
          outer = inner;
        }
        const double m = hm.lower(outer);
        side == 0 ? add_panel(0.0, outer, m) : add_panel(-outer, 0.0, m);
      }
      continue;
    }
    const double m = x[k] > 0.0 ? pos.between(x[k], x[k + 1]) : neg.between(-x[k + 1], -x[k]);
    if (uidx[k] >= 0 && uidx[k + 1] == uidx[k] + 1) {
      um[static_cast<std::size_t>(uidx[k])] = m;
    } else {
      add_panel(x[k], x[k + 1], m);
    }
  }

  // Cell-averaged kernel kappa(d) = (H(d h) - H((d-1) h)) / (2h), stored
  // reversed so that sums over cells run forward through memory.
  std::vector<double> krev(static_cast<std::size_t>(2 * N + 1));
  for (long d = -N; d <= N; ++d) krev[static_cast<std::size_t>(N - d)] = B.diff(d * h, (d - 1) * h) / (2.0 * h);
  auto toeplitz = [&](const std::vector<double>& m, long i, long j_lo, long j_hi) {
    // sum_{j in [j_lo, j_hi)} m[j] kappa(i - j)
    const double* k = krev.data() + (N - i);
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    long j = j_lo;
    for (; j + 3 < j_hi; j += 4) {
      s0 += m[j] * k[j];
      s1 += m[j + 1] * k[j + 1];
      s2 += m[j + 2] * k[j + 2];
      s3 += m[j + 3] * k[j + 3];
    }
    for (; j < j_hi; ++j) s0 += m[j] * k[j];
    return (s0 + s1) + (s2 + s3);
  };

  // Refinement panel in uniform indices [jl, jr]; edge cells next to it.
  const long jl = std::lround((-outer - spec.x_lo) / h), jr = std::lround((outer - spec.x_lo) / h);
  const long el = std::max(0L, jl - kEdgeCells), er = std::min(N, jr + kEdgeCells);
  std::vector<double> s_far(static_cast<std::size_t>(jr - jl + 1));
  for (long i = jl; i <= jr; ++i) {
    s_far[static_cast<std::size_t>(i - jl)] = toeplitz(um, i, 0, el) + toeplitz(um, i, er, N);
  }
  auto panel_direct = [&](double xv) {
    double s = 0.0;
    for (const auto& c : panel) s += B.cell(xv, c.lo, c.hi, c.mass);
    return s;
  };

  std::vector<double> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double xv = x[n];
    double val;
    if (uidx[n] >= 0) {
      const long i = uidx[n];
      val = toeplitz(um, i, 0, N);
      if (std::abs(xv) < kNearRadius) {
        val += panel_direct(xv);
      } else {
        val += toeplitz(lump, i, std::max(0L, jl - 1), std::min(N, jr + 1));
      }
    } else {
      const double u = (xv - spec.x_lo) / h;
      const long i = std::clamp(static_cast<long>(std::floor(u)), jl, jr - 1);
      const double t = u - static_cast<double>(i);
      val = (1.0 - t) * s_far[static_cast<std::size_t>(i - jl)] + t * s_far[static_cast<std::size_t>(i + 1 - jl)];
      for (long j = el; j < jl; ++j) val += B.cell(xv, spec.x_lo + j * h, spec.x_lo + (j + 1) * h, um[static_cast<std::size_t>(j)]);
      for (long j = jr; j < er; ++j) val += B.cell(xv, spec.x_lo + j * h, spec.x_lo + (j + 1) * h, um[static_cast<std::size_t>(j)]);
      val += panel_direct(xv);
    }
    out[n] = std::max(0.0, val);
  }
  GridDensity next(spec, x, std::move(out));
  next.normalize();
  return next;
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  if (a.size() != b.size()) throw IncompatibleGrids("L1 distance needs densities on the same grid");
  const auto& x = a.nodes();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double d0 = std::abs(a.values()[i] - b.values()[i]);
    const double d1 = std::abs(a.values()[i + 1] - b.values()[i + 1]);
    s += 0.5 * (d0 + d1) * (x[i + 1] - x[i]);
  }
  return s;
}

StationaryDensity fixed_point_solve(const CounterexampleParams& p, const GridSpec& spec, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  GridDensity rho = initial_density(p, spec);
  StationaryDensity out{rho, std::numeric_limits<double>::infinity(), 0, false, {}, 0.0};
  for (int it = 1; it <= max_iter; ++it) {
    GridDensity next = apply_T(rho, p);
    const double r = l1_distance(next, rho);
    out.history.push_back(r);
    out.iterations = it;
    out.residual = r;
    rho = std::move(next);
    if (r < tol) {
      out.converged = true;
      break;
    }
  }
  out.rho = std::move(rho);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RSamples simulate_R_infty(const CounterexampleParams& p, int N, std::size_t n_samples, std::uint64_t seed, int workers) {
  if (N < 1) throw std::invalid_argument("need at least one step");
  RSamples out;
  out.steps = N;
  out.values.resize(n_samples);
  std::vector<double> q_end(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    double Q = 1.0, R = 0.0;
    for (int n = 0; n < N; ++n) {
      const double a = sample_A(p, rng);
      const double b = sample_B(p, rng);
      R += Q * b;
      Q *= a;
    }
    out.values[i] = R;
    q_end[i] = Q;
  });
  for (double q : q_end) out.max_abs_Q = std::max(out.max_abs_Q, std::abs(q));
  return out;
}

namespace {

void require_inside(const GridDensity& rho, double y, const char* what) {
  if (!(y >= rho.lo() && y <= rho.hi())) {
    throw DomainError(std::string(what) + " = " + std::to_string(y) + " lies outside the grid; refusing to extrapolate");
  }
}

}  // namespace

RNEvaluation rn_derivative(const AffMap& g, double x, const GridDensity& rho) {
  require_inside(rho, x, "x");
  const double y = g.inverse_apply(x);
  require_inside(rho, y, "g^{-1}.x");
  return {g, x, std::exp(-g.log_a()) * rho(y) / rho(x)};
}

double rn_strict(const AffMap& g, double x, const GridDensity& rho) {
  require_inside(rho, x, "x");
  const double y = g.apply(x);
  require_inside(rho, y, "g.x");
  return std::exp(g.log_a()) * rho(y) / rho(x);
}

BlowupReport blowup_report(const GridDensity& rho, const CounterexampleParams& p) {
  BlowupReport r;
  r.c0 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return std::pow(x, -p.beta) * rho(x); }, 1.0, 2.0, 12, 1e-12);
  r.C = r.c0 * p.c_A * p.c_B * p.M / (std::exp(1.0) * p.beta * std::pow(2.0, p.beta));
  r.worst_ratio = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double x = rho.nodes()[i];
    if (!(x > 0.0 && x < 0.125)) continue;
    ++r.nodes_checked;
    const double ratio = rho.values()[i] / (r.C * std::pow(x, p.beta - p.alpha));
    if (ratio < r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_x = x;
    }
    if (ratio < 1.0) ++r.violations;
    if (x >= 1e-4 && x <= 1e-2) {
      lx.push_back(std::log(x));
      ly.push_back(std::log(rho.values()[i]));
    }
  }
  if (lx.size() >= 2) r.fitted_slope = least_squares(lx, ly).slope;
  r.ratio_1e4_1e2 = rho(1e-4) / rho(1e-2);
  r.ratio_threshold = 0.5 * std::pow(1e-4 / 1e-2, p.beta - p.alpha);
  r.ok = r.violations == 0 && r.nodes_checked > 0 && r.ratio_1e4_1e2 >= r.ratio_threshold;
  return r;
}

AwayReport away_from_zero_report(const GridDensity& rho, double t, const GridDensity* refined) {
  if (t == 0.0) throw std::domain_error("the window (t, t + |t|/8) is empty for t = 0");
  auto window_max = [t](const GridDensity& d) {
    const double a = t, b = t + std::abs(t) / 8.0;
    double m = std::max(d(a), d(b));
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.nodes()[i] > a && d.nodes()[i] < b) m = std::max(m, d.values()[i]);
    }
    return m;
  };
  AwayReport r;
  r.t = t;
  r.C_t = window_max(rho);
  r.ok = std::isfinite(r.C_t);
  if (refined != nullptr) {
    r.C_t_refined = window_max(*refined);
    r.refinement_ratio = std::max(*r.C_t_refined / r.C_t, r.C_t / *r.C_t_refined);
    r.ok = r.ok && *r.refinement_ratio < 2.0;
  }
  return r;
}

double rn_translation_sup(const GridDensity& rho, double t) {
  if (t == 0.0) throw std::domain_error("need t != 0");
  double best = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double x = rho.nodes()[i];
    if (!(x > 0.0 && x < std::abs(t) / 8.0)) continue;
    best = std::max(best, rn_derivative(AffMap::translation(t), t + x, rho).value);
  }
  return best;
}

SatStarReport sat_star_failure(const GridDensity& rho, double t, const GridDensity* deep) {
  if (t == 0.0) throw std::domain_error("need t != 0");
  SatStarReport r;
  r.t = t;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double x = rho.nodes()[i];
    if (!(x > 0.0 && x < std::abs(t) / 8.0)) continue;
    const double v = rn_derivative(AffMap::translation(t), t + x, rho).value;
    if (v > r.sup) {
      r.sup = v;
      r.argmax = x;
    }
  }
  double best = r.sup;
  if (deep != nullptr) {
    r.sup_deep = rn_translation_sup(*deep, t);
    r.growth = *r.sup_deep / r.sup;
    best = std::max(best, *r.sup_deep);
  }
  r.above_1e2 = best > 1e2;
  r.above_1e3 = best > 1e3;
  r.ok = r.above_1e3 && (!r.growth || *r.growth >= 2.0);
  return r;
}

double sample_grid(const GridDensity& rho, Rng& rng) { return rho.quantile(rng.uniform_open()); }

MeanSe poisson_transform_mc(const std::function<double(double)>& f, const AffMap& g, const GridDensity& rho,
                            std::size_t n_samples, std::uint64_t seed, int workers) {
  std::vector<double> v(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    v[i] = f(g.apply(sample_grid(rho, rng)));
  });
  return mean_se(v);
}

HarmonicityProbe harmonicity_probe(const std::function<double(double)>& f, const AffMap& g,
                                   const CounterexampleParams& p, const GridDensity& rho, std::size_t n_outer,
                                   std::size_t n_inner, std::uint64_t seed, int workers) {
  HarmonicityProbe r;
  r.pf_g = poisson_transform_mc(f, g, rho, n_outer * n_inner, derive_seed(seed, 0x5eed0001ULL), workers);
  std::vector<double> outer(n_outer);
  const std::uint64_t s2 = derive_seed(seed, 0x5eed0002ULL);
  parallel_for(n_outer, workers, [&](std::size_t i) {
    Rng rng(derive_seed(s2, i));
    const AffMap h(sample_A(p, rng), sample_B(p, rng));
    const AffMap gh = compose(g, h);
    double s = 0.0;
    for (std::size_t j = 0; j < n_inner; ++j) s += f(gh.apply(sample_grid(rho, rng)));
    outer[i] = s / static_cast<double>(n_inner);
  });
  r.pf_gh = mean_se(outer);
  r.residual = r.pf_g.mean - r.pf_gh.mean;
  r.combined_se = std::hypot(r.pf_g.se, r.pf_gh.se);
  r.ok = std::abs(r.residual) < 3.0 * r.combined_se;
  return r;
}

StationarityKs stationarity_ks(const CounterexampleParams& p, const GridDensity& rho, std::size_t n_samples,
                               std::uint64_t seed, int workers) {
  std::vector<double> xs(n_samples), ys(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    xs[i] = sample_grid(rho, rng);
    const double a = sample_A(p, rng);
    ys[i] = a * xs[i] + sample_B(p, rng);
  });
  StationarityKs r;
  r.ks_pushforward = ks_one_sample(ys, [&](double y) { return rho.cdf(y); });
  r.ks_two_sample = ks_two_sample(std::move(xs), std::move(ys));
  return r;
}

}  // namespace rwlab
