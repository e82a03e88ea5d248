#include "rwlab/dynamics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rwlab {

// ---------------------------------------------------------------- StepLaw

StepLaw StepLaw::discrete(DiscreteMeasure theta) {
  StepLaw law;
  law.family_ = theta.family();
  double acc = 0.0;
  for (const auto& [g, w] : theta.atoms()) {
    law.atoms_.push_back(g);
    acc += w.get_d();
    law.cum_.push_back(acc);
  }
  law.cum_.back() = 1.0;
  law.measure_ = std::move(theta);
  return law;
}

StepLaw StepLaw::counterexample(const CounterexampleParams& p) {
  StepLaw law;
  law.family_ = Family::kAffine;
  law.params_ = p;
  return law;
}

GroupElement StepLaw::identity() const {
  if (params_) return AffMap();
  return measure_->identity();
}

std::size_t StepLaw::draw_index(Rng& rng) const {
  if (!measure_) throw std::logic_error("draw_index needs a discrete law");
  const double u = rng.uniform();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  return std::min(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1);
}

AffMap StepLaw::draw_affine(Rng& rng) const {
  if (!params_) throw std::logic_error("draw_affine needs the affine law");
  const double a = sample_A(*params_, rng);
  const double b = sample_B(*params_, rng);
  return AffMap(a, b);
}

GroupElement StepLaw::draw(Rng& rng) const {
  if (params_) return draw_affine(rng);
  return atoms_[draw_index(rng)];
}

// ---------------------------------------------------------------- walks

GroupElement WalkPath::recovered_increment(std::size_t n) const {
  if (n == 0 || n >= steps.size()) throw std::out_of_range("increment index out of range");
  if (const auto* g = std::get_if<AffMap>(&steps[n - 1])) return between(*g, std::get<AffMap>(steps[n]));
  return compose(inverse(steps[n - 1]), steps[n]);
}

WalkPath simulate_walk(const StepLaw& law, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("walk length must be nonnegative");
  WalkPath path;
  path.seed = seed;
  Rng rng(seed);
  path.steps.reserve(static_cast<std::size_t>(n) + 1);
  path.steps.push_back(law.identity());
  for (int k = 0; k < n; ++k) {
    GroupElement w = law.draw(rng);
    path.steps.push_back(compose(path.steps.back(), w));
    path.increments.push_back(std::move(w));
  }
  return path;
}

// ---------------------------------------------------------------- compact sets

CompactSet CompactSet::lattice_box(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("empty lattice box");
  CompactSet c;
  c.kind_ = Kind::kLatticeBox;
  c.lo_ = lo;
  c.hi_ = hi;
  return c;
}

CompactSet CompactSet::affine_box(double a_lo, double a_hi, double b_max) {
  if (!(a_lo > 0.0 && a_lo <= a_hi && b_max >= 0.0)) throw std::invalid_argument("bad affine box");
  CompactSet c;
  c.kind_ = Kind::kAffineBox;
  c.a_lo_ = a_lo;
  c.a_hi_ = a_hi;
  c.b_max_ = b_max;
  return c;
}

CompactSet CompactSet::word_ball(double r) {
  CompactSet c;
  c.kind_ = Kind::kWordBall;
  c.r_ = r;
  return c;
}

bool CompactSet::contains_lattice(const std::vector<std::int64_t>& z) const {
  if (kind_ == Kind::kWordBall) {
    std::int64_t s = 0;
    for (auto v : z) s += v < 0 ? -v : v;
    return static_cast<double>(s) <= r_;
  }
  if (kind_ != Kind::kLatticeBox) throw FamilyMismatch("affine box applied to a lattice point");
  return std::all_of(z.begin(), z.end(), [&](std::int64_t v) { return v >= lo_ && v <= hi_; });
}

bool CompactSet::contains_affine(double log_a, double b) const {
  if (kind_ == Kind::kWordBall) return word_length(AffMap::from_log_scale(log_a, b)) <= r_;
  if (kind_ != Kind::kAffineBox) throw FamilyMismatch("lattice box applied to an affine map");
  return log_a >= std::log(a_lo_) && log_a <= std::log(a_hi_) && std::abs(b) <= b_max_;
}

bool CompactSet::contains(const GroupElement& g) const {
  if (const auto* z = std::get_if<LatticePoint>(&g)) return contains_lattice(z->coords());
  if (const auto* h = std::get_if<AffMap>(&g)) return contains_affine(h->log_a(), h->b());
  if (kind_ != Kind::kWordBall) throw FamilyMismatch("only word balls apply to free groups");
  return word_length(g) <= r_;
}

std::string CompactSet::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kLatticeBox: os << "coordinates in [" << lo_ << ", " << hi_ << "]"; break;
    case Kind::kAffineBox: os << "a in [" << a_lo_ << ", " << a_hi_ << "], |b| <= " << b_max_; break;
    case Kind::kWordBall: os << "word length <= " << r_; break;
  }
  return os.str();
}

// ---------------------------------------------------------------- escape

namespace {

// Cheap in-place walker: lattice coordinates, free words, or (log a, b).
class Walker {
 public:
  explicit Walker(const StepLaw& law) : law_(law) {
    if (law.family() == Family::kLattice) {
      for (const auto& g : law.atoms()) lattice_steps_.push_back(std::get<LatticePoint>(g).coords());
      z_.assign(law.measure()->rank(), 0);
    } else if (law.family() == Family::kFree) {
      word_ = FreeWord();
    }
  }

  void step(Rng& rng) {
    switch (law_.family()) {
      case Family::kLattice: {
        const auto& s = lattice_steps_[law_.draw_index(rng)];
        for (std::size_t i = 0; i < z_.size(); ++i) z_[i] += s[i];
        break;
      }
      case Family::kFree:
        word_ = compose(word_, std::get<FreeWord>(law_.atoms()[law_.draw_index(rng)]));
        break;
      case Family::kAffine: {
        const AffMap w = law_.draw_affine(rng);
        b_ += std::exp(log_a_) * w.b();
        log_a_ += w.log_a();
        break;
      }
    }
  }

  bool inside(const CompactSet& C) const {
    switch (law_.family()) {
      case Family::kLattice: return C.contains_lattice(z_);
      case Family::kFree: return C.contains(GroupElement(word_));
      case Family::kAffine: return C.contains_affine(log_a_, b_);
    }
    return false;
  }

  double log_a() const { return log_a_; }
  double b() const { return b_; }

 private:
  const StepLaw& law_;
  std::vector<std::vector<std::int64_t>> lattice_steps_;
  std::vector<std::int64_t> z_;
  FreeWord word_;
  double log_a_ = 0.0, b_ = 0.0;
};

}  // namespace

EscapeReport escape_experiment(const StepLaw& law, const CompactSet& C, const std::vector<int>& horizons,
                               std::size_t trials, std::uint64_t seed, int workers) {
  if (horizons.empty() || trials == 0) throw std::invalid_argument("escape needs horizons and trials");
  std::vector<int> hs = horizons;
  std::sort(hs.begin(), hs.end());
  if (hs.front() < 1) throw std::invalid_argument("horizons must be positive");
  const int n_max = hs.back();
  const std::size_t H = hs.size();
  std::vector<unsigned char> stayed(trials * H, 1);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    Walker w(law);
    unsigned char* row = &stayed[i * H];
    for (int m = 1; m <= n_max; ++m) {
      w.step(rng);
      if (w.inside(C)) continue;
      for (std::size_t k = 0; k < H; ++k) {
        if (m <= hs[k] && 2 * m >= hs[k]) row[k] = 0;
      }
    }
  });
  EscapeReport rep;
  rep.set = C.describe();
  rep.trials = trials;
  for (std::size_t k = 0; k < H; ++k) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < trials; ++i) c += stayed[i * H + k];
    const double f = static_cast<double>(c) / static_cast<double>(trials);
    rep.rows.push_back({hs[k], f, std::sqrt(f * (1.0 - f) / static_cast<double>(trials))});
  }
  for (std::size_t k = 1; k < H; ++k) {
    const double slack = 3.0 * std::hypot(rep.rows[k].se, rep.rows[k - 1].se);
    if (rep.rows[k].frequency > rep.rows[k - 1].frequency + slack) rep.decreasing = false;
  }
  rep.below_threshold = rep.rows.back().frequency < 0.05;
  rep.ok = rep.decreasing && rep.below_threshold;
  return rep;
}

// ---------------------------------------------------------------- martingale

double translate_measure(const AffMap& g, double lo, double hi, const GridDensity& rho) {
  const double u = g.inverse_apply(lo), v = g.inverse_apply(hi);
  return std::max(0.0, rho.cdf(v) - rho.cdf(u));
}

double bernstein_bound(double variance, double delta) {
  const double L = std::log(2.0 / delta);
  return L / 3.0 + std::sqrt(L * L / 9.0 + 2.0 * variance * L);
}

MartingaleReport martingale_experiment(const CounterexampleParams& p, const GridDensity& rho, double a_lo,
                                       double a_hi, int horizon, std::size_t trials, std::uint64_t seed,
                                       std::vector<int> checkpoints, int workers) {
  if (!(a_lo < a_hi)) throw std::invalid_argument("A must be a nondegenerate interval");
  if (horizon < 0 || trials < 2) throw std::invalid_argument("martingale needs horizon >= 0 and >= 2 trials");
  MartingaleReport rep;
  rep.a_lo = a_lo;
  rep.a_hi = a_hi;
  rep.trials = trials;
  rep.mu_A = rho.cdf(a_hi) - rho.cdf(a_lo);
  if (!(rep.mu_A > 0.0)) throw std::invalid_argument("mu(A) must be positive");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::remove_if(checkpoints.begin(), checkpoints.end(), [&](int n) { return n < 0 || n > horizon; }),
                    checkpoints.end());
  rep.checkpoints = checkpoints;

  const std::size_t W = static_cast<std::size_t>(horizon) + 2;  // M_0 .. M_{horizon+1}
  std::vector<double> M(trials * W);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    double la = 0.0, b = 0.0;
    double* row = &M[i * W];
    row[0] = rep.mu_A;
    for (std::size_t n = 1; n < W; ++n) {
      const double A = sample_A(p, rng);
      const double B = sample_B(p, rng);
      b += std::exp(la) * B;
      la += std::log(A);
      row[n] = translate_measure(AffMap::from_log_scale(la, b), a_lo, a_hi, rho);
    }
  });

  auto column = [&](std::size_t n) {
    std::vector<double> c(trials);
    for (std::size_t i = 0; i < trials; ++i) c[i] = M[i * W + n];
    return c;
  };
  auto within = [](const MeanSe& s) { return std::abs(s.mean) <= 3.0 * s.se; };

  rep.unconditional_ok = true;
  rep.conditional_ok = true;
  rep.checkpoints_ok = true;
  for (int n = 0; n <= horizon; ++n) {
    const auto cn = column(static_cast<std::size_t>(n));
    const auto cn1 = column(static_cast<std::size_t>(n) + 1);
    std::vector<double> d(trials);
    for (std::size_t i = 0; i < trials; ++i) d[i] = cn1[i] - cn[i];
    MartingaleRow row;
    row.n = n;
    row.M = mean_se(cn);
    row.increment = mean_se(d);
    row.ok = within(row.increment);
    if (!row.ok) {
      rep.unconditional_ok = false;
      rep.failures.push_back("drift at n=" + std::to_string(n));
    }
    if (std::binary_search(checkpoints.begin(), checkpoints.end(), n)) {
      if (!row.ok) rep.checkpoints_ok = false;
      // Deciles of M_n by rank (ties broken by trial index).
      std::vector<std::size_t> order(trials);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cn[a] < cn[b]; });
      for (int q = 0; q < 10; ++q) {
        const std::size_t lo = trials * static_cast<std::size_t>(q) / 10;
        const std::size_t hi = trials * static_cast<std::size_t>(q + 1) / 10;
        if (hi - lo < 2) continue;
        std::vector<double> dq;
        double var = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
          const double m = cn[order[k]];
          dq.push_back(d[order[k]]);
          var += m * (1.0 - m);
        }
        BucketCheck bc;
        bc.m_lo = cn[order[lo]];
        bc.m_hi = cn[order[hi - 1]];
        bc.increment = mean_se(dq);
        bc.sum = bc.increment.mean * static_cast<double>(dq.size());
        bc.bound = bernstein_bound(var, 1e-3);
        bc.ok = std::abs(bc.sum) <= bc.bound;
        if (!bc.ok) {
          rep.conditional_ok = false;
          rep.failures.push_back("conditional drift at n=" + std::to_string(n) + " decile " + std::to_string(q));
        }
        row.buckets.push_back(bc);
      }
    }
    rep.rows.push_back(std::move(row));
  }
  if (horizon >= 1) {
    const MeanSe& m1 = rep.rows[1].M;
    rep.first_moment_ok = std::abs(m1.mean - rep.mu_A) <= 3.0 * m1.se;
  } else {
    const MeanSe m1 = mean_se(column(1));
    rep.first_moment_ok = std::abs(m1.mean - rep.mu_A) <= 3.0 * m1.se;
  }
  if (!rep.first_moment_ok) rep.failures.push_back("E[M_1] differs from mu(A)");
  return rep;
}

// ---------------------------------------------------------------- recurrence

double overlap_measure(const AffMap& g, double a_lo, double a_hi, const GridDensity& rho) {
  const double lo = std::max(a_lo, g.apply(a_lo));
  const double hi = std::min(a_hi, g.apply(a_hi));
  if (!(hi > lo)) return 0.0;
  return rho.cdf(hi) - rho.cdf(lo);
}

double overlap_quadrature(const AffMap& g, double a_lo, double a_hi, const GridDensity& rho) {
  // Breakpoints: grid nodes inside A and the images g.a_lo, g.a_hi, so that
  // the indicator 1_A(g^{-1} x) is constant on every piece.
  std::vector<double> br{a_lo, a_hi};
  for (double x : rho.nodes()) {
    if (x > a_lo && x < a_hi) br.push_back(x);
  }
  for (double e : {g.apply(a_lo), g.apply(a_hi)}) {
    if (e > a_lo && e < a_hi) br.push_back(e);
  }
  const double s = rho.spec().singular_point;
  if (rho.spec().refine && s > a_lo && s < a_hi) br.push_back(s);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < br.size(); ++k) {
    const double lo = br[k], hi = br[k + 1];
    const double y = g.inverse_apply(0.5 * (lo + hi));
    if (!(y >= a_lo && y <= a_hi)) continue;
    total += GK::integrate([&](double x) { return rho(x); }, lo, hi, 8, 1e-12);
  }
  return total / rho.interpolant_mass();
}

RecurrenceReport recurrence_witnesses(const CounterexampleParams& p, const GridDensity& rho, double a_lo, double a_hi,
                                      std::size_t trials, double K_radius, std::uint64_t seed, int path_length,
                                      std::size_t max_pairs, std::size_t max_witnesses) {
  if (!(a_lo < a_hi)) throw std::invalid_argument("A must be a nondegenerate interval");
  path_length = std::clamp(path_length, 1, 10000);
  RecurrenceReport rep;
  rep.mu_A = rho.cdf(a_hi) - rho.cdf(a_lo);
  if (!(rep.mu_A > 0.0)) throw std::invalid_argument("mu(A) must be positive");
  for (std::size_t i = 0; i < trials && rep.pairs_examined < max_pairs && rep.witnesses.size() < max_witnesses; ++i) {
    Rng rng(derive_seed(seed, i));
    double la = 0.0, b = 0.0;
    std::vector<std::pair<int, AffMap>> good;  // times with M_n >= mu(A)/2
    for (int n = 1; n <= path_length; ++n) {
      const double A = sample_A(p, rng);
      const double B = sample_B(p, rng);
      b += std::exp(la) * B;
      la += std::log(A);
      const AffMap z = AffMap::from_log_scale(la, b);
      if (translate_measure(z, a_lo, a_hi, rho) >= 0.5 * rep.mu_A) good.emplace_back(n, z);
    }
    rep.good_times += good.size();
    for (std::size_t m = 1; m < good.size() && rep.pairs_examined < max_pairs; ++m) {
      for (std::size_t l = 0; l < m && rep.pairs_examined < max_pairs; ++l) {
        const AffMap& zm = good[m].second;
        const AffMap& zl = good[l].second;
        // z_m z_l^{-1} = (a_m / a_l, b_m - (a_m / a_l) b_l), formed in log space.
        const double lg = zm.log_a() - zl.log_a();
        const AffMap g = AffMap::from_log_scale(lg, zm.b() - std::exp(lg) * zl.b());
        if (!std::isfinite(g.b())) continue;
        ++rep.pairs_examined;
        const double len = word_length(g);
        if (!(len > K_radius)) continue;
        const double ov = overlap_measure(g, a_lo, a_hi, rho);
        if (!(ov > 0.0)) continue;
        if (rep.witnesses.size() < max_witnesses) {
          rep.witnesses.push_back({g, good[m].first, good[l].first, len, ov, overlap_quadrature(g, a_lo, a_hi, rho)});
        }
      }
    }
  }
  if (rep.witnesses.empty()) {
    rep.diagnostic = "no witness within " + std::to_string(trials) + " paths of length " + std::to_string(path_length) +
                     " and " + std::to_string(rep.pairs_examined) + " pairs (inconclusive)";
  }
  return rep;
}

// ---------------------------------------------------------------- forward map

ForwardPoint forward_map(ForwardPoint p, const StepLaw& law, Rng& rng) {
  if (p.omega.empty()) p.omega.push_back(law.draw_affine(rng));
  const AffMap w = p.omega.front();
  p.omega.pop_front();
  p.x = w.apply(p.x);
  return p;
}

InvarianceReport forward_invariance_probe(const CounterexampleParams& p, const GridDensity& rho,
                                          const std::vector<int>& ks, std::size_t trials, std::uint64_t seed,
                                          const std::function<double(Rng&)>& initial, int workers) {
  const StepLaw law = StepLaw::counterexample(p);
  std::vector<int> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  const int kmax = sorted.empty() ? 0 : std::max(0, sorted.back());
  std::vector<std::vector<double>> marg(sorted.size(), std::vector<double>(trials));
  std::vector<double> ref(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, 2 * i));
    ForwardPoint pt;
    pt.x = initial ? initial(rng) : sample_grid(rho, rng);
    std::size_t next = 0;
    for (int k = 0; k <= kmax; ++k) {
      while (next < sorted.size() && sorted[next] == k) marg[next++][i] = pt.x;
      if (k < kmax) pt = forward_map(std::move(pt), law, rng);
    }
    Rng ref_rng(derive_seed(seed, 2 * i + 1));
    ref[i] = sample_grid(rho, ref_rng);
  });
  InvarianceReport rep;
  rep.ok = true;
  const auto cdf = [&](double y) { return rho.cdf(y); };
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    const double ks = ks_one_sample(marg[j], cdf);
    rep.rows.push_back({sorted[j], ks});
    if (sorted[j] > 0 && !(ks < 0.02)) rep.ok = false;
  }
  if (!marg.empty()) rep.two_sample_floor = ks_two_sample(ref, marg.front());
  return rep;
}

// ---------------------------------------------------------------- Maharam

double maharam_alpha(const AffMap& g, double x, const GridDensity& rho) {
  const double r = rn_strict(g, x, rho);
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("density vanishes; alpha is undefined at x");
  return std::log(r);
}

MaharamPoint maharam_step(const AffMap& g, const MaharamPoint& p, const GridDensity& rho) {
  MaharamPoint q = p;
  q.cocycle = p.cocycle + maharam_alpha(g, p.x, rho);
  q.x = g.apply(p.x);
  return q;
}

MaharamPoint fiber_translate(double s, const MaharamPoint& p) {
  MaharamPoint q = p;
  q.shift = p.shift + s;
  return q;
}

RectangleProbe maharam_rectangle_probe(const AffMap& g, double x1, double x2, double t1, double t2,
                                       const GridDensity& rho, double window, double tol) {
  if (!(x1 < x2 && t1 < t2)) throw std::invalid_argument("rectangle needs x1 < x2 and t1 < t2");
  RectangleProbe r{x1, x2, t1, t2};
  auto eta = [&](double lo, double hi) {
    lo = std::max(lo, -window);
    hi = std::min(hi, window);
    return hi > lo ? std::exp(-lo) - std::exp(-hi) : 0.0;
  };
  const double Z = rho.interpolant_mass();
  r.measure = (rho.cdf(x2) - rho.cdf(x1)) * eta(t1, t2);

  // g^{-1}E = {(x, t): g.x in [x1, x2], t + alpha_g(x) in [t1, t2]}.
  const double u1 = g.inverse_apply(x1), u2 = g.inverse_apply(x2);
  std::vector<double> br{u1, u2};
  for (double y : rho.nodes()) {
    if (y > x1 && y < x2) br.push_back(g.inverse_apply(y));
    if (y > u1 && y < u2) br.push_back(y);
  }
  if (rho.spec().refine) {
    const double s = rho.spec().singular_point;
    for (double y : {s, g.inverse_apply(s)}) {
      if (y > u1 && y < u2) br.push_back(y);
    }
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < br.size(); ++k) {
    if (!(br[k + 1] > br[k])) continue;
    total += GK::integrate(
        [&](double x) {
          const double rx = rho(x);
          if (!(rx > 0.0)) return 0.0;
          const double a = maharam_alpha(g, x, rho);
          return rx * eta(t1 - a, t2 - a);
        },
        br[k], br[k + 1], 4, 1e-10);
  }
  r.measure_preimage = total / Z;
  r.error = std::abs(r.measure_preimage - r.measure);
  r.ok = r.error <= tol;
  return r;
}

// ---------------------------------------------------------------- skew product

double skew_period(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in (0, 1]");
  return lambda == 1.0 ? 0.0 : -std::log(lambda);
}

namespace {

double reduce(double y, double period) {
  if (period == 0.0) return 0.0;
  double r = std::fmod(y, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace

SkewPoint skew_step(const AffMap& g, const SkewPoint& p, double lambda, const GridDensity& rho) {
  const double P = skew_period(lambda);
  SkewPoint q;
  q.y = P == 0.0 ? 0.0 : reduce(p.y + maharam_alpha(g, p.x, rho), P);
  q.x = g.apply(p.x);
  return q;
}

double circle_distance(double a, double b, double period) {
  if (period == 0.0) return std::abs(a - b);
  const double d = reduce(a - b, period);
  return std::min(d, period - d);
}

AffMap random_affine(Rng& rng, double s) { return AffMap::from_log_scale(rng.uniform(-s, s), rng.uniform(-s, s)); }

namespace {

// g, h, x with x, h.x, g.h.x all inside [-box, box].
bool draw_triple(Rng& rng, double box, AffMap& g, AffMap& h, double& x) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    g = random_affine(rng);
    h = random_affine(rng);
    x = rng.uniform(-box, box);
    const double hx = h.apply(x), ghx = g.apply(hx);
    if (std::abs(hx) <= box && std::abs(ghx) <= box) return true;
  }
  return false;
}

}  // namespace

ActionCheck skew_action_check(double lambda, const GridDensity& rho, std::size_t n, std::uint64_t seed, double tol,
                              double box) {
  const double P = skew_period(lambda);
  ActionCheck c;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    AffMap g, h;
    double x;
    if (!draw_triple(rng, box, g, h, x)) throw std::runtime_error("could not draw an in-range triple");
    const SkewPoint p{x, P == 0.0 ? 0.0 : rng.uniform(0.0, P)};
    const SkewPoint lhs = skew_step(compose(g, h), p, lambda, rho);
    const SkewPoint rhs = skew_step(g, skew_step(h, p, lambda, rho), lambda, rho);
    c.worst_x = std::max(c.worst_x, std::abs(lhs.x - rhs.x) / std::max(1.0, std::abs(rhs.x)));
    c.worst_fiber = std::max(c.worst_fiber, circle_distance(lhs.y, rhs.y, P));
    ++c.checks;
  }
  c.ok = c.worst_x <= tol && c.worst_fiber <= tol;
  return c;
}

ActionCheck maharam_cocycle_check(const GridDensity& rho, std::size_t n, std::uint64_t seed, double tol, double box) {
  ActionCheck c;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    AffMap g, h;
    double x;
    if (!draw_triple(rng, box, g, h, x)) throw std::runtime_error("could not draw an in-range triple");
    const double lhs = maharam_alpha(compose(g, h), x, rho);
    const double rhs = maharam_alpha(g, h.apply(x), rho) + maharam_alpha(h, x, rho);
    c.worst_fiber = std::max(c.worst_fiber, std::abs(lhs - rhs));
    c.worst_x = std::max(c.worst_x, std::abs(compose(g, h).apply(x) - g.apply(h.apply(x))));
    ++c.checks;
  }
  c.ok = c.worst_fiber <= tol && c.worst_x <= tol;
  return c;
}

Histogram alpha_histogram(const AffMap& g, const GridDensity& rho, std::size_t samples, std::uint64_t seed, int bins) {
  if (bins < 1) throw std::invalid_argument("need at least one bin");
  Rng rng(seed);
  std::vector<double> vals;
  Histogram hist;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = sample_grid(rho, rng);
    try {
      vals.push_back(maharam_alpha(g, x, rho));
    } catch (const DomainError&) {
      ++hist.dropped;
    }
  }
  if (vals.empty()) return hist;
  const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  const double lo = *mn, hi = *mx > *mn ? *mx : *mn + 1.0;
  hist.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int k = 0; k <= bins; ++k) hist.edges.push_back(lo + (hi - lo) * k / bins);
  for (double v : vals) {
    const auto k = std::min<std::size_t>(static_cast<std::size_t>((v - lo) / (hi - lo) * bins), bins - 1);
    ++hist.counts[k];
  }
  return hist;
}

}  // namespace rwlab
