#pragma once

// Random-walk experiments on the counterexample and on discrete groups:
// escape from compact sets, the martingale z_n mu(A), recurrence witnesses,
// the forward map, and the Maharam and skew-product extensions.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rwlab/boundary.hpp"
#include "rwlab/discrete_measure.hpp"
#include "rwlab/grid_density.hpp"
#include "rwlab/groups.hpp"
#include "rwlab/random.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

/// Law of one increment: a finitely supported measure on Z^d or a free
/// group, or the affine counterexample law (A, B).
class StepLaw {
 public:
  static StepLaw discrete(DiscreteMeasure theta);
  static StepLaw counterexample(const CounterexampleParams& p);

  Family family() const { return family_; }
  GroupElement identity() const;
  GroupElement draw(Rng& rng) const;
  /// Affine draw; throws for discrete laws.
  AffMap draw_affine(Rng& rng) const;
  /// Index into atoms() of a discrete draw.
  std::size_t draw_index(Rng& rng) const;

  const std::vector<GroupElement>& atoms() const { return atoms_; }
  const std::optional<DiscreteMeasure>& measure() const { return measure_; }
  const std::optional<CounterexampleParams>& params() const { return params_; }

 private:
  Family family_ = Family::kLattice;
  std::optional<DiscreteMeasure> measure_;
  std::optional<CounterexampleParams> params_;
  std::vector<GroupElement> atoms_;
  std::vector<double> cum_;  // cumulative weights, last entry 1
};

/// z_0 = e, z_n = z_{n-1} omega_{n-1}.
struct WalkPath {
  std::vector<GroupElement> steps;
  std::vector<GroupElement> increments;
  std::uint64_t seed = 0;

  /// z_{n-1}^{-1} z_n recomputed from the states.
  GroupElement recovered_increment(std::size_t n) const;
};

WalkPath simulate_walk(const StepLaw& law, int n, std::uint64_t seed);

/// Compact subsets of the supported groups.
class CompactSet {
 public:
  /// Every coordinate in [lo, hi].
  static CompactSet lattice_box(std::int64_t lo, std::int64_t hi);
  /// a in [a_lo, a_hi], |b| <= b_max.
  static CompactSet affine_box(double a_lo, double a_hi, double b_max);
  /// Word length (hyperbolic proxy on the affine group) at most r.
  static CompactSet word_ball(double r);

  bool contains(const GroupElement& g) const;
  bool contains_lattice(const std::vector<std::int64_t>& z) const;
  bool contains_affine(double log_a, double b) const;
  bool contains_word_length(double len) const { return len <= r_; }
  std::string describe() const;

  enum class Kind { kLatticeBox, kAffineBox, kWordBall };
  Kind kind() const { return kind_; }

 private:
  Kind kind_ = Kind::kWordBall;
  std::int64_t lo_ = 0, hi_ = 0;
  double a_lo_ = 0.0, a_hi_ = 0.0, b_max_ = 0.0, r_ = 0.0;
};

struct EscapeRow {
  int horizon = 0;
  double frequency = 0.0;  // fraction of paths with z_m in C for all m in [n/2, n]
  double se = 0.0;
};

struct EscapeReport {
  std::string set;
  std::size_t trials = 0;
  std::vector<EscapeRow> rows;
  /// Non-increasing across horizons up to 3 combined standard errors.
  bool decreasing = true;
  bool below_threshold = false;  // last frequency < 0.05
  bool ok = false;
};

EscapeReport escape_experiment(const StepLaw& law, const CompactSet& C, const std::vector<int>& horizons,
                               std::size_t trials, std::uint64_t seed, int workers = 1);

/// mu(g^{-1} [lo, hi]) under the normalized interpolant of rho.
double translate_measure(const AffMap& g, double lo, double hi, const GridDensity& rho);

/// Conditional drift in one decile of M_n. Given M_n the next values are
/// independent, lie in [0,1] and have variance at most M_n(1 - M_n), so
/// Bernstein's inequality bounds |sum of increments| by `bound` with
/// two-sided false-alarm probability 1e-3. A sample-SE rule is not usable
/// here: tail deciles have rare large upward jumps.
struct BucketCheck {
  double m_lo = 0.0, m_hi = 0.0;
  MeanSe increment;
  double sum = 0.0;
  double bound = 0.0;
  bool ok = true;  // |sum| <= bound
};

/// Two-sided Bernstein deviation for a sum of independent [0,1] variables
/// with total variance at most `variance`, at false-alarm probability `delta`.
double bernstein_bound(double variance, double delta);

struct MartingaleRow {
  int n = 0;
  MeanSe M;
  MeanSe increment;  // M_{n+1} - M_n
  bool ok = true;    // |mean| <= 3 SE
  std::vector<BucketCheck> buckets;  // filled at checkpoints only
};

struct MartingaleReport {
  double a_lo = 0.0, a_hi = 0.0;
  double mu_A = 0.0;
  std::size_t trials = 0;
  std::vector<MartingaleRow> rows;  // n = 0..horizon
  std::vector<int> checkpoints;
  bool first_moment_ok = false;  // |E M_1 - mu(A)| <= 3 SE
  bool unconditional_ok = false;
  bool checkpoints_ok = false;
  bool conditional_ok = false;
  std::vector<std::string> failures;
  bool ok() const { return first_moment_ok && unconditional_ok && conditional_ok; }
};

/// M_n = z_n mu(A) = mu(z_n^{-1} A) along counterexample paths. The
/// unconditional drift test runs at every n <= horizon; the decile-bucketed
/// conditional test runs at the checkpoints.
MartingaleReport martingale_experiment(const CounterexampleParams& p, const GridDensity& rho, double a_lo,
                                       double a_hi, int horizon, std::size_t trials, std::uint64_t seed,
                                       std::vector<int> checkpoints = {1, 10, 50}, int workers = 1);

struct RecurrenceWitness {
  AffMap g;
  int m = 0, l = 0;  // g = z_m z_l^{-1}
  double word_length = 0.0;
  double overlap = 0.0;             // mu(gA cap A) from interval arithmetic
  double overlap_quadrature = 0.0;  // adaptive quadrature of 1_A(x) 1_A(g^{-1}x) rho(x)
};

struct RecurrenceReport {
  double mu_A = 0.0;
  std::size_t good_times = 0;
  std::size_t pairs_examined = 0;
  std::vector<RecurrenceWitness> witnesses;
  /// Empty unless nothing was found; absence is inconclusive.
  std::string diagnostic;
};

/// mu(gA cap A) computed two ways.
double overlap_measure(const AffMap& g, double a_lo, double a_hi, const GridDensity& rho);
double overlap_quadrature(const AffMap& g, double a_lo, double a_hi, const GridDensity& rho);

RecurrenceReport recurrence_witnesses(const CounterexampleParams& p, const GridDensity& rho, double a_lo, double a_hi,
                                      std::size_t trials, double K_radius, std::uint64_t seed,
                                      int path_length = 1000, std::size_t max_pairs = 1000,
                                      std::size_t max_witnesses = 50);

/// Point (omega, x) of the forward system; omega holds the upcoming
/// increments omega_0, omega_1, ...
struct ForwardPoint {
  std::deque<AffMap> omega;
  double x = 0.0;
};

/// tau(omega, x) = (shift omega, omega_0 . x). An empty window is refilled
/// from `law` before the step.
ForwardPoint forward_map(ForwardPoint p, const StepLaw& law, Rng& rng);

struct InvarianceRow {
  int k = 0;
  double ks = 0.0;  // x-marginal after k steps against rho
};

struct InvarianceReport {
  std::vector<InvarianceRow> rows;
  double two_sample_floor = 0.0;  // two independent rho samples
  bool ok = false;                // every k > 0 below 0.02
};

/// KS of the x-marginal after k forward steps. `initial` draws x_0 (rho by
/// default).
InvarianceReport forward_invariance_probe(const CounterexampleParams& p, const GridDensity& rho,
                                          const std::vector<int>& ks, std::size_t trials, std::uint64_t seed,
                                          const std::function<double(Rng&)>& initial = nullptr, int workers = 1);

/// Point of the Maharam extension. The fiber coordinate t = shift + cocycle
/// is kept in two parts so that fiber translations (which touch `shift`)
/// and group moves (which touch `cocycle`) commute bit for bit.
struct MaharamPoint {
  double x = 0.0;
  double shift = 0.0;
  double cocycle = 0.0;
  double t() const { return shift + cocycle; }
};

/// alpha_g(x) = log(a rho(g.x) / rho(x)); the action
/// g.(x, t) = (g.x, t + alpha_g(x)) preserves mu x e^{-t} dt.
double maharam_alpha(const AffMap& g, double x, const GridDensity& rho);
MaharamPoint maharam_step(const AffMap& g, const MaharamPoint& p, const GridDensity& rho);
MaharamPoint fiber_translate(double s, const MaharamPoint& p);

struct RectangleProbe {
  double x1 = 0.0, x2 = 0.0, t1 = 0.0, t2 = 0.0;
  double measure = 0.0;           // (mu x eta)(E)
  double measure_preimage = 0.0;  // (mu x eta)(g^{-1} E)
  double error = 0.0;
  bool ok = false;
};

/// Change-of-variables quadrature with eta = e^{-t} dt truncated to
/// [-window, window].
RectangleProbe maharam_rectangle_probe(const AffMap& g, double x1, double x2, double t1, double t2,
                                       const GridDensity& rho, double window = 20.0, double tol = 1e-4);

/// Fiber Y = R / (-log lambda) Z, or a single point when lambda = 1.
struct SkewPoint {
  double x = 0.0;
  double y = 0.0;
};

/// -log lambda (0 for the trivial fiber); DomainError outside (0, 1].
double skew_period(double lambda);
SkewPoint skew_step(const AffMap& g, const SkewPoint& p, double lambda, const GridDensity& rho);
/// Distance on the circle of circumference `period` (|a - b| when 0).
double circle_distance(double a, double b, double period);

struct ActionCheck {
  std::size_t checks = 0;
  double worst_x = 0.0;
  double worst_fiber = 0.0;
  bool ok = false;
};

/// Random g, h, x with every intermediate point inside [-box, box]:
/// (gh).p against g.(h.p).
ActionCheck skew_action_check(double lambda, const GridDensity& rho, std::size_t n, std::uint64_t seed,
                              double tol = 1e-9, double box = 3.0);

/// alpha_{gh}(x) against alpha_g(h.x) + alpha_h(x).
ActionCheck maharam_cocycle_check(const GridDensity& rho, std::size_t n, std::uint64_t seed, double tol = 1e-9,
                                  double box = 3.0);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t dropped = 0;  // draws whose g.x left the grid
};

/// Values of alpha_g(x) for x ~ rho (informational).
Histogram alpha_histogram(const AffMap& g, const GridDensity& rho, std::size_t samples, std::uint64_t seed,
                          int bins = 40);

/// Random affine map with log a uniform in [-s, s] and b uniform in [-s, s].
AffMap random_affine(Rng& rng, double s = 0.5);

}  // namespace rwlab
