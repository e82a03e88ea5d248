#pragma once

// The affine random walk x -> A x + B with a heavy power-law part in A and a
// singular symmetric B. Its stationary density rho_inf blows up at 0 like a
// negative power, which makes the Radon-Nikodym derivative of the
// translation (1, t) unbounded near t.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwlab/grid_density.hpp"
#include "rwlab/groups.hpp"
#include "rwlab/random.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// f_A(a) = c_A (M a^{beta-1} 1_{(0,1/2)}(a) + 1_{(1-delta,1+delta)}(a)),
/// f_B(b) = c_B |b|^{-alpha} exp(-b^2).
struct CounterexampleParams {
  double alpha = 0.5;
  double beta = 0.25;
  double delta = 0.2;
  double M = 1.0;
  double c_A = 0.0;
  double c_B = 0.0;
  /// Probability of the power-law branch of A.
  double p_power = 0.0;
  double E_log_A = 0.0;             // closed form
  double E_log_A_quadrature = 0.0;  // independent quadrature
  double c_B_quadrature = 0.0;
  double E_log_plus_abs_B = 0.0;
};

/// Validates 0 < beta < alpha < 1, 0 < delta < 1/4, M > 0 and E[log A] < 0.
CounterexampleParams make_params(double alpha = 0.5, double beta = 0.25, double delta = 0.2, double M = 1.0);

double density_A(const CounterexampleParams& p, double a);
double cdf_A(const CounterexampleParams& p, double a);
double density_B(const CounterexampleParams& p, double b);
double cdf_B(const CounterexampleParams& p, double b);

double sample_A(const CounterexampleParams& p, Rng& rng);
/// Rejection sampler: proposal is an even mixture of (1-alpha) b^{-alpha} on
/// (0,1] and the half-normal density (2/sqrt(pi)) e^{-b^2}; random sign.
double sample_B(const CounterexampleParams& p, Rng& rng);

/// Density of U = A R where R has density rho, evaluated on rho's grid, and
/// the exact mass of U in every grid interval. The interval straddling the
/// singular point carries the masses of (x_-, 0) and (0, x_+) separately.
struct ScaleMixture {
  GridDensity density;
  std::vector<double> cell_mass;  // one entry per grid interval
  std::size_t central_cell = 0;   // index of the interval containing 0
  double central_pos = 0.0;
  double central_neg = 0.0;
  /// Mass of rho under the same power-law interpolant (the quantity that
  /// total_mass() conserves; it differs from the trapezoid mass near 0).
  double input_mass = 0.0;
  double total_mass() const;
  /// P(U > 0)
  double positive_mass() const;
};

ScaleMixture rho_U_of(const GridDensity& rho, const CounterexampleParams& p);

/// One application of T(rho) = f_B * rho_U(rho), normalized to unit mass.
GridDensity apply_T(const GridDensity& rho, const CounterexampleParams& p);

/// f_B sampled on a composite grid and normalized (the solver's start).
GridDensity initial_density(const CounterexampleParams& p, const GridSpec& spec);

struct StationaryDensity {
  GridDensity rho;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
  double seconds = 0.0;
};

/// L1 norm (trapezoid) of the difference of two densities on the same grid.
double l1_distance(const GridDensity& a, const GridDensity& b);

StationaryDensity fixed_point_solve(const CounterexampleParams& p, const GridSpec& spec = {}, double tol = 1e-6,
                                    int max_iter = 200);

struct RSamples {
  std::vector<double> values;
  double max_abs_Q = 0.0;  // max over samples of Q_N
  int steps = 0;
};

/// R_N = sum_{n<=N} Q_{n-1} B_n with independent streams per sample.
RSamples simulate_R_infty(const CounterexampleParams& p, int N, std::size_t n_samples, std::uint64_t seed,
                          int workers = 1);

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct RNEvaluation {
  AffMap g;
  double x = 0.0;
  double value = 0.0;
};

/// dg mu / dmu (x) = (1/a) rho(a^{-1}(x - b)) / rho(x).
RNEvaluation rn_derivative(const AffMap& g, double x, const GridDensity& rho);
/// Strict version dg^{-1}mu/dmu (x) = a rho(g.x) / rho(x); it satisfies
/// rn_strict(gh, x) = rn_strict(g, h.x) rn_strict(h, x) pointwise.
double rn_strict(const AffMap& g, double x, const GridDensity& rho);

struct BlowupReport {
  double c0 = 0.0;
  double C = 0.0;
  std::size_t nodes_checked = 0;
  std::size_t violations = 0;
  double worst_x = 0.0;
  double worst_ratio = 0.0;  // min rho(x) / (C x^{beta-alpha})
  double fitted_slope = 0.0;
  double ratio_1e4_1e2 = 0.0;  // rho(1e-4) / rho(1e-2)
  double ratio_threshold = 0.0;
  bool ok = false;
};

BlowupReport blowup_report(const GridDensity& rho, const CounterexampleParams& p);

struct AwayReport {
  double t = 0.0;
  double C_t = 0.0;
  std::optional<double> C_t_refined;
  std::optional<double> refinement_ratio;
  bool ok = true;
};

/// max of rho over (t, t + |t|/8); with a refined density also the stability
/// ratio (must stay below 2).
AwayReport away_from_zero_report(const GridDensity& rho, double t, const GridDensity* refined = nullptr);

struct SatStarReport {
  double t = 0.0;
  double sup = 0.0;
  double argmax = 0.0;
  std::optional<double> sup_deep;
  std::optional<double> growth;  // sup_deep / sup
  /// Thresholds crossed by the largest sup along the panel sequence
  /// (base panel, then the deep one when given).
  bool above_1e2 = false;
  bool above_1e3 = false;
  bool ok = false;
};

/// sup over nodes x in (0, |t|/8) of rn((1,t), t + x) = rho(x)/rho(t + x).
double rn_translation_sup(const GridDensity& rho, double t);
SatStarReport sat_star_failure(const GridDensity& rho, double t, const GridDensity* deep = nullptr);

/// Draw from a grid density by inverting its distribution function.
double sample_grid(const GridDensity& rho, Rng& rng);

/// P f(g) = E_mu f(g.x) by Monte Carlo.
MeanSe poisson_transform_mc(const std::function<double(double)>& f, const AffMap& g, const GridDensity& rho,
                            std::size_t n_samples, std::uint64_t seed, int workers = 1);

struct HarmonicityProbe {
  MeanSe pf_g;
  MeanSe pf_gh;  // over outer draws h ~ theta of inner means
  double residual = 0.0;
  double combined_se = 0.0;
  bool ok = false;
};

HarmonicityProbe harmonicity_probe(const std::function<double(double)>& f, const AffMap& g,
                                   const CounterexampleParams& p, const GridDensity& rho, std::size_t n_outer,
                                   std::size_t n_inner, std::uint64_t seed, int workers = 1);

struct StationarityKs {
  double ks_pushforward = 0.0;  // one-sample KS of {A x + B} against rho
  double ks_two_sample = 0.0;   // {x} against {A x + B}
};

StationarityKs stationarity_ks(const CounterexampleParams& p, const GridDensity& rho, std::size_t n_samples,
                               std::uint64_t seed, int workers = 1);

}  // namespace rwlab
