#pragma once

// Harmonic majorant bounds: suitability certificates, exact exponential
// oracles on Z and R, the drifted Gaussian semigroup, the Harnack exponent
// and the delta(K) functional.

#include <gmpxx.h>

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rwlab/discrete_measure.hpp"
#include "rwlab/grid_density.hpp"
#include "rwlab/groups.hpp"

namespace rwlab {

struct CertificateTerm {
  int k_r = 0;
  mpq_class alpha;  // doubles convert exactly, so grid certificates fit too
};

/// Witness that g.theta^{*k} <= sum_r alpha_r theta^{*k_r}, giving
/// m_theta(g) <= sum_r alpha_r. Real shifts on the line are stored as
/// translations AffMap(1, t).
struct SuitabilityCertificate {
  GroupElement element;
  int k = 0;
  std::vector<CertificateTerm> terms;

  mpq_class bound() const;
  double bound_double() const { return bound().get_d(); }
  int max_power() const;
};

std::string certificate_to_json(const SuitabilityCertificate& c);
SuitabilityCertificate certificate_from_json(const std::string& json_text);

class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Verdict {
  bool ok = false;
  /// min over checked points of rhs - lhs (exact for discrete checks).
  double margin = 0.0;
  std::size_t points_checked = 0;
  std::string diagnostic;
};

Verdict verify_certificate(const DiscreteMeasure& theta, const SuitabilityCertificate& cert,
                           PowerLimits limits = {});

/// Lazily computed convolution powers of a density on a uniform grid.
class GridPowers {
 public:
  explicit GridPowers(GridDensity phi);
  /// phi^{*n} for n >= 1.
  const GridDensity& power(int n);
  const GridDensity& base() const { return powers_.front(); }

 private:
  std::deque<GridDensity> powers_;  // references stay valid as powers are appended
};

/// Pointwise check of g.phi^{*k} <= sum alpha_r phi^{*k_r} at every node of
/// either side inside the support of the left-hand side, with absolute
/// slack `slack`. A k = 0 left side is a Dirac mass and is dominated only by
/// Dirac terms, i.e. only when g is the identity and the k_r = 0 weights sum
/// to at least one.
Verdict verify_certificate(GridPowers& phi, const SuitabilityCertificate& cert, double slack = 1e-9);

/// (k = 0, [(n*, 1/theta^{*n*}(g))]) with n* <= max_n maximizing
/// theta^{*n}(g); ties go to the smallest n. Throws CertificateError if g
/// is not reached.
SuitabilityCertificate discrete_certificate(const DiscreteMeasure& theta, const GroupElement& g, int max_n,
                                            PowerLimits limits = {});

struct CoveringReport {
  SuitabilityCertificate certificate;
  Verdict verdict;
  double sup_phi_n = 0.0;        // sup of phi^{*N}
  std::size_t cells = 0;         // cells covering g + K
  std::map<int, double> c_of_n;  // smallest cell infimum per chosen power
};

/// Covering construction on the line: cells of g + supp(phi^{*N}) are
/// assigned the power n_x + N (n_x <= max_n) with the largest cell minimum
/// c_x, and each used power contributes alpha = sup(phi^{*N}) / min c_x.
/// Throws CertificateError listing uncovered cells.
CoveringReport covering_certificate(GridPowers& phi, double g, int N, int max_n = 8);

/// Exponential-oracle result for the harmonic majorant on Z or R.
struct OracleResult {
  /// Real roots c of M(c) = 1 (always contains 0).
  std::vector<double> roots;
  /// e^{c*} as an exact rational when the nonzero root snaps exactly.
  std::optional<mpq_class> exact_lambda;
  bool warning = false;
  std::string note;

  double value(double g) const;
  /// Exact value for integer g when available.
  std::optional<mpq_class> exact_value(std::int64_t g) const;
};

/// Roots of the moment generating function: bracket by a 0.5-step scan over
/// [-50, 50] on the side opposite the mean, then bisect to 1e-12.
OracleResult exp_oracle(const DiscreteMeasure& theta_on_z);
OracleResult exp_oracle(const GridDensity& theta_on_r);

struct MajorantEstimate {
  GroupElement element;
  double upper = 0.0;  // certificate bound (infinity when none)
  std::optional<double> oracle;
  std::optional<mpq_class> oracle_exact;
  std::string method;
};

struct PropertyReport {
  bool ok = true;
  std::size_t pairs_checked = 0;
  std::vector<std::string> failures;
};

/// Submultiplicativity and m >= 1 on oracle values (exact when available);
/// certificate bounds are only checked against the oracle.
PropertyReport majorant_properties_check(const std::vector<MajorantEstimate>& estimates, double tol = 1e-12);

/// alpha(g,s,t) = (t/s)^{d/2} exp(|g - (t-s) b|^2 / (4 (t-s))) for the heat
/// semigroup with drift b: gamma_t(v) = (4 pi t)^{-d/2} exp(-|v - t b|^2/(4t)).
double gaussian_alpha(const std::vector<double>& g, double s, double t, const std::vector<double>& b);
double gaussian_log_ratio(const std::vector<double>& v, const std::vector<double>& g, double s, double t,
                          const std::vector<double>& b);
/// Sup of gamma_s(v - g)/gamma_t(v) over successively refined grids of v.
double gaussian_ratio_grid_sup(const std::vector<double>& g, double s, double t, const std::vector<double>& b,
                               int points_per_axis = 21, int levels = 40);

struct HarnackExponentReport {
  std::vector<int> radii;
  std::vector<double> theta_of_r;
  std::vector<double> slope;
  double gamma_hat = 0.0;
  bool subadditive = true;
  /// True when some bound came from a certificate (upper estimate only).
  bool upper_estimate = false;
  std::vector<std::string> warnings;
};

/// Elements of the word-metric ball B_r (Z^d or free group).
std::vector<GroupElement> word_ball(const DiscreteMeasure& theta, int r);

HarnackExponentReport harnack_exponent(const DiscreteMeasure& theta, const std::vector<int>& radii, int max_n,
                                       PowerLimits limits = {});

/// delta(rho) = max over shifts k = j h, |k| <= rho, of
/// integral of m(x) |phi(x) - phi(x - k)| dx (trapezoid on the uniform grid).
std::vector<double> delta_K(const GridDensity& phi, const std::function<double(double)>& majorant,
                            const std::vector<double>& radii);

}  // namespace rwlab
