#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rwlab/groups.hpp"

namespace rwlab {

/// Parses "1/2", "3", "0.25" or "-1.5e-3" into an exact rational.
mpq_class parse_rational(const std::string& text);
std::string format_rational(const mpq_class& q);

/// Finitely supported probability measure on a discrete family (Z^d or a
/// free group) with exact rational weights summing to one.
class DiscreteMeasure {
 public:
  using Atoms = std::map<GroupElement, mpq_class>;

  /// `family_tag` is "z<d>" or "f<k>". Throws if weights are not positive or
  /// do not sum to exactly one, or if an atom is of the wrong family.
  DiscreteMeasure(std::string family_tag, Atoms atoms);

  static DiscreteMeasure dirac(const std::string& family_tag);

  const std::string& family_tag() const { return tag_; }
  const Atoms& atoms() const { return atoms_; }
  std::size_t support_size() const { return atoms_.size(); }
  Family family() const;
  /// Lattice dimension or free rank.
  int rank() const;

  mpq_class weight(const GroupElement& g) const;
  mpq_class total_mass() const;
  GroupElement identity() const;

  bool operator==(const DiscreteMeasure& other) const = default;

 private:
  std::string tag_;
  Atoms atoms_;
};

/// Sum of measures with arbitrary nonnegative coefficients; used for the
/// right-hand side of suitability inequalities (not a probability measure).
using FiniteMeasure = std::map<GroupElement, mpq_class>;

DiscreteMeasure convolve_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q);

struct PowerLimits {
  int free_group_max_n = 20;
  bool allow_large = false;
};

/// p^{*0} is the Dirac mass at the identity.
DiscreteMeasure convolution_power(const DiscreteMeasure& p, int n, PowerLimits limits = {});

/// All powers p^{*0}, ..., p^{*n_max}.
std::vector<DiscreteMeasure> convolution_powers(const DiscreteMeasure& p, int n_max, PowerLimits limits = {});

/// Left translate g.p : A -> p(g^{-1} A).
FiniteMeasure translate(const GroupElement& g, const DiscreteMeasure& p);

struct AdmissibilityReport {
  bool degenerate = false;
  int depth = 0;
  std::size_t reached = 0;
  /// Largest r with the whole word-metric ball B_r inside the reached set.
  int ball_radius = -1;
  bool inconclusive = true;
  /// e.g. "2Z" or "N (nonnegative half-line)" when a proper closed
  /// subsemigroup containing the support is detected.
  std::optional<std::string> proper_subsemigroup;
  std::string summary;
};

/// One-sided probe: enumerates products of at most `depth` support elements.
AdmissibilityReport admissibility_probe(const DiscreteMeasure& p, int depth);

/// JSON format: {"family":"z1","atoms":[["1","1/2"],["-1","1/2"]]}
DiscreteMeasure measure_from_json(const std::string& json_text);
std::string measure_to_json(const DiscreteMeasure& p);

/// Named measures used by the CLI: srw-z, lazy-z, drift-z, srw-f2, srw-z2.
DiscreteMeasure named_measure(const std::string& name);

}  // namespace rwlab
