#pragma once

// Exact group arithmetic for the three concrete families used throughout:
// integer lattices Z^d, free groups on k letters, and the affine group of
// the real line.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rwlab {

class FamilyMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point of the lattice Z^d under addition.
class LatticePoint {
 public:
  LatticePoint() = default;
  explicit LatticePoint(std::vector<std::int64_t> coords) : coords_(std::move(coords)) {}

  static LatticePoint zero(std::size_t dim) { return LatticePoint(std::vector<std::int64_t>(dim, 0)); }

  const std::vector<std::int64_t>& coords() const { return coords_; }
  std::size_t dim() const { return coords_.size(); }
  std::int64_t operator[](std::size_t i) const { return coords_[i]; }

  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;

 private:
  std::vector<std::int64_t> coords_;
};

/// Reduced word in a free group. Letter +i is the generator g_i, -i its
/// inverse (i >= 1). Words are reduced on construction.
class FreeWord {
 public:
  FreeWord() = default;
  explicit FreeWord(std::vector<int> letters);

  const std::vector<int>& letters() const { return letters_; }
  std::size_t length() const { return letters_.size(); }
  bool is_identity() const { return letters_.empty(); }

  friend auto operator<=>(const FreeWord&, const FreeWord&) = default;

 private:
  std::vector<int> letters_;
};

/// The affine map x -> a x + b with a > 0. The scale is held as log(a) so
/// that long products of contractions do not underflow to a = 0.
class AffMap {
 public:
  AffMap() = default;
  AffMap(double a, double b);

  static AffMap from_log_scale(double log_a, double b);
  static AffMap translation(double t) { return from_log_scale(0.0, t); }

  double a() const;
  double b() const { return b_; }
  double log_a() const { return log_a_; }

  double apply(double x) const;
  /// g^{-1}.x = (x - b) / a, saturating to +-inf when 1/a overflows.
  double inverse_apply(double x) const;

  friend auto operator<=>(const AffMap&, const AffMap&) = default;

 private:
  double log_a_ = 0.0;
  double b_ = 0.0;
};

enum class Family { kLattice, kFree, kAffine };

using GroupElement = std::variant<LatticePoint, FreeWord, AffMap>;

Family family_of(const GroupElement& g);
std::string family_name(Family f);

GroupElement compose(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

LatticePoint compose(const LatticePoint& g, const LatticePoint& h);
FreeWord compose(const FreeWord& g, const FreeWord& h);
AffMap compose(const AffMap& g, const AffMap& h);
LatticePoint inverse(const LatticePoint& g);
FreeWord inverse(const FreeWord& g);
AffMap inverse(const AffMap& g);
/// g^{-1} h, formed as ((h.b - g.b) / g.a) so it stays finite when g.b / g.a overflows.
AffMap between(const AffMap& g, const AffMap& h);
/// x * exp(log_s) without overflowing the intermediate exp.
double scale_by_log(double x, double log_s);

/// Identity of the same family (and lattice dimension) as `like`.
GroupElement identity_like(const GroupElement& like);
bool is_identity(const GroupElement& g);

/// Exact equality for discrete families; relative tolerance for AffMap.
bool approx_equal(const AffMap& g, const AffMap& h, double rel_tol = 1e-12);
bool approx_equal(const GroupElement& g, const GroupElement& h, double rel_tol = 1e-12);

/// Word length for the standard symmetric generating sets: l1 norm on Z^d,
/// reduced length on free groups. For AffMap there is no canonical finite
/// generating set; we use the hyperbolic displacement d(i, g.i) of the
/// action on the upper half plane, which is subadditive and
/// quasi-isometric to any word metric.
double word_length(const GroupElement& g);
std::int64_t word_length(const LatticePoint& g);
std::int64_t word_length(const FreeWord& g);
double word_length(const AffMap& g);

/// Textual syntax: `z:3,-1`, `fw:g1,G2,g1` (capital = inverse, `fw:e` is
/// the identity), `aff:2.0,1.0`.
GroupElement parse_element(std::string_view text);
std::string format_element(const GroupElement& g);

/// Family-specific bare forms used inside measure JSON ("3,-1", "g1,G2").
LatticePoint parse_lattice_bare(std::string_view text);
FreeWord parse_free_bare(std::string_view text);
std::string format_bare(const GroupElement& g);

/// Standard symmetric generators: +-e_i for Z^d, g_i^{+-1} for a free group.
std::vector<LatticePoint> lattice_generators(std::size_t dim);
std::vector<FreeWord> free_generators(int rank);

}  // namespace rwlab
