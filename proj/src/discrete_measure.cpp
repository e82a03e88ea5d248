#include "rwlab/discrete_measure.hpp"

#include <json.hpp>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rwlab {

namespace {

struct TagInfo {
  Family family;
  int rank;
};

TagInfo parse_tag(const std::string& tag) {
  if (tag.size() < 2 || (tag[0] != 'z' && tag[0] != 'f')) {
    throw ParseError("measure family must be z<d> or f<k>, got '" + tag + "'");
  }
  int rank = 0;
  try {
    rank = std::stoi(tag.substr(1));
  } catch (const std::exception&) {
    throw ParseError("bad family tag '" + tag + "'");
  }
  if (rank < 1) throw ParseError("family rank must be >= 1");
  return {tag[0] == 'z' ? Family::kLattice : Family::kFree, rank};
}

void check_atom_family(const TagInfo& info, const GroupElement& g) {
  if (family_of(g) != info.family) throw FamilyMismatch("atom family does not match measure family");
  if (info.family == Family::kLattice && static_cast<int>(std::get<LatticePoint>(g).dim()) != info.rank) {
    throw FamilyMismatch("atom dimension does not match measure family");
  }
  if (info.family == Family::kFree) {
    for (int l : std::get<FreeWord>(g).letters()) {
      if (std::abs(l) > info.rank) throw FamilyMismatch("letter outside free group rank");
    }
  }
}

GroupElement parse_atom(const TagInfo& info, const std::string& text) {
  if (text.find(':') != std::string::npos) return parse_element(text);
  if (info.family == Family::kLattice) return parse_lattice_bare(text);
  return parse_free_bare(text);
}

}  // namespace

mpq_class parse_rational(const std::string& raw) {
  std::string text;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) text += c;
  }
  if (text.empty()) throw ParseError("empty rational");
  if (text.find('/') != std::string::npos) {
    mpq_class q;
    if (q.set_str(text, 10) != 0) throw ParseError("invalid rational '" + raw + "'");
    if (q.get_den() == 0) throw ParseError("zero denominator in '" + raw + "'");
    q.canonicalize();
    return q;
  }
  // Decimal with optional exponent, converted exactly.
  std::string mant = text;
  long exp10 = 0;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mant = text.substr(0, e);
    try {
      exp10 = std::stol(text.substr(e + 1));
    } catch (const std::exception&) {
      throw ParseError("invalid exponent in '" + raw + "'");
    }
  }
  bool neg = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    neg = mant[0] == '-';
    mant.erase(0, 1);
  }
  std::string digits;
  long frac = 0;
  bool seen_dot = false;
  for (char c : mant) {
    if (c == '.') {
      if (seen_dot) throw ParseError("invalid decimal '" + raw + "'");
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
      if (seen_dot) ++frac;
    } else {
      throw ParseError("invalid number '" + raw + "'");
    }
  }
  if (digits.empty()) throw ParseError("invalid number '" + raw + "'");
  mpz_class num(digits, 10);
  mpz_class ten = 10;
  mpz_class scale;
  long shift = exp10 - frac;
  mpq_class q;
  if (shift >= 0) {
    mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(shift));
    q = mpq_class(num * scale);
  } else {
    mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(-shift));
    q = mpq_class(num, scale);
  }
  q.canonicalize();
  return neg ? mpq_class(-q) : q;
}

std::string format_rational(const mpq_class& q) { return q.get_str(10); }

DiscreteMeasure::DiscreteMeasure(std::string family_tag, Atoms atoms) : tag_(std::move(family_tag)), atoms_(std::move(atoms)) {
  const auto info = parse_tag(tag_);
  mpq_class total = 0;
  for (auto& [g, w] : atoms_) {
    check_atom_family(info, g);
    w.canonicalize();
    if (sgn(w) <= 0) throw std::invalid_argument("measure weights must be positive");
    total += w;
  }
  if (total != 1) throw std::invalid_argument("measure weights sum to " + total.get_str() + ", not 1");
}

DiscreteMeasure DiscreteMeasure::dirac(const std::string& family_tag) {
  const auto info = parse_tag(family_tag);
  GroupElement e = info.family == Family::kLattice ? GroupElement(LatticePoint::zero(info.rank)) : GroupElement(FreeWord{});
  return DiscreteMeasure(family_tag, Atoms{{e, mpq_class(1)}});
}

Family DiscreteMeasure::family() const { return parse_tag(tag_).family; }
int DiscreteMeasure::rank() const { return parse_tag(tag_).rank; }

mpq_class DiscreteMeasure::weight(const GroupElement& g) const {
  auto it = atoms_.find(g);
  return it == atoms_.end() ? mpq_class(0) : it->second;
}

mpq_class DiscreteMeasure::total_mass() const {
  mpq_class t = 0;
  for (const auto& [g, w] : atoms_) t += w;
  return t;
}

GroupElement DiscreteMeasure::identity() const {
  const auto info = parse_tag(tag_);
  if (info.family == Family::kLattice) return LatticePoint::zero(info.rank);
  return FreeWord{};
}

// (p*q)(z) = sum_{xy=z} p(x) q(y)
DiscreteMeasure convolve_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.family_tag() != q.family_tag()) {
    throw FamilyMismatch("cannot convolve " + p.family_tag() + " with " + q.family_tag());
  }
  DiscreteMeasure::Atoms out;
  for (const auto& [x, wx] : p.atoms()) {
    for (const auto& [y, wy] : q.atoms()) {
      out[compose(x, y)] += wx * wy;
    }
  }
  return DiscreteMeasure(p.family_tag(), std::move(out));
}

DiscreteMeasure convolution_power(const DiscreteMeasure& p, int n, PowerLimits limits) {
  if (n < 0) throw std::invalid_argument("convolution power must be nonnegative");
  if (p.family() == Family::kFree && n > limits.free_group_max_n && !limits.allow_large) {
    throw std::length_error("free-group convolution power " + std::to_string(n) + " exceeds the default limit of " +
                            std::to_string(limits.free_group_max_n) + "; pass allow_large to override");
  }
  DiscreteMeasure acc = DiscreteMeasure::dirac(p.family_tag());
  for (int i = 0; i < n; ++i) acc = convolve_discrete(acc, p);
  return acc;
}

std::vector<DiscreteMeasure> convolution_powers(const DiscreteMeasure& p, int n_max, PowerLimits limits) {
  if (n_max < 0) throw std::invalid_argument("convolution power must be nonnegative");
  if (p.family() == Family::kFree && n_max > limits.free_group_max_n && !limits.allow_large) {
    throw std::length_error("free-group convolution power exceeds the default limit");
  }
  std::vector<DiscreteMeasure> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  out.push_back(DiscreteMeasure::dirac(p.family_tag()));
  for (int i = 1; i <= n_max; ++i) out.push_back(convolve_discrete(out.back(), p));
  return out;
}

FiniteMeasure translate(const GroupElement& g, const DiscreteMeasure& p) {
  FiniteMeasure out;
  for (const auto& [x, w] : p.atoms()) out[compose(g, x)] += w;
  return out;
}

AdmissibilityReport admissibility_probe(const DiscreteMeasure& p, int depth) {
  if (depth < 1) throw std::invalid_argument("probe depth must be >= 1");
  AdmissibilityReport rep;
  rep.depth = depth;
  const GroupElement e = p.identity();
  if (p.support_size() == 1 && p.atoms().begin()->first == e) {
    rep.degenerate = true;
    rep.reached = 1;
    rep.ball_radius = 0;
    rep.summary = "degenerate: Dirac mass at the identity";
    return rep;
  }

  std::set<GroupElement> reached;
  std::set<GroupElement> frontier;
  for (const auto& [g, w] : p.atoms()) frontier.insert(g);
  reached = frontier;
  for (int d = 2; d <= depth; ++d) {
    std::set<GroupElement> next;
    for (const auto& x : frontier) {
      for (const auto& [s, w] : p.atoms()) {
        auto y = compose(x, s);
        if (!reached.contains(y)) next.insert(y);
      }
    }
    reached.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  rep.reached = reached.size();

  // Largest ball fully contained in the reached set.
  std::vector<GroupElement> gens;
  if (p.family() == Family::kLattice) {
    for (auto& g : lattice_generators(static_cast<std::size_t>(p.rank()))) gens.emplace_back(g);
  } else {
    for (auto& g : free_generators(p.rank())) gens.emplace_back(g);
  }
  if (reached.contains(e)) {
    rep.ball_radius = 0;
    std::set<GroupElement> sphere{e};
    std::set<GroupElement> ball{e};
    for (int r = 1; r <= depth; ++r) {
      std::set<GroupElement> next;
      for (const auto& x : sphere) {
        for (const auto& s : gens) {
          auto y = compose(x, s);
          if (!ball.contains(y)) next.insert(y);
        }
      }
      bool all = true;
      for (const auto& y : next) {
        if (!reached.contains(y)) {
          all = false;
          break;
        }
      }
      if (!all) break;
      rep.ball_radius = r;
      ball.insert(next.begin(), next.end());
      sphere = std::move(next);
    }
  }

  // Containment of the support in an obvious proper closed subsemigroup.
  if (p.family() == Family::kLattice) {
    const int dim = p.rank();
    for (int i = 0; i < dim && !rep.proper_subsemigroup; ++i) {
      std::int64_t g = 0;
      bool any_pos = false, any_neg = false;
      for (const auto& [x, w] : p.atoms()) {
        auto c = std::get<LatticePoint>(x)[static_cast<std::size_t>(i)];
        g = std::gcd(g, c);
        any_pos |= c > 0;
        any_neg |= c < 0;
      }
      const std::string coord = dim == 1 ? "" : " (coordinate " + std::to_string(i + 1) + ")";
      if (g == 0) {
        rep.proper_subsemigroup = "0" + coord;
      } else if (g > 1) {
        rep.proper_subsemigroup = std::to_string(g) + "Z" + coord;
      } else if (!any_neg) {
        rep.proper_subsemigroup = "N (nonnegative half-line)" + coord;
      } else if (!any_pos) {
        rep.proper_subsemigroup = "-N (nonpositive half-line)" + coord;
      }
    }
  } else {
    std::set<int> used;
    for (const auto& [x, w] : p.atoms()) {
      for (int l : std::get<FreeWord>(x).letters()) used.insert(std::abs(l));
    }
    for (int i = 1; i <= p.rank(); ++i) {
      if (!used.contains(i)) {
        rep.proper_subsemigroup = "subgroup avoiding g" + std::to_string(i);
        break;
      }
    }
  }

  if (rep.ball_radius >= 1) {
    rep.inconclusive = false;
    rep.summary = "generates ball of radius " + std::to_string(rep.ball_radius) +
                  "; contains all generators and inverses, so the semigroup is the whole group";
  } else if (rep.proper_subsemigroup) {
    rep.inconclusive = false;
    rep.summary = "support lies in proper subsemigroup candidate " + *rep.proper_subsemigroup;
  } else {
    rep.summary = "inconclusive at depth " + std::to_string(depth);
  }
  return rep;
}

DiscreteMeasure measure_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("measure JSON: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("family") || !j.contains("atoms")) {
    throw ParseError("measure JSON needs 'family' and 'atoms'");
  }
  const auto tag = j.at("family").get<std::string>();
  const auto info = parse_tag(tag);
  DiscreteMeasure::Atoms atoms;
  for (const auto& a : j.at("atoms")) {
    if (!a.is_array() || a.size() != 2) throw ParseError("each atom must be [element, weight]");
    auto g = parse_atom(info, a[0].get<std::string>());
    auto w = a[1].is_string() ? parse_rational(a[1].get<std::string>()) : parse_rational(a[1].dump());
    atoms[g] += w;
  }
  return DiscreteMeasure(tag, std::move(atoms));
}

std::string measure_to_json(const DiscreteMeasure& p) {
  nlohmann::json j;
  j["family"] = p.family_tag();
  j["atoms"] = nlohmann::json::array();
  for (const auto& [g, w] : p.atoms()) j["atoms"].push_back({format_bare(g), format_rational(w)});
  return j.dump();
}

DiscreteMeasure named_measure(const std::string& name) {
  auto z = [](std::int64_t v) { return GroupElement(LatticePoint({v})); };
  if (name == "srw-z") return DiscreteMeasure("z1", {{z(1), mpq_class(1, 2)}, {z(-1), mpq_class(1, 2)}});
  if (name == "lazy-z") {
    return DiscreteMeasure("z1", {{z(-1), mpq_class(1, 4)}, {z(0), mpq_class(1, 2)}, {z(1), mpq_class(1, 4)}});
  }
  if (name == "drift-z") return DiscreteMeasure("z1", {{z(1), mpq_class(2, 3)}, {z(-1), mpq_class(1, 3)}});
  if (name == "srw-z2") {
    DiscreteMeasure::Atoms a;
    for (auto& g : lattice_generators(2)) a[g] = mpq_class(1, 4);
    return DiscreteMeasure("z2", std::move(a));
  }
  if (name == "srw-f2") {
    DiscreteMeasure::Atoms a;
    for (auto& g : free_generators(2)) a[g] = mpq_class(1, 4);
    return DiscreteMeasure("f2", std::move(a));
  }
  throw ParseError("unknown measure '" + name + "' (known: srw-z, lazy-z, drift-z, srw-z2, srw-f2)");
}

}  // namespace rwlab
