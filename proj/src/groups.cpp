#include "rwlab/groups.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace rwlab {

namespace {

std::vector<int> reduce(const std::vector<int>& letters) {
  std::vector<int> out;
  out.reserve(letters.size());
  for (int l : letters) {
    if (l == 0) throw std::invalid_argument("free word letter 0 is not a generator");
    if (!out.empty() && out.back() == -l) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("invalid integer '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s) {
  std::string tmp(trim(s));
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
    throw ParseError("invalid real '" + tmp + "'");
  }
  return v;
}

std::string format_real(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

FreeWord::FreeWord(std::vector<int> letters) : letters_(reduce(letters)) {}

double scale_by_log(double x, double log_s) {
  if (x == 0.0) return 0.0;
  return std::copysign(std::exp(std::log(std::abs(x)) + log_s), x);
}

AffMap::AffMap(double a, double b) : b_(b) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("AffMap scale must be positive and finite");
  if (!std::isfinite(b)) throw std::domain_error("AffMap translation must be finite");
  log_a_ = std::log(a);
}

AffMap AffMap::from_log_scale(double log_a, double b) {
  AffMap g;
  g.log_a_ = log_a;
  g.b_ = b;
  return g;
}

double AffMap::a() const { return std::exp(log_a_); }

double AffMap::apply(double x) const { return scale_by_log(x, log_a_) + b_; }

double AffMap::inverse_apply(double x) const {
  const double d = x - b_;
  if (d == 0.0) return 0.0;
  const double inv_a = std::exp(-log_a_);
  if (std::isinf(inv_a)) return d > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  return d * inv_a;
}

Family family_of(const GroupElement& g) {
  switch (g.index()) {
    case 0: return Family::kLattice;
    case 1: return Family::kFree;
    default: return Family::kAffine;
  }
}

std::string family_name(Family f) {
  switch (f) {
    case Family::kLattice: return "lattice";
    case Family::kFree: return "free";
    case Family::kAffine: return "affine";
  }
  return "?";
}

LatticePoint compose(const LatticePoint& g, const LatticePoint& h) {
  if (g.dim() != h.dim()) throw FamilyMismatch("lattice dimensions differ");
  std::vector<std::int64_t> c(g.dim());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = g[i] + h[i];
  return LatticePoint(std::move(c));
}

FreeWord compose(const FreeWord& g, const FreeWord& h) {
  std::vector<int> w = g.letters();
  w.insert(w.end(), h.letters().begin(), h.letters().end());
  return FreeWord(std::move(w));
}

// (a1,b1)(a2,b2) = (a1 a2, a1 b2 + b1)
AffMap between(const AffMap& g, const AffMap& h) {
  return AffMap::from_log_scale(h.log_a() - g.log_a(), scale_by_log(h.b() - g.b(), -g.log_a()));
}

AffMap compose(const AffMap& g, const AffMap& h) {
  return AffMap::from_log_scale(g.log_a() + h.log_a(), scale_by_log(h.b(), g.log_a()) + g.b());
}

LatticePoint inverse(const LatticePoint& g) {
  std::vector<std::int64_t> c(g.dim());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = -g[i];
  return LatticePoint(std::move(c));
}

FreeWord inverse(const FreeWord& g) {
  std::vector<int> w(g.letters().rbegin(), g.letters().rend());
  for (int& l : w) l = -l;
  return FreeWord(std::move(w));
}

AffMap inverse(const AffMap& g) {
  return AffMap::from_log_scale(-g.log_a(), -scale_by_log(g.b(), -g.log_a()));
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  if (g.index() != h.index()) {
    throw FamilyMismatch("cannot compose " + family_name(family_of(g)) + " with " + family_name(family_of(h)));
  }
  return std::visit(
      [&](const auto& x) -> GroupElement {
        using T = std::decay_t<decltype(x)>;
        return compose(x, std::get<T>(h));
      },
      g);
}

GroupElement inverse(const GroupElement& g) {
  return std::visit([](const auto& x) -> GroupElement { return inverse(x); }, g);
}

GroupElement identity_like(const GroupElement& like) {
  switch (family_of(like)) {
    case Family::kLattice: return LatticePoint::zero(std::get<LatticePoint>(like).dim());
    case Family::kFree: return FreeWord{};
    case Family::kAffine: return AffMap{};
  }
  return AffMap{};
}

bool is_identity(const GroupElement& g) { return g == identity_like(g); }

bool approx_equal(const AffMap& g, const AffMap& h, double rel_tol) {
  const double ga = g.a(), ha = h.a();
  const double sa = std::max({std::abs(ga), std::abs(ha), 1.0});
  const double sb = std::max({std::abs(g.b()), std::abs(h.b()), 1.0});
  return std::abs(ga - ha) <= rel_tol * sa && std::abs(g.b() - h.b()) <= rel_tol * sb;
}

bool approx_equal(const GroupElement& g, const GroupElement& h, double rel_tol) {
  if (g.index() != h.index()) return false;
  if (family_of(g) == Family::kAffine) return approx_equal(std::get<AffMap>(g), std::get<AffMap>(h), rel_tol);
  return g == h;
}

std::int64_t word_length(const LatticePoint& g) {
  std::int64_t s = 0;
  for (auto c : g.coords()) s += c < 0 ? -c : c;
  return s;
}

std::int64_t word_length(const FreeWord& g) { return static_cast<std::int64_t>(g.length()); }

// cosh d(i, a i + b) = 1 + (b^2 + (a-1)^2) / (2a)
double word_length(const AffMap& g) {
  const double la = g.log_a();
  const double b = g.b();
  const double am1 = std::expm1(la);
  double num = b * b + am1 * am1;
  if (!std::isfinite(num)) {
    // a overflowed; (a-1)^2/(2a) ~ a/2
    return std::abs(la) + std::log1p(b * b * std::exp(-std::abs(la)));
  }
  if (num == 0.0) return 0.0;
  const double log_x = std::log(num) - std::log(2.0) - la;
  if (log_x > 40.0) return log_x + std::log(2.0);
  const double x = std::exp(log_x);
  return std::log1p(x + std::sqrt(x * (x + 2.0)));
}

double word_length(const GroupElement& g) {
  return std::visit([](const auto& x) { return static_cast<double>(word_length(x)); }, g);
}

LatticePoint parse_lattice_bare(std::string_view text) {
  std::vector<std::int64_t> c;
  for (auto part : split_commas(text)) c.push_back(parse_int(part));
  if (c.empty()) throw ParseError("lattice point needs at least one coordinate");
  return LatticePoint(std::move(c));
}

FreeWord parse_free_bare(std::string_view text) {
  text = trim(text);
  std::vector<int> letters;
  if (text.empty() || text == "e") return FreeWord{};
  for (auto part : split_commas(text)) {
    if (part.size() < 2 || (part[0] != 'g' && part[0] != 'G')) {
      throw ParseError("invalid free-group letter '" + std::string(part) + "'");
    }
    const auto idx = parse_int(part.substr(1));
    if (idx < 1) throw ParseError("generator index must be >= 1");
    letters.push_back(part[0] == 'g' ? static_cast<int>(idx) : -static_cast<int>(idx));
  }
  return FreeWord(std::move(letters));
}

GroupElement parse_element(std::string_view text) {
  text = trim(text);
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("element needs a family prefix: '" + std::string(text) + "'");
  auto tag = text.substr(0, colon);
  auto body = text.substr(colon + 1);
  if (tag == "z") return parse_lattice_bare(body);
  if (tag == "fw") return parse_free_bare(body);
  if (tag == "aff") {
    auto parts = split_commas(body);
    if (parts.size() != 2) throw ParseError("aff element needs 'a,b'");
    return AffMap(parse_real(parts[0]), parse_real(parts[1]));
  }
  throw ParseError("unknown element family '" + std::string(tag) + "'");
}

std::string format_bare(const GroupElement& g) {
  std::string out;
  switch (family_of(g)) {
    case Family::kLattice: {
      const auto& p = std::get<LatticePoint>(g);
      for (std::size_t i = 0; i < p.dim(); ++i) {
        if (i) out += ',';
        out += std::to_string(p[i]);
      }
      return out;
    }
    case Family::kFree: {
      const auto& w = std::get<FreeWord>(g);
      if (w.is_identity()) return "e";
      for (std::size_t i = 0; i < w.length(); ++i) {
        if (i) out += ',';
        int l = w.letters()[i];
        out += (l > 0 ? 'g' : 'G');
        out += std::to_string(l > 0 ? l : -l);
      }
      return out;
    }
    case Family::kAffine: {
      const auto& m = std::get<AffMap>(g);
      return format_real(m.a()) + "," + format_real(m.b());
    }
  }
  return out;
}

std::string format_element(const GroupElement& g) {
  switch (family_of(g)) {
    case Family::kLattice: return "z:" + format_bare(g);
    case Family::kFree: return "fw:" + format_bare(g);
    case Family::kAffine: return "aff:" + format_bare(g);
  }
  return {};
}

std::vector<LatticePoint> lattice_generators(std::size_t dim) {
  std::vector<LatticePoint> out;
  for (std::size_t i = 0; i < dim; ++i) {
    for (int s : {1, -1}) {
      std::vector<std::int64_t> c(dim, 0);
      c[i] = s;
      out.emplace_back(std::move(c));
    }
  }
  return out;
}

std::vector<FreeWord> free_generators(int rank) {
  std::vector<FreeWord> out;
  for (int i = 1; i <= rank; ++i) {
    out.emplace_back(std::vector<int>{i});
    out.emplace_back(std::vector<int>{-i});
  }
  return out;
}

}  // namespace rwlab
