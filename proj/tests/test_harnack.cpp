#include <doctest.h>

#include <cmath>

#include "rwlab/harnack.hpp"
#include "rwlab/random.hpp"

using namespace rwlab;

namespace {

GroupElement z(std::int64_t v) { return LatticePoint({v}); }

SuitabilityCertificate cert(GroupElement g, int k, std::vector<CertificateTerm> terms) {
  return SuitabilityCertificate{std::move(g), k, std::move(terms)};
}

GridDensity box(double lo, double hi, int per_unit) {
  const int n = static_cast<int>(std::lround((hi - lo) * per_unit));
  return GridDensity::sample(GridSpec::uniform(lo, hi, n), [&](double) { return 1.0 / (hi - lo); });
}

}  // namespace

TEST_CASE("verify_certificate on single atoms") {
  const auto srw = named_measure("srw-z");
  CHECK(verify_certificate(srw, cert(z(1), 0, {{1, mpq_class(2)}})).ok);
  CHECK(verify_certificate(srw, cert(z(0), 0, {{0, mpq_class(1)}})).ok);
  const auto bad = verify_certificate(srw, cert(z(1), 0, {{1, mpq_class(1)}}));
  CHECK(!bad.ok);
  CHECK(bad.margin < 0);
}

TEST_CASE("discrete certificates") {
  const auto lazy = named_measure("lazy-z");
  const auto c1 = discrete_certificate(lazy, z(1), 1);
  CHECK(c1.bound() == 4);
  CHECK(verify_certificate(lazy, c1).ok);
  CHECK(discrete_certificate(lazy, z(0), 3).bound() == 1);
  const auto drift = named_measure("drift-z");
  CHECK(discrete_certificate(drift, z(-1), 1).bound() == 3);
  CHECK_THROWS_AS(discrete_certificate(drift, z(5), 2), CertificateError);
  CHECK_THROWS_AS(discrete_certificate(drift, GroupElement(FreeWord({1})), 2), FamilyMismatch);
}

TEST_CASE("certificate JSON round trip") {
  const auto c = discrete_certificate(named_measure("lazy-z"), z(1), 1);
  CHECK(certificate_to_json(c) == R"({"element":"z:1","k":0,"terms":[[1,"4"]]})");
  const auto back = certificate_from_json(certificate_to_json(c));
  CHECK(back.bound() == 4);
  CHECK(certificate_from_json(R"({"element":"z:1","k":0,"terms":[[1,"4.5"]]})").bound() == mpq_class(9, 2));
}

TEST_CASE("exponential oracle on Z") {
  const auto lazy = exp_oracle(named_measure("lazy-z"));
  REQUIRE(lazy.roots.size() == 1);
  CHECK(lazy.roots[0] == 0.0);
  for (int g = -5; g <= 5; ++g) CHECK(lazy.value(g) == 1.0);
  const auto drift = exp_oracle(named_measure("drift-z"));
  REQUIRE(drift.exact_lambda.has_value());
  CHECK(*drift.exact_lambda == mpq_class(1, 2));
  CHECK(*drift.exact_value(-1) == 2);
  CHECK(*drift.exact_value(1) == 1);
  CHECK(*drift.exact_value(0) == 1);
  CHECK(drift.value(-1) == doctest::Approx(2).epsilon(1e-12));
}

TEST_CASE("certificate bounds dominate the oracle") {
  const auto drift = named_measure("drift-z");
  const auto o = exp_oracle(drift);
  for (int g = -6; g <= 6; ++g) {
    const auto c = discrete_certificate(drift, z(g), 8);
    REQUIRE(verify_certificate(drift, c).ok);
    REQUIRE(c.bound() >= *o.exact_value(g));
    REQUIRE(c.bound() >= 1);
  }
}

TEST_CASE("majorant properties on oracle values") {
  const auto o = exp_oracle(named_measure("drift-z"));
  CHECK(*o.exact_value(-2) == *o.exact_value(-1) * *o.exact_value(-1));
  CHECK(*o.exact_value(0) <= *o.exact_value(1) * *o.exact_value(-1));
  std::vector<MajorantEstimate> est;
  for (int g = -4; g <= 4; ++g) est.push_back({z(g), INFINITY, o.value(g), o.exact_value(g), "oracle"});
  const auto rep = majorant_properties_check(est);
  CHECK(rep.ok);
  CHECK(rep.pairs_checked > 0);
  // A fake majorant below one is caught.
  est.push_back({z(7), INFINITY, 0.5, mpq_class(1, 2), "oracle"});
  CHECK(!majorant_properties_check(est).ok);
}

TEST_CASE("Gaussian alpha closed form") {
  CHECK(gaussian_alpha({1.0}, 1, 2, {1.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(gaussian_alpha({0.5, -1.0}, 1, 3, {0.25, -0.5}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(gaussian_alpha({2.0, 0.0}, 1, 4, {0.0, 0.0}) == doctest::Approx(4 * std::exp(1.0 / 3)).epsilon(1e-14));
  CHECK_THROWS(gaussian_alpha({1.0}, 2, 2, {0.0}));
  const double a = gaussian_alpha({2.0, 0.0}, 1, 4, {0.0, 0.0});
  const double sup = gaussian_ratio_grid_sup({2.0, 0.0}, 1, 4, {0.0, 0.0});
  CHECK(sup <= a * (1 + 1e-12));
  CHECK(sup >= 0.99 * a);
}

TEST_CASE("Gaussian tightness on random draws") {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const int d = 1 + i % 3;
    std::vector<double> g(d), b(d);
    for (auto& v : g) v = rng.uniform(-2, 2);
    for (auto& v : b) v = rng.uniform(-1, 1);
    const double s = rng.uniform(0.5, 2), t = s + rng.uniform(0.5, 3);
    const double a = gaussian_alpha(g, s, t, b);
    const double sup = gaussian_ratio_grid_sup(g, s, t, b);
    REQUIRE(sup >= 0.99 * a);
    REQUIRE(sup <= a * (1 + 1e-12));
  }
}

TEST_CASE("covering certificates on the line") {
  GridPowers sym(box(-1, 1, 200));
  const auto c0 = covering_certificate(sym, 0.0, 2);
  CHECK(c0.verdict.ok);
  CHECK(c0.certificate.bound() == 1);
  const auto c1 = covering_certificate(sym, 0.5, 2);
  CHECK(c1.verdict.ok);
  CHECK(std::isfinite(c1.certificate.bound_double()));
  CHECK(c1.certificate.bound_double() >= exp_oracle(sym.base()).value(0.5));
  CHECK(exp_oracle(sym.base()).value(0.5) == 1.0);

  GridPowers drift(box(-1, 2, 200));
  const auto o = exp_oracle(drift.base());
  REQUIRE(o.roots.size() == 2);
  const double expected = o.value(-1.0);
  CHECK(expected > 1.0);
  const auto c2 = covering_certificate(drift, -1.0, 2);
  CHECK(c2.verdict.ok);
  CHECK(c2.certificate.bound_double() >= expected);
  CHECK_THROWS(covering_certificate(drift, -1.0, 1));
}

TEST_CASE("Harnack exponent") {
  const auto lazy = harnack_exponent(named_measure("lazy-z"), {1, 2, 3, 4}, 6);
  for (double t : lazy.theta_of_r) CHECK(t == 0.0);
  CHECK(lazy.gamma_hat == 0.0);
  const auto drift = harnack_exponent(named_measure("drift-z"), {1, 2, 3, 4, 5}, 6);
  CHECK(std::abs(drift.gamma_hat - std::log(2.0)) < 1e-6);
  for (std::size_t i = 0; i < drift.radii.size(); ++i) {
    CHECK(drift.theta_of_r[i] == doctest::Approx(drift.radii[i] * std::log(2.0)).epsilon(1e-12));
  }
  CHECK(drift.subadditive);
  CHECK(!drift.upper_estimate);
  const auto single = harnack_exponent(named_measure("drift-z"), {1}, 4);
  CHECK(single.gamma_hat == single.theta_of_r[0]);
  const auto f2 = harnack_exponent(named_measure("srw-f2"), {1, 2}, 4);
  CHECK(f2.upper_estimate);
  CHECK(f2.subadditive);
  CHECK(f2.gamma_hat <= f2.slope[0] + 1e-12);
}

TEST_CASE("delta(K) for the uniform density is the shift size") {
  const auto phi = GridDensity::sample(GridSpec::uniform(-4, 4, 1600),
                                       [](double x) { return std::abs(x) <= 1 + 1e-12 ? 0.5 : 0.0; });
  const std::vector<double> radii{0, 0.005, 0.1, 0.5, 1, 1.5, 2};
  const auto d = delta_K(phi, [](double) { return 1.0; }, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(std::abs(d[i] - radii[i]) < 1e-4);
  CHECK(d[0] == 0.0);
}

TEST_CASE("delta(K) for a drifted density decays") {
  const auto phi = GridDensity::sample(GridSpec::uniform(-4, 5, 1800),
                                       [](double x) { return x >= -1 - 1e-12 && x <= 2 + 1e-12 ? 1.0 / 3 : 0.0; });
  const auto o = exp_oracle(phi);
  const auto d = delta_K(phi, [&](double x) { return o.value(x); }, {0, 0.01, 0.1, 1});
  CHECK(d[0] == 0.0);
  CHECK(d[1] < d[2]);
  CHECK(d[2] < d[3]);
  CHECK(d[1] / d[3] < 0.05);
}
