#include <doctest.h>

#include <cmath>

#include "rwlab/discrete_measure.hpp"
#include "rwlab/grid_density.hpp"
#include "rwlab/random.hpp"

using namespace rwlab;

namespace {

GroupElement z(std::int64_t v) { return LatticePoint({v}); }

GridDensity box(double lo, double hi, double grid_lo, double grid_hi, int n) {
  return GridDensity::sample(GridSpec::uniform(grid_lo, grid_hi, n),
                             [&](double x) { return (x >= lo - 1e-12 && x <= hi + 1e-12) ? 1.0 / (hi - lo) : 0.0; });
}

GridDensity gaussian(double mu, double sd, double lo, double hi, int n) {
  return GridDensity::sample(GridSpec::uniform(lo, hi, n), [&](double x) {
    return std::exp(-0.5 * std::pow((x - mu) / sd, 2)) / (sd * std::sqrt(2 * M_PI));
  });
}

DiscreteMeasure random_z_measure(Rng& rng) {
  DiscreteMeasure::Atoms a;
  const int n = 1 + static_cast<int>(rng.bits() % 4);
  std::vector<long> w(n);
  long total = 0;
  for (auto& x : w) total += (x = 1 + static_cast<long>(rng.bits() % 5));
  for (int i = 0; i < n; ++i) a[z(static_cast<std::int64_t>(rng.bits() % 7) - 3)] += mpq_class(w[i], total);
  return DiscreteMeasure("z1", a);
}

}  // namespace

TEST_CASE("discrete convolution examples") {
  const auto srw = named_measure("srw-z");
  CHECK(convolve_discrete(srw, srw).weight(z(0)) == mpq_class(1, 2));
  const auto lazy = named_measure("lazy-z");
  CHECK(convolve_discrete(lazy, lazy).weight(z(1)) == mpq_class(1, 4));
  CHECK(convolve_discrete(lazy, DiscreteMeasure::dirac("z1")) == lazy);
  CHECK(convolve_discrete(DiscreteMeasure::dirac("z1"), lazy) == lazy);
  CHECK_THROWS_AS(convolve_discrete(srw, named_measure("srw-f2")), FamilyMismatch);
}

TEST_CASE("convolution powers") {
  const auto srw = named_measure("srw-z");
  const auto p0 = convolution_power(srw, 0);
  CHECK(p0.support_size() == 1);
  CHECK(p0.weight(z(0)) == 1);
  CHECK(convolution_power(srw, 4).weight(z(0)) == mpq_class(3, 8));  // C(4,2) / 2^4
  const auto f2 = named_measure("srw-f2");
  CHECK(convolution_power(f2, 2).weight(GroupElement(FreeWord())) == mpq_class(1, 4));
  CHECK_THROWS(convolution_power(f2, 21));
  PowerLimits big;
  big.allow_large = true;
  CHECK(convolution_power(named_measure("srw-z"), 30, big).total_mass() == 1);
}

TEST_CASE("rational masses stay exactly one") {
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_z_measure(rng), q = random_z_measure(rng), r = random_z_measure(rng);
    REQUIRE(convolve_discrete(p, q).total_mass() == 1);
    REQUIRE(convolve_discrete(p, q) == convolve_discrete(q, p));
    REQUIRE(convolve_discrete(convolve_discrete(p, q), r) == convolve_discrete(p, convolve_discrete(q, r)));
  }
  const auto z2 = named_measure("srw-z2");
  CHECK(convolution_power(z2, 3).total_mass() == 1);
}

TEST_CASE("free-group convolution does not commute") {
  const GroupElement g1 = FreeWord({1}), g2 = FreeWord({2});
  const DiscreteMeasure p("f2", {{g1, 1}}), q("f2", {{g2, 1}});
  CHECK(!(convolve_discrete(p, q) == convolve_discrete(q, p)));
}

TEST_CASE("measure validation and JSON") {
  CHECK_THROWS(DiscreteMeasure("z1", {{z(1), mpq_class(1, 2)}}));
  CHECK_THROWS(DiscreteMeasure("z1", {{z(1), mpq_class(3, 2)}, {z(0), mpq_class(-1, 2)}}));
  const auto m = measure_from_json(R"({"family":"z1","atoms":[["1","1/2"],["-1","1/2"]]})");
  CHECK(m == named_measure("srw-z"));
  CHECK(measure_from_json(measure_to_json(named_measure("srw-f2"))) == named_measure("srw-f2"));
}

TEST_CASE("admissibility probe") {
  const auto r = admissibility_probe(named_measure("srw-z"), 2);
  CHECK(r.ball_radius == 2);
  CHECK(!r.inconclusive);
  CHECK(r.summary.find("radius 2") != std::string::npos);
  const DiscreteMeasure even("z1", {{z(2), mpq_class(1, 2)}, {z(-2), mpq_class(1, 2)}});
  const auto e = admissibility_probe(even, 4);
  REQUIRE(e.proper_subsemigroup.has_value());
  CHECK(*e.proper_subsemigroup == "2Z");
  const auto d = admissibility_probe(DiscreteMeasure::dirac("z1"), 3);
  CHECK(d.degenerate);
  CHECK_THROWS(admissibility_probe(even, 0));
}

TEST_CASE("grid convolution of boxes is a triangle") {
  const auto u = box(-1, 1, -1, 1, 512);
  const auto t = grid_convolve(u, u);
  CHECK(t(0.0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(t(1.0) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(t.lo() == doctest::Approx(-2));
  CHECK(t.hi() == doctest::Approx(2));
  CHECK(std::abs(t.mass() - 1) <= 1e-6);
}

TEST_CASE("narrow Gaussian acts as an approximate identity") {
  const auto f = gaussian(0.3, 0.7, -6, 6, 2400);
  const auto d = gaussian(0.0, 0.01, -0.1, 0.1, 40);
  const auto g = grid_convolve(f, d);
  double worst = 0.0;
  for (double x = -3; x <= 3; x += 0.25) worst = std::max(worst, std::abs(g(x) - f(x)));
  CHECK(worst < 1e-3);
}

TEST_CASE("FFT convolution agrees with direct quadrature") {
  const auto f = gaussian(0.5, 0.4, -2, 2, 400).normalized();
  const auto g = box(-0.5, 1.0, -1, 1, 200).normalized();
  const auto a = grid_convolve(f, g);
  // Both routes share the trapezoid weights; grid_convolve also rescales to mass(f) mass(g).
  auto b = grid_convolve_direct(f, g);
  const double scale_to = f.mass() * g.mass() / b.mass();
  for (double& v : b.mutable_values()) v *= scale_to;
  REQUIRE(a.size() == b.size());
  const double scale = b.max_value();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]) / scale);
  CHECK(worst < 1e-8);
  CHECK(std::abs(a.mass() - 1) <= 1e-6);
}

TEST_CASE("grid convolution is associative") {
  const auto f = box(-1, 1, -1, 1, 200);
  const auto g = gaussian(0, 0.3, -1.5, 1.5, 300);
  const auto h = box(0, 0.5, 0, 0.5, 50);
  const auto l = grid_convolve(grid_convolve(f, g), h);
  const auto r = grid_convolve(f, grid_convolve(g, h));
  double worst = 0.0;
  for (double x = -3; x <= 3.5; x += 0.01) worst = std::max(worst, std::abs(l(x) - r(x)));
  CHECK(worst < 1e-6);
}

TEST_CASE("incompatible spacings are refused") {
  CHECK_THROWS_AS(grid_convolve(box(-1, 1, -1, 1, 100), box(-1, 1, -1, 1, 130)), IncompatibleGrids);
}

TEST_CASE("composite grid invariants") {
  const GridSpec spec;
  const auto nodes = spec.nodes();
  for (std::size_t i = 1; i < nodes.size(); ++i) REQUIRE(nodes[i] > nodes[i - 1]);
  const auto g = GridDensity::sample(spec, [](double x) { return std::exp(-x * x) / std::pow(std::abs(x) + 1e-9, 0.25); })
                     .normalized();
  CHECK(std::abs(g.mass() - 1) <= 1e-6);
  for (double v : g.values()) REQUIRE(v >= 0);
  CHECK(g.cdf(g.lo()) == 0.0);
  CHECK(g.cdf(g.hi()) == doctest::Approx(1.0).epsilon(1e-14));
  for (double u : {1e-6, 0.1, 0.37, 0.5, 0.9, 1 - 1e-9}) CHECK(g.cdf(g.quantile(u)) == doctest::Approx(u).epsilon(1e-9));
  const auto pos = positivity_region(g);
  REQUIRE(pos.size() == 1);
}

TEST_CASE("seeded streams are reproducible") {
  Rng a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    REQUIRE(x == b.uniform());
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    differs |= x != c.uniform();
  }
  CHECK(differs);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}
