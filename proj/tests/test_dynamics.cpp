#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "rwlab/dynamics.hpp"

using namespace rwlab;
using rwlab::testing::default_params;
using rwlab::testing::solved;

TEST_CASE("walk paths") {
  const auto drift = StepLaw::discrete(named_measure("drift-z"));
  const auto p0 = simulate_walk(drift, 0, 1);
  REQUIRE(p0.steps.size() == 1);
  CHECK(is_identity(p0.steps[0]));
  const auto p = simulate_walk(drift, 300, 2);
  CHECK(p.steps.size() == 301);
  for (std::size_t n = 1; n < p.steps.size(); ++n) REQUIRE(p.recovered_increment(n) == p.increments[n - 1]);
  CHECK(simulate_walk(drift, 300, 2).steps == p.steps);

  const auto f2 = simulate_walk(StepLaw::discrete(named_measure("srw-f2")), 200, 3);
  for (std::size_t n = 1; n < f2.steps.size(); ++n) REQUIRE(f2.recovered_increment(n) == f2.increments[n - 1]);

  const auto aff = simulate_walk(StepLaw::counterexample(default_params()), 200, 4);
  for (std::size_t n = 1; n < aff.steps.size(); ++n) {
    // z_{n-1}^{-1} z_n cancels b_n - b_{n-1}; scale the tolerance by that conditioning.
    const auto& prev = std::get<AffMap>(aff.steps[n - 1]);
    const auto& cur = std::get<AffMap>(aff.steps[n]);
    const double kappa = 1.0 + scale_by_log(std::abs(prev.b()) + std::abs(cur.b()), -prev.log_a());
    const auto got = std::get<AffMap>(aff.recovered_increment(n));
    const auto& want = std::get<AffMap>(aff.increments[n - 1]);
    const double eps = 2.220446049250313e-16;
    REQUIRE(std::isfinite(got.b()));
    REQUIRE(std::abs(got.log_a() - want.log_a()) <= 64 * eps * (1.0 + std::abs(prev.log_a()) + std::abs(cur.log_a())));
    REQUIRE(std::abs(got.b() - want.b()) <= 64 * eps * kappa);
  }
}

TEST_CASE("law of large numbers along paths") {
  const auto& p = default_params();
  const auto law = StepLaw::counterexample(p);
  std::vector<double> rates(1000);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto path = simulate_walk(law, 1000, derive_seed(50, i));
    // The a-coordinate of z_n is Q_n.
    rates[i] = std::get<AffMap>(path.steps.back()).log_a() / 1000.0;
  }
  const auto m = mean_se(rates);
  CHECK(std::abs(m.mean - p.E_log_A) < 3 * m.se);

  const auto drift = StepLaw::discrete(named_measure("drift-z"));
  std::vector<double> speeds(1000);
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const auto path = simulate_walk(drift, 1000, derive_seed(51, i));
    speeds[i] = double(std::get<LatticePoint>(path.steps.back())[0]) / 1000.0;
  }
  const auto s = mean_se(speeds);
  CHECK(std::abs(s.mean - 1.0 / 3) < 3 * s.se);
}

TEST_CASE("compact sets") {
  const auto box = CompactSet::affine_box(0.5, 2, 2);
  CHECK(box.contains(GroupElement(AffMap(1, 1.5))));
  CHECK(!box.contains(GroupElement(AffMap(0.4, 0))));
  const auto lat = CompactSet::lattice_box(-10, 10);
  CHECK(lat.contains(GroupElement(LatticePoint({10}))));
  CHECK(!lat.contains(GroupElement(LatticePoint({11}))));
  CHECK(CompactSet::word_ball(2).contains(GroupElement(FreeWord({1, 2}))));
  CHECK(!CompactSet::word_ball(2).contains(GroupElement(FreeWord({1, 2, 1}))));
}

TEST_CASE("escape from compact sets") {
  const auto aff = escape_experiment(StepLaw::counterexample(default_params()), CompactSet::affine_box(0.5, 2, 2),
                                     {50, 100, 250, 500}, 10000, 60);
  CHECK(aff.rows.back().frequency < 0.05);
  CHECK(aff.decreasing);
  const auto drift = escape_experiment(StepLaw::discrete(named_measure("drift-z")), CompactSet::lattice_box(-10, 10),
                                       {50, 100, 250, 500}, 10000, 61);
  CHECK(drift.rows.back().frequency < 0.05);
  CHECK(drift.decreasing);
  const auto srw = escape_experiment(StepLaw::discrete(named_measure("srw-z")), CompactSet::lattice_box(-10, 10),
                                     {10000}, 1000, 62);
  CHECK(srw.rows.back().frequency < 0.05);
  // Worker count does not change results.
  const auto w1 = escape_experiment(StepLaw::discrete(named_measure("drift-z")), CompactSet::lattice_box(-3, 3), {20},
                                    500, 63, 1);
  const auto w3 = escape_experiment(StepLaw::discrete(named_measure("drift-z")), CompactSet::lattice_box(-3, 3), {20},
                                    500, 63, 3);
  CHECK(w1.rows[0].frequency == w3.rows[0].frequency);
}

TEST_CASE("bernstein bound") {
  const double L = std::log(2.0 / 1e-3);
  CHECK(bernstein_bound(0.0, 1e-3) == doctest::Approx(2.0 * L / 3.0));
  // Solves t^2 = 2 L (V + t / 3).
  const double t = bernstein_bound(250.0, 1e-3);
  CHECK(t * t == doctest::Approx(2.0 * L * (250.0 + t / 3.0)).epsilon(1e-12));
}

TEST_CASE("martingale z_n mu(A)") {
  const auto& rho = solved().rho;
  const auto r = martingale_experiment(default_params(), rho, 0, 1, 50, 10000, 70);
  CHECK(r.rows[0].M.mean == doctest::Approx(r.mu_A).epsilon(1e-12));
  CHECK(r.rows[0].M.sd <= 1e-12);
  CHECK(r.mu_A == doctest::Approx(rho.cdf(1) - rho.cdf(0)).epsilon(1e-14));
  CHECK(r.first_moment_ok);
  CHECK(std::abs(r.rows[1].M.mean - r.mu_A) <= 3 * r.rows[1].M.se);
  for (int n : {1, 10, 50}) {
    const auto& row = r.rows[static_cast<std::size_t>(n)];
    CHECK(std::abs(row.increment.mean) <= 3 * row.increment.se);
  }
  CHECK(r.unconditional_ok);
  CHECK(r.conditional_ok);
  MESSAGE("M_10 mean " << r.rows[10].M.mean << " se " << r.rows[10].M.se);
}

TEST_CASE("translate_measure") {
  const auto& rho = solved().rho;
  CHECK(translate_measure(AffMap(), 0, 1, rho) == doctest::Approx(rho.cdf(1) - rho.cdf(0)).epsilon(1e-15));
  const AffMap g(2, 0.5);
  CHECK(translate_measure(g, 0, 1, rho) == doctest::Approx(rho.cdf(0.25) - rho.cdf(-0.25)).epsilon(1e-12));
}

TEST_CASE("recurrence witnesses") {
  const auto& rho = solved().rho;
  const auto r = recurrence_witnesses(default_params(), rho, 0, 1, 20, 5.0, 80);
  REQUIRE(!r.witnesses.empty());
  for (const auto& w : r.witnesses) {
    REQUIRE(w.word_length > 5.0);
    REQUIRE(w.overlap > 0.0);
    REQUIRE(std::abs(w.overlap - w.overlap_quadrature) < 1e-6);
  }
  CHECK(overlap_measure(AffMap(), 0, 1, rho) == doctest::Approx(r.mu_A).epsilon(1e-12));
  CHECK(std::abs(overlap_quadrature(AffMap(), 0, 1, rho) - r.mu_A) < 1e-6);
}

TEST_CASE("forward map invariance") {
  const auto& p = default_params();
  const auto& rho = solved().rho;
  const auto inv = forward_invariance_probe(p, rho, {0, 1, 5, 25}, 100000, 90);
  CHECK(inv.ok);
  for (const auto& row : inv.rows) CHECK(row.ks < 0.02);
  CHECK(inv.rows[0].ks < 0.015);
  const auto bad = forward_invariance_probe(p, rho, {0, 1, 5, 25}, 20000, 91, [](Rng& r) { return r.uniform(); });
  CHECK(bad.rows[0].ks > bad.rows[3].ks);
  MESSAGE("uniform start KS by k: " << bad.rows[0].ks << " " << bad.rows[1].ks << " " << bad.rows[2].ks << " "
                                    << bad.rows[3].ks);

  Rng rng(92);
  ForwardPoint pt;
  pt.x = 0.3;
  const auto law = StepLaw::counterexample(p);
  const auto next = forward_map(pt, law, rng);
  CHECK(std::isfinite(next.x));
  ForwardPoint seeded;
  seeded.x = 0.3;
  seeded.omega = {AffMap(0.5, 1), AffMap(2, 0)};
  const auto step = forward_map(seeded, law, rng);
  CHECK(step.x == doctest::Approx(1.15).epsilon(1e-15));
  CHECK(step.omega.size() == 1);
}

TEST_CASE("Maharam extension") {
  const auto& rho = solved().rho;
  const MaharamPoint p{0.7, 0.25, -1.5};
  const auto e = maharam_step(AffMap(), p, rho);
  CHECK(e.x == p.x);
  CHECK(e.t() == p.t());
  const auto c = maharam_cocycle_check(rho, 1000, 100);
  CHECK(c.ok);
  CHECK(c.worst_fiber <= 1e-9);

  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    const AffMap g = random_affine(rng);
    const MaharamPoint q{rng.uniform(-2, 2), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const double s = rng.uniform(-5, 5);
    const auto a = maharam_step(g, fiber_translate(s, q), rho);
    const auto b = fiber_translate(s, maharam_step(g, q, rho));
    REQUIRE(a.x == b.x);
    REQUIRE(a.t() == b.t());
  }

  for (const auto& [g, r] : std::vector<std::pair<AffMap, std::array<double, 4>>>{
           {AffMap(1.5, -0.3), {-1.0, 0.5, -2.0, 3.0}}, {AffMap(0.5, 0.2), {0.2, 1.5, 0.0, 1.0}},
           {AffMap::translation(1.0), {0.5, 2.0, -1.0, 2.0}}}) {
    const auto pr = maharam_rectangle_probe(g, r[0], r[1], r[2], r[3], rho);
    CHECK(pr.ok);
    CHECK(pr.error <= 1e-4);
  }
}

TEST_CASE("skew product") {
  const auto& rho = solved().rho;
  CHECK(skew_period(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(skew_period(1.0) == 0.0);
  CHECK_THROWS_AS(skew_period(0.0), DomainError);
  CHECK_THROWS_AS(skew_period(1.5), DomainError);
  const auto c = skew_action_check(std::exp(-1.0), rho, 1000, 110);
  CHECK(c.ok);
  CHECK(c.checks == 1000);
  const auto trivial = skew_step(AffMap(1.5, -0.3), SkewPoint{0.4, 0.0}, 1.0, rho);
  CHECK(trivial.y == 0.0);
  CHECK(trivial.x == AffMap(1.5, -0.3).apply(0.4));
  const auto s = skew_step(AffMap(1.5, -0.3), SkewPoint{0.4, 0.9}, std::exp(-1.0), rho);
  CHECK(s.y >= 0.0);
  CHECK(s.y < 1.0);
  CHECK(circle_distance(0.05, 0.95, 1.0) == doctest::Approx(0.1));
  const auto h = alpha_histogram(AffMap(1.5, -0.3), rho, 5000, 111);
  std::size_t total = h.dropped;
  for (auto n : h.counts) total += n;
  CHECK(total == 5000);
}
