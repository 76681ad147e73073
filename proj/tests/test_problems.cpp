#include <cmath>
#include <random>

#include "doctest.h"
#include "fdtr/perturb.hpp"
#include "fdtr/problems.hpp"
#include "helpers.hpp"

using namespace fdtr;

namespace {

DesignVector design(const std::string& name) {
  const auto d = fixtures::find_design(name);
  REQUIRE(d.has_value());
  return DesignVector(std::vector<double>(d->x.begin(), d->x.end()));
}

SyntheticAntennaSpec quiet_spec() {
  SyntheticAntennaSpec s;
  s.noise.amplitude_db = 0.0;
  return s;
}

DesignVector random_design(std::mt19937_64& rng, const Bounds& b) {
  std::vector<double> x(b.size());
  for (std::size_t d = 0; d < b.size(); ++d) x[d] = test::uniform(rng, b.lower(d), b.upper(d));
  return DesignVector(std::move(x));
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("fixture data") {
  const Bounds b = fixtures::antenna_bounds();
  CHECK(b.lower(0) == 10);
  CHECK(b.upper(3) == 3.2);
  CHECK(fixtures::fixture_designs().size() == 10);
  for (const auto& d : fixtures::fixture_designs()) {
    CAPTURE(d.name);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(d.x[k] > b.lower(k));
      CHECK(d.x[k] < b.upper(k));
    }
  }
  CHECK(fixtures::find_design("x1")->reported_objective == -2.03);
  CHECK(fixtures::find_design("x9")->x[0] == 18.2);
  CHECK_FALSE(fixtures::find_design("x11").has_value());
  CHECK(fixtures::em_metadata.o_over_L == 0.22);
}

TEST_CASE("antenna response at x1 and 5 GHz") {
  const Bounds b = fixtures::antenna_bounds();
  const FrequencySweep s({5.0}, 5.0, 6.0);
  const auto r = antenna_response(quiet_spec(), b, design("x1"), s);
  CHECK(r.r_db[0] == doctest::Approx(-15.024439955115694).epsilon(1e-12));
  CHECK(r.r_db[0] == doctest::Approx(-15.03).epsilon(1e-3));
  // Resonances 140 / (L + 0.3 l2 + W) and 130 / (l2 + o0).
  CHECK(140.0 / (17.5 + 0.3 * 15.1 + 6.79) == doctest::Approx(4.857737682165163));
  CHECK(130.0 / (15.1 + 6.05) == doctest::Approx(6.1465721040189125));
}

TEST_CASE("matching far off leaves the baseline") {
  const Bounds wide({0, 0, 0, 0, 0, 0}, {100, 100, 100, 100, 100, 100});
  const auto s = FrequencySweep::default_sweep();
  const auto r = antenna_response(quiet_spec(), wide, DesignVector{17.5, 15.1, 6.79, 30, 60, 6.05}, s);
  for (double v : r.r_db) CHECK(v == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("antenna response is deterministic and bounded") {
  const Bounds b = fixtures::antenna_bounds();
  const auto s = FrequencySweep::default_sweep();
  SyntheticAntennaSpec noisy;
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_design(rng, b);
    const auto q1 = antenna_response(quiet_spec(), b, x, s);
    const auto q2 = antenna_response(quiet_spec(), b, x, s);
    CHECK(q1.r_db == q2.r_db);
    for (double v : q1.r_db) {
      CHECK(v >= -40.0);
      CHECK(v <= -1.0);
    }
    // Noise is added after the floor clamp, so it can push either edge by
    // at most the amplitude.
    const auto n = antenna_response(noisy, b, x, s);
    for (double v : n.r_db) {
      CHECK(v >= -40.0 - 0.5);
      CHECK(v <= -1.0 + 0.5);
    }
  }
}

TEST_CASE("good designs exist in the box") {
  const Bounds b = fixtures::antenna_bounds();
  const auto s = FrequencySweep::default_sweep();
  std::mt19937_64 rng(37);
  double best = 0;
  for (int trial = 0; trial < 2000; ++trial)
    best = std::min(best, objective_minmax(antenna_response(quiet_spec(), b, random_design(rng, b), s), s));
  CHECK(best < -10.0);
}

TEST_CASE("antenna rejects wrong dimension") {
  AntennaEvaluator ev(SyntheticAntennaSpec{}, FrequencySweep::default_sweep());
  CHECK_THROWS_AS(ev.evaluate(DesignVector{1, 2, 3}), Error);
  SyntheticAntennaSpec bad;
  bad.floor_db = 0;
  CHECK_THROWS_AS(AntennaEvaluator(bad, FrequencySweep::default_sweep()), Error);
}

TEST_CASE("noise overlay") {
  const Bounds b = fixtures::antenna_bounds();
  const auto s = FrequencySweep::default_sweep();

  SUBCASE("zero amplitude") {
    const auto n = noise_overlay(NoiseSpec{0.0, 0.001, 1}, b, design("x1"), s);
    for (double v : n) CHECK(v == 0.0);
  }
  SUBCASE("same cell, same noise") {
    const NoiseSpec spec;
    // Cell width on L is 0.015 mm; cell k spans [10 + 0.015k, 10 + 0.015(k+1)).
    const DesignVector a{10.0 + 0.015 * 500.2, 15.1, 6.79, 1.72, 9.07, 6.05};
    const DesignVector c = a.with(0, 10.0 + 0.015 * 500.7);
    CHECK(noise_overlay(spec, b, a, s) == noise_overlay(spec, b, c, s));
  }
  SUBCASE("adjacent cells differ") {
    const NoiseSpec spec;
    std::mt19937_64 rng(43);
    int differ = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_design(rng, fixtures::antenna_bounds());
      const std::size_t d = rng() % 6;
      const double width = 0.001 * b.range(d);
      const double k = std::floor((x[d] - b.lower(d)) / width);
      const double next = b.lower(d) + (k + 1.5) * width;
      if (next >= b.upper(d)) continue;
      if (noise_overlay(spec, b, x, s) != noise_overlay(spec, b, x.with(d, next), s)) ++differ;
    }
    CHECK(differ >= 95);
  }
  SUBCASE("values stay within the amplitude") {
    const NoiseSpec spec{0.7, 0.01, 9};
    const auto n = noise_overlay(spec, b, design("x4"), s);
    double lo = 0, hi = 0;
    for (double v : n) {
      CHECK(std::abs(v) <= 0.7);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo > 1.0);  // 201 samples spread over the range
  }
  SUBCASE("seed changes the field") {
    CHECK(noise_overlay(NoiseSpec{0.5, 0.001, 1}, b, design("x2"), s) !=
          noise_overlay(NoiseSpec{0.5, 0.001, 2}, b, design("x2"), s));
  }
}

TEST_CASE("noise hash is a fixed function") {
  const std::vector<std::int64_t> cell{0, 1, 2};
  const double h = noise_hash01(1, cell, 0);
  CHECK(h >= 0.0);
  CHECK(h < 1.0);
  CHECK(noise_hash01(1, cell, 0) == h);
  CHECK(noise_hash01(1, cell, 1) != h);
}

TEST_CASE("noise spec validation") {
  CHECK_THROWS_AS((NoiseSpec{-1, 0.001, 1}.validate()), Error);
  CHECK_THROWS_AS((NoiseSpec{0.5, 0.0, 1}.validate()), Error);
  CHECK_THROWS_AS((NoiseSpec{0.5, 1.0, 1}.validate()), Error);
}

TEST_CASE("steps below one noise cell are noise dominated") {
  const Bounds b = fixtures::antenna_bounds();
  const auto s = FrequencySweep::default_sweep();
  AntennaEvaluator noisy(SyntheticAntennaSpec{}, s);
  AntennaEvaluator clean(quiet_spec(), s);

  auto mean_error = [&](double cells) {
    std::mt19937_64 local(53);
    double total = 0;
    std::size_t count = 0;
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<double> x(6);
      for (std::size_t d = 0; d < 6; ++d)
        x[d] = test::uniform(local, b.lower(d) + 0.2 * b.range(d), b.lower(d) + 0.8 * b.range(d));
      std::vector<double> p(6);
      for (std::size_t d = 0; d < 6; ++d) p[d] = cells * 0.001 * b.range(d);
      EvalCache cn, cc;
      const auto jn = fd_jacobian(cn, noisy, DesignVector(x), StepVector(p), b);
      const auto jc = fd_jacobian(cc, clean, DesignVector(x), StepVector(p), b);
      for (std::size_t j = 0; j < s.size(); ++j)
        for (std::size_t d = 0; d < 6; ++d) {
          total += std::abs(jn.model.jacobian(j, d) - jc.model.jacobian(j, d)) * b.range(d);
          ++count;
        }
    }
    return total / static_cast<double>(count);
  };
  const double small = mean_error(0.1);
  const double large = mean_error(10.0);
  CHECK(small > 3.0 * large);
}

TEST_CASE("smooth antenna: FD error shrinks with the step") {
  const Bounds b = fixtures::antenna_bounds();
  const auto s = FrequencySweep::default_sweep();
  AntennaEvaluator clean(quiet_spec(), s);
  const auto x = design("x1");
  EvalCache ref_cache;
  const auto ref = fd_jacobian(ref_cache, clean, x,
                               resolve_steps(FractionOfInitial{1e-7}, x), b);
  double prev = std::numeric_limits<double>::infinity();
  for (double frac : {0.03, 0.01, 0.003, 0.001}) {
    EvalCache cache;
    const auto j = fd_jacobian(cache, clean, x, resolve_steps(FractionOfInitial{frac}, x), b);
    double err = 0;
    for (std::size_t r = 0; r < s.size(); ++r)
      for (std::size_t d = 0; d < 6; ++d)
        err = std::max(err, std::abs(j.model.jacobian(r, d) - ref.model.jacobian(r, d)));
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("quadratic bowl") {
  QuadraticBowl bowl({1.0, 2.0}, test::in_band_sweep(3));
  CHECK(bowl.evaluate(DesignVector{1.0, 2.0}).r_db == std::vector<double>{0, 0, 0});
  CHECK(bowl.evaluate(DesignVector{2.0, 0.0}).r_db == std::vector<double>{5, 5, 5});
  CHECK_THROWS_AS(bowl.evaluate(DesignVector{1.0}), Error);

  // Forward difference of (x - c)^2 overshoots the slope by exactly p.
  EvalCache cache;
  const double r = 0.7, p = 0.05;
  const auto j = fd_jacobian(cache, bowl, DesignVector{1.0 + r, 2.0}, StepVector({p, p}),
                             Bounds({-10, -10}, {10, 10}));
  CHECK(j.model.jacobian(0, 0) - 2 * r == doctest::Approx(p).epsilon(1e-9));
  CHECK(j.model.jacobian(0, 1) == doctest::Approx(p).epsilon(1e-9));
}

TEST_CASE("affine fixture") {
  AffineMinmax a(5, 3, 4), b(5, 3, 4), c(6, 3, 4);
  CHECK(a.evaluate(DesignVector{0.1, 0.2, 0.3}).r_db == b.evaluate(DesignVector{0.1, 0.2, 0.3}).r_db);
  CHECK(a.offset(0) != c.offset(0));
  CHECK(a.sweep().band_indices().size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(a.offset(j)) <= 1.0);
    for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(a.slope(j, d)) <= 1.0);
  }
  EvalCache cache;
  const auto jr = fd_jacobian(cache, a, DesignVector{1, 1, 1}, StepVector({0.1, 0.1, 0.1}),
                              Bounds({0, 0, 0}, {2, 2, 2}));
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t d = 0; d < 3; ++d)
      CHECK(jr.model.jacobian(j, d) == doctest::Approx(a.slope(j, d)).epsilon(1e-9));
}

TEST_CASE("make_problem") {
  auto ant = make_problem("antenna", NoiseSpec{}, FrequencySweep::default_sweep());
  CHECK(ant.evaluator->dimension() == 6);
  auto quad = make_problem("quadratic", NoiseSpec{}, FrequencySweep::default_sweep());
  const auto c = fixtures::quadratic_center();
  CHECK(quad.bounds.contains(DesignVector(c)));
  CHECK(quad.evaluator->evaluate(DesignVector(c)).r_db[0] == 0.0);
  CHECK_THROWS_AS(make_problem("horn", NoiseSpec{}, FrequencySweep::default_sweep()), Error);
}

}  // TEST_SUITE
