#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "mbl/distribution.hpp"
#include "mbl/ensemble.hpp"
#include "mbl/rng.hpp"

using Catch::Approx;
using namespace mbl;

TEST_CASE("distributions") {
  SECTION("factory validation") {
    REQUIRE_THROWS_AS(Distribution::uniform(2.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(Distribution::two_point(0.0, 1.0, 1.5),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(Distribution::scaled_uniform(1.0, 3.0, 3.0),
                      std::invalid_argument);
  }
  SECTION("support endpoints") {
    REQUIRE(Distribution::uniform(1.0, 3.0).min_support() == 1.0);
    REQUIRE(Distribution::uniform(1.0, 3.0).max_support() == 3.0);
    REQUIRE(Distribution::two_point(3.0, -1.0, 0.5).min_support() == -1.0);
    const Distribution flipped = Distribution::scaled_uniform(-2.0, 0.0, 1.0);
    REQUIRE(flipped.min_support() == -2.0);
    REQUIRE(flipped.max_support() == 0.0);
  }
  SECTION("samples stay inside the support") {
    const Distribution u = Distribution::scaled_uniform(10.0, 0.25, 0.75);
    rng::Stream stream(5);
    for (int i = 0; i < 1000; ++i) {
      const double v = u.sample(stream);
      REQUIRE(v >= 2.5);
      REQUIRE(v <= 7.5);
    }
  }
  SECTION("uniform sample mean obeys the law of large numbers") {
    const Distribution u = Distribution::uniform(0.0, 1.0);
    rng::Stream stream(17);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += u.sample(stream);
    REQUIRE(acc / n == Approx(0.5).margin(0.005));
  }
  SECTION("two-point frequencies match the weight") {
    const Distribution tp = Distribution::two_point(1.0, 3.0, 0.25);
    rng::Stream stream(19);
    int first = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      if (tp.sample(stream) == 1.0) ++first;
    }
    REQUIRE(static_cast<double>(first) / n == Approx(0.25).margin(0.01));
  }
  SECTION("spring-law admissibility") {
    REQUIRE(Distribution::uniform(0.0, 1.0).satisfies_assumption_a());
    REQUIRE(Distribution::scaled_uniform(3.0, 0.5, 1.0).satisfies_assumption_a());
    REQUIRE_FALSE(Distribution::uniform(-1.0, 1.0).satisfies_assumption_a());
    REQUIRE_FALSE(Distribution::point_mass(1.0).satisfies_assumption_a());
  }
  SECTION("atom at zero detection") {
    REQUIRE(Distribution::point_mass(0.0).has_atom_at_zero());
    REQUIRE(Distribution::two_point(0.0, 2.0, 0.5).has_atom_at_zero());
    REQUIRE_FALSE(Distribution::two_point(0.0, 2.0, 0.0).has_atom_at_zero());
    REQUIRE_FALSE(Distribution::uniform(0.0, 1.0).has_atom_at_zero());
  }
  SECTION("describe and parse round-trip") {
    for (const char* text :
         {"point:2.5", "uniform:0,4", "twopoint:1,3,0.5",
          "scaled-uniform:10,0,1"}) {
      const Distribution d = parse_distribution(text);
      const Distribution round = parse_distribution(d.describe());
      REQUIRE(round.kind == d.kind);
      REQUIRE(round.a == d.a);
      REQUIRE(round.b == d.b);
      REQUIRE(round.p == d.p);
      REQUIRE(round.scale == d.scale);
    }
  }
  SECTION("malformed specs are rejected") {
    REQUIRE_THROWS_AS(parse_distribution("gaussian:0,1"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_distribution("uniform:1"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_distribution("uniform:a,b"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_distribution("point"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_distribution("point:1.0x"), std::invalid_argument);
  }
}

TEST_CASE("seed derivation") {
  SECTION("distinct coordinates give distinct seeds") {
    REQUIRE(rng::derive_seed(1, 0, "mu") != rng::derive_seed(1, 1, "mu"));
    REQUIRE(rng::derive_seed(1, 0, "mu") != rng::derive_seed(1, 0, "nu"));
    REQUIRE(rng::derive_seed(1, 0, "mu") != rng::derive_seed(2, 0, "mu"));
  }
  SECTION("sample vectors are reproducible") {
    const Distribution u = Distribution::uniform(0.0, 4.0);
    const Vector a = sample_vector(u, 16, 9, 3, "nu");
    const Vector b = sample_vector(u, 16, 9, 3, "nu");
    REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);
    const Vector c = sample_vector(u, 16, 9, 4, "nu");
    REQUIRE((a - c).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("ensemble expectation") {
  SECTION("point diagnostics have zero standard error") {
    auto fn = [](long) { return std::optional<Vector>(Vector::Constant(2, 3.0)); };
    const ExpectationResult e = expectation(10, 1, fn);
    REQUIRE(e.mean(0) == 3.0);
    REQUIRE(e.std_error(0) == 0.0);
    REQUIRE(e.n_valid == 10);
    REQUIRE(e.n_invalid == 0);
  }
  SECTION("uniform draws average to one half") {
    auto fn = [](long idx) {
      rng::Stream stream(rng::derive_seed(3, static_cast<std::uint64_t>(idx), "u"));
      Vector v(1);
      v(0) = stream.next_unit();
      return std::optional<Vector>(v);
    };
    const ExpectationResult e = expectation(20000, 4, fn);
    REQUIRE(e.mean(0) == Approx(0.5).margin(0.02));
    REQUIRE(e.std_error(0) == Approx(std::sqrt(1.0 / 12.0 / 20000.0)).epsilon(0.1));
  }
  SECTION("a single valid sample reports no standard error") {
    auto fn = [](long) { return std::optional<Vector>(Vector::Constant(1, 1.0)); };
    const ExpectationResult e = expectation(1, 1, fn);
    REQUIRE(std::isnan(e.std_error(0)));
  }
  SECTION("invalid samples are counted, not averaged") {
    auto fn = [](long idx) -> std::optional<Vector> {
      if (idx % 2 == 0) throw SingularSpectrumError("skip");
      return Vector::Constant(1, 2.0);
    };
    const ExpectationResult e = expectation(10, 2, fn);
    REQUIRE(e.n_valid == 5);
    REQUIRE(e.n_invalid == 5);
    REQUIRE(e.mean(0) == 2.0);
  }
  SECTION("all-invalid ensembles abort") {
    auto fn = [](long) -> std::optional<Vector> {
      throw SingularSpectrumError("always");
    };
    REQUIRE_THROWS_AS(expectation(4, 2, fn), SingularSpectrumError);
  }
  SECTION("non-numerical exceptions propagate") {
    auto fn = [](long) -> std::optional<Vector> {
      throw std::logic_error("bug");
    };
    REQUIRE_THROWS_AS(expectation(4, 2, fn), std::logic_error);
  }
  SECTION("results do not depend on the thread count") {
    auto fn = [](long idx) {
      rng::Stream stream(rng::derive_seed(7, static_cast<std::uint64_t>(idx), "x"));
      Vector v(3);
      for (int i = 0; i < 3; ++i) v(i) = stream.next_unit();
      return std::optional<Vector>(v);
    };
    const ExpectationResult serial = expectation(100, 1, fn);
    const ExpectationResult parallel = expectation(100, 8, fn);
    REQUIRE((serial.mean - parallel.mean).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((serial.std_error - parallel.std_error).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("decay fits") {
  SECTION("an exact exponential is recovered to round-off") {
    std::vector<std::pair<double, double>> points;
    for (int r = 1; r <= 12; ++r) {
      points.emplace_back(r, 3.0 * std::exp(-0.7 * r));
    }
    const DecayFit fit = fit_decay(points, 1.0);
    REQUIRE(fit.C == Approx(3.0).margin(1e-12));
    REQUIRE(fit.eta == Approx(0.7).margin(1e-12));
    REQUIRE(fit.zeta == 1.0);
    REQUIRE(fit.residual <= 1e-12);
    REQUIRE(fit.eta_stderr <= 1e-12);
    REQUIRE(fit.n_points == 12);
    REQUIRE(fit.n_floored == 0);
  }
  SECTION("a stretched exponential selects the right stretch") {
    std::vector<std::pair<double, double>> points;
    for (int r = 1; r <= 15; ++r) {
      points.emplace_back(r, 2.0 * std::exp(-0.9 * std::sqrt(r)));
    }
    const DecayFit fit = fit_decay(points, std::nullopt);
    REQUIRE(fit.zeta == Approx(0.5).margin(1e-9));
    REQUIRE(fit.eta == Approx(0.9).margin(1e-6));
  }
  SECTION("mild noise keeps the rate near the truth") {
    rng::Stream stream(23);
    std::vector<std::pair<double, double>> points;
    for (int r = 1; r <= 20; ++r) {
      const double noise = 1.0 + 0.05 * (2.0 * stream.next_unit() - 1.0);
      points.emplace_back(r, 5.0 * std::exp(-1.0 * r) * noise);
    }
    const DecayFit fit = fit_decay(points, 1.0);
    REQUIRE(fit.eta > 0.9);
    REQUIRE(fit.eta < 1.1);
    REQUIRE(fit.eta > 3.0 * fit.eta_stderr);
  }
  SECTION("values at or below the floor are clamped and counted") {
    std::vector<std::pair<double, double>> points;
    for (int r = 1; r <= 6; ++r) {
      points.emplace_back(r, r <= 4 ? std::exp(-r) : 1e-18);
    }
    const DecayFit fit = fit_decay(points, 1.0);
    REQUIRE(fit.n_floored == 2);
  }
  SECTION("degenerate inputs are rejected") {
    REQUIRE_THROWS_AS(fit_decay({{1.0, 1.0}, {2.0, 0.5}}, 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        fit_decay({{1.0, 1.0}, {1.0, 0.5}, {1.0, 0.2}}, 1.0),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        fit_decay({{1.0, 1.0}, {2.0, -0.5}, {3.0, 0.2}}, 1.0),
        std::invalid_argument);
  }
  SECTION("standard error shrinks like the square root of the point count") {
    rng::Stream stream(29);
    auto noisy_fit = [&](int count) {
      std::vector<std::pair<double, double>> points;
      for (int r = 1; r <= count; ++r) {
        const double noise = std::exp(0.2 * (2.0 * stream.next_unit() - 1.0));
        points.emplace_back(r, std::exp(-0.5 * r) * noise);
      }
      return fit_decay(points, 1.0);
    };
    const DecayFit small = noisy_fit(10);
    const DecayFit large = noisy_fit(1000);
    REQUIRE(large.eta_stderr < small.eta_stderr);
  }
}

TEST_CASE("linear fits") {
  SECTION("an exact line is recovered") {
    const LinearFit fit =
        fit_linear({1.0, 2.0, 3.0, 4.0}, {2.0, 4.0, 6.0, 8.0});
    REQUIRE(fit.slope == Approx(2.0));
    REQUIRE(fit.intercept == Approx(0.0).margin(1e-12));
    REQUIRE(fit.slope_stderr <= 1e-12);
  }
  SECTION("a flat trend has slope consistent with zero") {
    rng::Stream stream(31);
    std::vector<double> xs, ys;
    for (int i = 0; i < 50; ++i) {
      xs.push_back(i);
      ys.push_back(1.0 + 0.01 * (2.0 * stream.next_unit() - 1.0));
    }
    const LinearFit fit = fit_linear(xs, ys);
    REQUIRE(std::abs(fit.slope) <= 3.0 * fit.slope_stderr);
  }
  SECTION("too few points are rejected") {
    REQUIRE_THROWS_AS(fit_linear({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
  }
}

TEST_CASE("fit window") {
  REQUIRE_FALSE(in_fit_window(1.0, 20.0));
  REQUIRE(in_fit_window(2.0, 20.0));
  REQUIRE(in_fit_window(10.0, 20.0));
  REQUIRE_FALSE(in_fit_window(11.0, 20.0));
}
