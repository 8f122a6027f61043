#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

#include "gameopt/polyhedral.hpp"
#include "gameopt/verification/oracles.hpp"
#include "gameopt/verification/random_instances.hpp"

using namespace gameopt;
using Catch::Matchers::WithinAbs;

TEST_CASE("two-slope kernel values") {
  const PiecewiseLinear h = h_kernel(1.0, 2.0);
  CHECK(h(-3.0) == 6.0);
  CHECK(h(2.0) == -2.0);
  CHECK(h(0.0) == 0.0);
  CHECK(h_value(1.0, 2.0, -3.0) == 6.0);
  CHECK(h.left_slope() == -2.0);
  CHECK(h.right_slope() == -1.0);

  const PiecewiseLinear flat = h_kernel(0.0, 0.0);
  for (double y : {-5.0, -0.5, 0.0, 3.0}) CHECK(flat(y) == 0.0);
  CHECK(flat.segments() == 1);

  CHECK_THROWS_AS(h_kernel(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("from_knots validates and canonicalizes") {
  CHECK_THROWS_AS(PiecewiseLinear::from_knots({}, {}, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinear::from_knots({1.0, 0.0}, {0.0, 0.0}, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinear::from_knots({0.0}, {NAN}, 0.0, 0.0), std::invalid_argument);

  // Collinear knots collapse to one line.
  const PiecewiseLinear line = PiecewiseLinear::from_knots({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0}, 2.0, 2.0);
  CHECK(line.segments() == 1);
  CHECK(line(10.0) == 21.0);
  CHECK(line(-1.0) == -1.0);

  const PiecewiseLinear kinked = PiecewiseLinear::from_knots({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}, 1.0, 0.0);
  CHECK(kinked.segments() == 2);
  const PiecewiseLinear again = PiecewiseLinear::from_knots(kinked.knots(), kinked.values(), kinked.left_slope(),
                                                            kinked.right_slope());
  CHECK(approx_equal(kinked, again, 0.0));
  CHECK(kinked(0.5) == 0.5);
  CHECK(kinked(7.0) == 1.0);
  CHECK(kinked.slope_right_of(-1.0) == 1.0);
  CHECK(kinked.slope_right_of(3.0) == 0.0);
}

TEST_CASE("pointwise min and max") {
  const PiecewiseLinear h = h_kernel(1.0, 2.0);
  CHECK(approx_equal(pointwise_min(h, h), h, 0.0));
  CHECK(approx_equal(pointwise_max(h, h), h, 0.0));

  const PiecewiseLinear m = pointwise_min(h, PiecewiseLinear());
  REQUIRE(m.knots().size() == 1);
  CHECK(m.knots()[0] == 0.0);
  CHECK(m(-4.0) == 0.0);
  CHECK(m(3.0) == -3.0);

  // Crossing inside a segment.
  const PiecewiseLinear up = PiecewiseLinear::affine(1.0, 0.0);
  const PiecewiseLinear c1 = PiecewiseLinear::constant(1.0);
  const PiecewiseLinear mx = pointwise_max(up, c1);
  REQUIRE(mx.knots().size() == 1);
  CHECK_THAT(mx.knots()[0], WithinAbs(1.0, 1e-15));
  CHECK(mx(0.0) == 1.0);
  CHECK(mx(3.0) == 3.0);

  const PiecewiseLinear bot = PiecewiseLinear::bottom();
  CHECK(pointwise_min(bot, h).is_bottom());
  CHECK(pointwise_min(h, bot).is_bottom());
  CHECK(approx_equal(pointwise_max(bot, h), h, 0.0));
  CHECK(approx_equal(pointwise_max(h, bot), h, 0.0));
  CHECK(bot.segments() == 0);
}

TEST_CASE("min and max are commutative and associative on random functions") {
  gen::Rng rng(41);
  for (int k = 0; k < 60; ++k) {
    const PiecewiseLinear f = gen::lattice_function(rng, 0.5, 2.0);
    const PiecewiseLinear g = gen::lattice_function(rng, 0.5, 2.0);
    const PiecewiseLinear h = gen::lattice_function(rng, 0.5, 2.0);
    CHECK(approx_equal(pointwise_min(f, g), pointwise_min(g, f)));
    CHECK(approx_equal(pointwise_max(f, g), pointwise_max(g, f)));
    CHECK(approx_equal(pointwise_min(pointwise_min(f, g), h), pointwise_min(f, pointwise_min(g, h))));
    CHECK(approx_equal(pointwise_max(pointwise_max(f, g), h), pointwise_max(f, pointwise_max(g, h))));
    CHECK(approx_equal(pointwise_min(f, f), f));
    for (int j = -40; j <= 40; ++j) {
      const double y = j / 8.0 + 1.0 / 64.0;
      // crossing points are rounded, so allow 1e-12 relative
      CHECK_THAT(pointwise_min(f, g)(y), WithinAbs(std::min(f(y), g(y)), 1e-12 * std::max(1.0, std::abs(f(y)))));
      CHECK_THAT(pointwise_max(f, g)(y), WithinAbs(std::max(f(y), g(y)), 1e-12 * std::max(1.0, std::abs(f(y)))));
    }
  }
}

TEST_CASE("gr transform on the hand examples") {
  const PiecewiseLinear h = h_kernel(1.0, 2.0);
  CHECK(approx_equal(gr_transform(h, 1.0, 2.0), h, 1e-12));
  CHECK(gr_transform(PiecewiseLinear::constant(5.0), 1.0, 2.0).is_bottom());
  CHECK(gr_is_bottom(PiecewiseLinear::constant(5.0), 1.0, 2.0));
  CHECK(gr_transform(PiecewiseLinear::bottom(), 1.0, 2.0).is_bottom());
  CHECK_THROWS_AS(gr_transform(h, 2.0, 1.0), std::invalid_argument);

  // One share owed at y = 1 under two different spreads: buying at 11 is cheaper than a slope of 13.
  const PiecewiseLinear owed = PiecewiseLinear::from_knots({1.0}, {0.0}, -13.0, -7.0);
  const PiecewiseLinear g = gr_transform(owed, 9.0, 11.0);
  CHECK(g(0.0) == 11.0);
  CHECK(g(3.0) == -18.0);
  CHECK(g.left_slope() == -11.0);
  CHECK(g.right_slope() == -9.0);
}

TEST_CASE("gr transform agrees with the grid inf-convolution") {
  gen::Rng rng(7);
  for (int k = 0; k < 80; ++k) {
    const double d = gen::uniform_int(rng, 0, 16) / 8.0;
    const double c = d + gen::uniform_int(rng, 0, 16) / 8.0;
    const PiecewiseLinear f = gen::lattice_function(rng, d, c);
    const PiecewiseLinear g = gr_transform(f, d, c);
    REQUIRE_FALSE(g.is_bottom());
    for (int j = 0; j < 25; ++j) {
      const double y = gen::uniform_int(rng, -384, 384) / 64.0;
      const double want = oracle::grid_inf_convolution(f, d, c, y, -12.0, 12.0, 1.0 / 64.0);
      CHECK_THAT(g(y), WithinAbs(want, 1e-9 * std::max(1.0, std::abs(want))));
    }
  }
}

TEST_CASE("epigraph sums land in the epigraph of gr") {
  gen::Rng rng(8);
  for (int k = 0; k < 40; ++k) {
    const double d = gen::uniform_int(rng, 1, 16) / 8.0;
    const double c = d + gen::uniform_int(rng, 0, 16) / 8.0;
    const PiecewiseLinear f = gen::lattice_function(rng, d, c);
    const PiecewiseLinear g = gr_transform(f, d, c);
    for (int j = 0; j < 50; ++j) {
      const double y1 = gen::uniform_int(rng, -256, 256) / 64.0;
      const double y2 = gen::uniform_int(rng, -256, 256) / 64.0;
      const double x1 = h_value(d, c, y1) + gen::uniform_int(rng, 0, 64) / 64.0;
      const double x2 = f(y2) + gen::uniform_int(rng, 0, 64) / 64.0;
      CHECK(x1 + x2 >= g(y1 + y2) - 1e-12 * std::max(1.0, std::abs(g(y1 + y2))));
    }
    // and gr never exceeds f itself (u = 0)
    for (int j = -32; j <= 32; ++j) CHECK(g(j / 8.0) <= f(j / 8.0));
  }
}

TEST_CASE("epigraph membership") {
  const PiecewiseLinear h = h_kernel(1.0, 2.0);
  CHECK(epi_member(0.0, 0.0, h));
  CHECK_FALSE(epi_member(-1.0, 0.0, h));
  CHECK(epi_member(6.0, -3.0, h));
  CHECK_FALSE(epi_member(5.99, -3.0, h));
  CHECK(epi_member(6.0 - 1e-10, -3.0, h));
  CHECK(epi_member(-1e300, 12.0, PiecewiseLinear::bottom()));
}

TEST_CASE("magnitude and csv dump") {
  const PiecewiseLinear f = PiecewiseLinear::from_knots({-1.0, 2.0}, {3.0, -4.0}, -1.0, 0.5);
  CHECK(f.magnitude() >= 4.0);
  const std::string csv = f.to_csv();
  CHECK(csv.find("-1") != std::string::npos);
  CHECK(csv.find("-4") != std::string::npos);
  CHECK(PiecewiseLinear::bottom().to_csv().find("bottom") != std::string::npos);
}
