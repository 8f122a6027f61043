#include <catch_amalgamated.hpp>

#include "gameopt/shortfall.hpp"
#include "gameopt/verification/random_instances.hpp"

using namespace gameopt;
using Catch::Matchers::WithinAbs;

namespace {

ShortfallProblem call_problem(double capital) {
  ShortfallProblem p;
  p.game = build_game(GameOptionInstance{CrrParams{1.0, 0.2, -0.2, 0.0, 1}, payoffs::vanilla_call(1.0, 0.05)});
  p.capital = capital;
  return p;
}

}  // namespace

// With x = 0.03: cancelling costs (0.05 - 0.03)^+ = 0.02. Holding gamma in
// the no-bankruptcy range [-0.15, 0.15] leaves 0.5 (0.17 - 0.2 gamma) >= 0.07
// in expectation, so the seller cancels and R = 0.02.
TEST_CASE("one-period call shortfall by hand") {
  const ShortfallProblem p = call_problem(0.03);
  CHECK_THAT(shortfall_dp(p).risk, WithinAbs(0.02, 1e-12));
  CHECK_THAT(shortfall_brute(p).risk, WithinAbs(0.02, 1e-12));
}

TEST_CASE("capital at the fair price removes all risk") {
  gen::Rng rng(12);
  for (int i = 0; i < 6; ++i) {
    ShortfallProblem p;
    p.game = gen::game_tree(rng, 1 + i % 3);
    p.options.gamma_points = 3;  // keeps the enumeration small
    p.capital = price(p.game).value;
    CHECK(shortfall_dp(p).risk == 0.0);
    CHECK(shortfall_brute(p).risk <= 1e-9 * p.game.discounted.scale());
  }
}

TEST_CASE("zero capital risk is bounded by the largest payoff") {
  gen::Rng rng(13);
  for (int i = 0; i < 6; ++i) {
    ShortfallProblem p;
    p.game = gen::game_tree(rng, 1 + i % 3);
    const double r = shortfall_dp(p).risk;
    CHECK(r >= 0.0);
    CHECK(r <= p.game.discounted.scale());
  }
}

TEST_CASE("dp agrees with enumeration and is nonincreasing in capital") {
  gen::Rng rng(14);
  for (int i = 0; i < 6; ++i) {
    ShortfallProblem p;
    p.game = gen::game_tree(rng, 1 + i % 3);
    if (i % 2) p.physical_prob = 0.35;
    p.options.wealth_points = 4001;
    p.options.gamma_points = 2;
    p.options.structural_candidates = false;
    const double v = price(p.game).value;
    const double scale = p.game.discounted.scale();
    double last = std::numeric_limits<double>::infinity();
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      p.capital = frac * v;
      const double dp = shortfall_dp(p).risk;
      CHECK_THAT(dp, WithinAbs(shortfall_brute(p).risk, 1e-3 * scale));
      CHECK(dp <= last + 1e-12 * scale);
      last = dp;
    }
    p.capital = 0.0;
    const ShortfallResult r = shortfall_dp(p);
    const double step = r.grid[1] - r.grid[0];
    for (std::size_t j = 0; j < r.grid.size(); ++j) {
      if (j > 0) CHECK(r.root[j] <= r.root[j - 1] + 1e-12 * scale);
      if (r.grid[j] >= v + step) CHECK(r.root[j] == 0.0);
    }
  }
}

TEST_CASE("shortfall inputs are validated") {
  ShortfallProblem p = call_problem(-1.0);
  CHECK_THROWS_AS(shortfall_dp(p), std::invalid_argument);
  p = call_problem(0.0);
  p.options.wealth_points = 1;
  CHECK_THROWS_AS(shortfall_dp(p), std::invalid_argument);
  p = call_problem(0.0);
  p.physical_prob = 1.0;
  CHECK_THROWS_AS(shortfall_dp(p), std::invalid_argument);

  gen::Rng rng(1);
  ShortfallProblem big;
  big.game = gen::game_tree(rng, kShortfallBruteMaxSteps + 1);
  CHECK_THROWS_AS(shortfall_brute(big), std::invalid_argument);
}
