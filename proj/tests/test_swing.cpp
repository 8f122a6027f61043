#include <catch_amalgamated.hpp>

#include <vector>

#include "gameopt/game_option.hpp"
#include "gameopt/swing.hpp"
#include "gameopt/verification/random_instances.hpp"

using namespace gameopt;
using Catch::Matchers::WithinAbs;

namespace {

// The one-period call (s0 = 1, b = 0.2, a = -0.2, r = 0, K = 1, penalty 0.05)
// repeated for every claim.
SwingSpec call_spec(int claims, int steps = 1) {
  SwingSpec s;
  s.market = CrrParams{1.0, 0.2, -0.2, 0.0, steps};
  s.claims = claims;
  const GameTree g = build_game(GameOptionInstance{s.market, payoffs::vanilla_call(1.0, 0.05)});
  for (int i = 0; i < claims; ++i) {
    s.upper.push_back(g.seller);
    s.lower.push_back(g.holder);
  }
  return s;
}

SwingSpec constant_spec(int claims, int steps, double c) {
  SwingSpec s;
  s.market = CrrParams{1.0, 0.2, -0.2, 0.0, steps};
  s.claims = claims;
  const std::size_t n = EventTree(steps, 0.5).size();
  for (int i = 0; i < claims; ++i) {
    s.upper.emplace_back(n, c);
    s.lower.emplace_back(n, c);
  }
  return s;
}

}  // namespace

TEST_CASE("one claim is the single game option") {
  gen::Rng rng(91);
  for (int i = 0; i < 20; ++i) {
    const SwingSpec spec = gen::swing_spec(rng, 1 + i % 6, 1);
    const SwingLayers layers = solve_swing(spec);
    const GameTree g = build_game(spec.market, spec.upper[0], spec.lower[0]);
    CHECK_THAT(layers.value, WithinAbs(price(g).value, 1e-12 * layers.scale));
  }
}

TEST_CASE("constant claims are worth L times the constant") {
  for (int claims : {1, 2, 3}) {
    const SwingLayers layers = solve_swing(constant_spec(claims, 2, 1.5));
    CHECK_THAT(layers.value, WithinAbs(1.5 * claims, 1e-14));
  }
}

TEST_CASE("constant claims settle as early as the spacing allows") {
  const SwingLayers layers = solve_swing(constant_spec(2, 3, 1.0));
  const SwingTranscript tr = play(layers, optimal_seller(layers), optimal_buyer(layers));
  for (std::size_t l = 0; l < tr.sigma.size(); ++l) {
    CHECK(std::min(tr.sigma[l][0], tr.tau[l][0]) == 0);
    CHECK(std::min(tr.sigma[l][1], tr.tau[l][1]) == 1);
  }
  const SwingHedgeRun run = swing_hedge(layers, optimal_seller(layers), optimal_buyer(layers));
  for (const auto& w : run.wealth) CHECK_THAT(w.back(), WithinAbs(0.0, 1e-14));
}

TEST_CASE("duplicated call: layered value is the exhaustive min-max") {
  const SwingLayers layers = solve_swing(call_spec(2));
  const SwingSaddleReport rep = verify_swing_saddle(layers);
  CHECK(rep.worst_violation <= 1e-12);
  CHECK_THAT(rep.value, WithinAbs(layers.value, 1e-14));
  CHECK_THAT(rep.buyer_best, WithinAbs(layers.value, 1e-14));
  CHECK_THAT(rep.seller_best, WithinAbs(layers.value, 1e-14));
  CHECK(rep.min_wealth >= -1e-14);
}

TEST_CASE("a buyer exercising everything at once does no better") {
  const SwingLayers layers = solve_swing(call_spec(2, 3));
  const SwingStrategy eager = [](int, const SwingHistory& h, NodeIndex) { return swing_earliest(h, 3); };
  const double base = play(layers, optimal_seller(layers), optimal_buyer(layers)).value;
  CHECK(play(layers, optimal_seller(layers), eager).value <= base + 1e-12);
}

TEST_CASE("huge penalties push every cancellation to the horizon") {
  SwingSpec spec = call_spec(2, 3);
  for (auto& x : spec.upper) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 1e6;
  }
  const SwingLayers layers = solve_swing(spec);
  const SwingStrategy seller = optimal_seller(layers);
  for (NodeIndex leaf : layers.tree.leaves()) {
    CHECK(seller(1, {}, leaf) == 3);
    CHECK(seller(2, SwingHistory{{1}, {0}}, leaf) == 3);
  }
}

TEST_CASE("layer values rise with the number of claims left") {
  // Identical claims only: with different payoffs per claim a small early
  // claim can sit below a large late one.
  gen::Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    SwingSpec spec = gen::swing_spec(rng, 1 + i % 4, 3);
    for (int c = 1; c < 3; ++c) {
      spec.upper[static_cast<std::size_t>(c)] = spec.upper[0];
      spec.lower[static_cast<std::size_t>(c)] = spec.lower[0];
    }
    const SwingLayers layers = solve_swing(spec);
    for (int k = 2; k <= 3; ++k) {
      for (NodeIndex n = 0; n < layers.tree.size(); ++n) {
        CHECK(layers.layer_value(k)[n] >= layers.layer_value(k - 1)[n] - 1e-12 * layers.scale);
      }
    }
  }
}

TEST_CASE("saddle and hedge on random two-claim games") {
  gen::Rng rng(23);
  for (int i = 0; i < 8; ++i) {
    const SwingLayers layers = solve_swing(gen::swing_spec(rng, 1 + i % 4, 1 + i % 2));
    const SwingSaddleReport rep = verify_swing_saddle(layers);
    CHECK(rep.worst_violation <= 1e-10 * layers.scale);
    CHECK(rep.min_wealth >= -1e-9 * layers.scale);
  }
}

TEST_CASE("swing inputs are validated") {
  SwingSpec none = call_spec(1);
  none.claims = 0;
  none.upper.clear();
  none.lower.clear();
  CHECK_THROWS_AS(solve_swing(none), std::invalid_argument);
  SwingSpec flipped = call_spec(1);
  flipped.upper[0][0] = -1.0;
  CHECK_THROWS_AS(solve_swing(flipped), std::invalid_argument);
  SwingSpec missing = call_spec(2);
  missing.upper.pop_back();
  CHECK_THROWS_AS(solve_swing(missing), std::invalid_argument);
  CHECK_THROWS_AS(verify_swing_saddle(solve_swing(constant_spec(3, 2, 1.0))), std::invalid_argument);
  CHECK_THROWS_AS(verify_swing_saddle(solve_swing(constant_spec(1, 5, 1.0))), std::invalid_argument);
}
