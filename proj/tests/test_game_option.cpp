#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gameopt/game_option.hpp"
#include "gameopt/verification/oracles.hpp"
#include "gameopt/verification/random_instances.hpp"

using namespace gameopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GameTree one_period_call() {
  return build_game(GameOptionInstance{CrrParams{1.0, 0.2, -0.2, 0.0, 1}, payoffs::vanilla_call(1.0, 0.05)});
}

}  // namespace

TEST_CASE("one-period call with a small penalty is cancelled at once") {
  const GameTree g = one_period_call();
  const GamePrice p = price(g);
  CHECK_THAT(p.value, WithinAbs(0.05, 1e-15));
  const StoppingPair t = rational_times(g, p);
  CHECK(t.seller.flag(0));
  const HedgePortfolio h = extract_hedge(g, p, t.seller);
  CHECK_THAT(h.initial_wealth, WithinAbs(0.05, 1e-15));
  CHECK(verify_hedge(g, h, t.seller).worst_shortfall <= 1e-12);
}

TEST_CASE("zero penalty prices at the immediate payoff with a trivial hedge") {
  gen::Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const CrrParams m = gen::crr(rng, 1 + i % 6);
    const GameTree g = build_game(GameOptionInstance{m, payoffs::vanilla_put(m.s0 * 1.05, 0.0)});
    const GamePrice p = price(g);
    CHECK(p.value == g.holder[0]);
    const StoppingPair t = rational_times(g, p);
    CHECK(t.seller.flag(0));
    CHECK(t.buyer.flag(0));
    const HedgePortfolio h = extract_hedge(g, p, t.seller);
    // everything sits in the bond from time 0
    for (NodeIndex i = 0; i < g.tree.size(); ++i) {
      CHECK_THAT(h.wealth[i], WithinRel(g.holder[0] * g.bond[static_cast<std::size_t>(g.tree.level(i))], 1e-12));
    }
    CHECK(verify_hedge(g, h, t.seller).worst_shortfall <= 1e-12);
  }
}

TEST_CASE("huge penalty reproduces the American put and its hedge") {
  for (int n : {4, 9, 14}) {
    const CrrParams m{100.0, 0.08, -0.06, 0.01, n};
    const GameTree g = build_game(GameOptionInstance{m, payoffs::vanilla_put(105.0, 1e6 * 105.0)});
    const GamePrice p = price(g);
    const double american = oracle::american_put(100.0, 105.0, 0.08, -0.06, 0.01, n);
    CHECK_THAT(p.value, WithinAbs(american, 1e-9));

    const StoppingPair t = rational_times(g, p);
    for (NodeIndex i = 0; i < g.tree.size(); ++i) CHECK(t.seller.flag(i) == g.tree.is_terminal(i));

    std::vector<double> y(g.tree.size()), s(g.tree.size());
    for (NodeIndex i = 0; i < g.tree.size(); ++i) {
      y[i] = g.discounted.lower[i];
      s[i] = g.discounted_stock(i);
    }
    const std::vector<double> env = oracle::snell(g.tree, y);
    const std::vector<double> gamma = oracle::snell_hedge(g.tree, env, s);
    const HedgePortfolio h = extract_hedge(g, p, t.seller);
    for (NodeIndex i = 0; i < g.tree.size(); ++i) {
      if (!g.tree.is_terminal(i)) CHECK_THAT(h.stock[i], WithinAbs(gamma[i], 1e-9));
    }
  }
}

TEST_CASE("price lies between the immediate payoffs and rises with the penalty") {
  gen::Rng rng(77);
  for (int i = 0; i < 30; ++i) {
    const CrrParams m = gen::crr(rng, 1 + i % 7);
    double last = -1.0;
    for (double delta : {0.0, 0.5, 2.0, 8.0, 1e3}) {
      const GameTree g = build_game(GameOptionInstance{m, payoffs::vanilla_put(m.s0, delta)});
      const double v = price(g).value;
      CHECK(v >= g.holder[0] - 1e-12);
      CHECK(v <= g.seller[0] + 1e-12);
      CHECK(v >= last - 1e-12);
      last = v;
    }
  }
}

TEST_CASE("extracted hedge superhedges, is self-financing and a martingale") {
  gen::Rng rng(404);
  for (int i = 0; i < 30; ++i) {
    const GameTree g = gen::game_tree(rng, 1 + i % 8);
    const GamePrice p = price(g);
    const StoppingPair t = rational_times(g, p);
    const HedgePortfolio h = extract_hedge(g, p, t.seller);
    const HedgeCheck c = verify_hedge(g, h, t.seller);
    const double scale = g.discounted.scale() * g.bond.back();
    CHECK(c.worst_shortfall <= 1e-10 * scale);
    CHECK(c.worst_self_financing <= 1e-10);
    CHECK(c.worst_martingale <= 1e-10 * scale);

    const HedgePortfolio low = extract_hedge(g, p, t.seller, p.value - 0.01);
    CHECK(verify_hedge(g, low, t.seller).worst_shortfall > 0.0);
  }
}

TEST_CASE("discounted price agrees with the raw Dynkin solver") {
  gen::Rng rng(8);
  const GameTree g = gen::game_tree(rng, 5);
  CHECK(price(g).value == solve_dp(g.discounted)[0]);
}

TEST_CASE("terminal penalty is dropped unless kept") {
  const CrrParams m{10.0, 0.1, -0.1, 0.0, 2};
  const GameTree dropped = build_game(GameOptionInstance{m, payoffs::vanilla_put(10.0, 1.0)});
  for (NodeIndex leaf : dropped.tree.leaves()) CHECK(dropped.seller[leaf] == dropped.holder[leaf]);
  const GameTree kept = build_game(GameOptionInstance{m, payoffs::vanilla_put(10.0, 1.0), 1.0, true});
  for (NodeIndex leaf : kept.tree.leaves()) CHECK(kept.seller[leaf] == kept.holder[leaf] + 1.0);
}

TEST_CASE("tree size is capped") {
  const CrrParams m{10.0, 0.1, -0.1, 0.0, kMaxTreeSteps + 1};
  CHECK_THROWS_AS(build_game(GameOptionInstance{m, payoffs::vanilla_put(10.0, 1.0)}), std::invalid_argument);
}

TEST_CASE("payoff library: hand values") {
  SECTION("Russian below the floor pays the floor") {
    const PayoffFunctional r = payoffs::russian(120.0, 0.1);
    PathState s = r.start(100.0);
    s = r.advance(s, 110.0, 1.0);
    s = r.advance(s, 90.0, 1.0);
    CHECK(r.holder_value(s) == 120.0);
    CHECK_THAT(r.penalty_value(s), WithinRel(9.0, 1e-15));
    s = r.advance(s, 130.0, 1.0);
    CHECK(r.holder_value(s) == 130.0);
  }
  SECTION("barrier touched at step 1 kills both payoffs") {
    const PayoffFunctional b = payoffs::barrier_knockout(80.0, 120.0, payoffs::vanilla_call(90.0, 2.0));
    PathState s = b.start(100.0);
    CHECK(b.holder_value(s) == 10.0);
    s = b.advance(s, 120.0, 1.0);
    CHECK(b.seller_value(s) == 0.0);
    s = b.advance(s, 110.0, 1.0);
    CHECK(b.seller_value(s) == 0.0);
  }
  SECTION("integral call on a constant path is a left Riemann sum") {
    const PayoffFunctional ic = payoffs::integral_call([](double x) { return x; }, 0.0);
    const double dt = 0.25;
    PathState s = ic.start(3.0);
    for (int t = 1; t <= 4; ++t) {
      s = ic.advance(s, 3.0, dt);
      CHECK_THAT(ic.holder_value(s), WithinRel(3.0 * t * dt, 1e-15));
    }
  }
  SECTION("truncated Asian divides by max(t, eps)") {
    const PayoffFunctional a = payoffs::asian_truncated([](double x) { return x; }, 1.0, 0.5);
    PathState s = a.start(4.0);
    s = a.advance(s, 4.0, 0.25);
    CHECK_THAT(a.holder_value(s), WithinRel(4.0 * 0.25 / 0.5 - 1.0, 1e-15));
  }
}

TEST_CASE("payoff library rejects bad parameters") {
  CHECK_THROWS_AS(payoffs::vanilla_put(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(payoffs::vanilla_call(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(payoffs::russian(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(payoffs::barrier_knockout(120.0, 80.0, payoffs::constant(1.0)), std::invalid_argument);
  CHECK_THROWS_AS(payoffs::asian_truncated([](double x) { return x; }, 1.0, 0.0), std::invalid_argument);
}
