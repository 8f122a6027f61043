#include <catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gameopt/game_option.hpp"
#include "gameopt/txcost.hpp"
#include "gameopt/verification/random_instances.hpp"

using namespace gameopt;
using Catch::Matchers::WithinAbs;

namespace {

PayoffVec zero_payoff(const EventTree& tree) {
  return PayoffVec{AdaptedProcess(tree.size()), AdaptedProcess(tree.size()), AdaptedProcess(tree.size()),
                   AdaptedProcess(tree.size())};
}

// One period. Root 9/11, up 12/13, down 7/8. One share delivered at exercise,
// cancellation at the root adds `pen` cash.
struct NineEleven {
  FrictionMarket m;
  PayoffVec p;
};

NineEleven nine_eleven(double pen) {
  EventTree tree(1, 0.5);
  NineEleven c{FrictionMarket{tree, AdaptedProcess(std::vector<double>{11.0, 13.0, 8.0}),
                              AdaptedProcess(std::vector<double>{9.0, 12.0, 7.0})},
               zero_payoff(tree)};
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    c.p.y_shares[i] = 1.0;
    c.p.x_shares[i] = 1.0;
  }
  c.p.x_cash[0] = pen;
  return c;
}

FrictionMarket flat_market(int depth, double bid, double ask) {
  EventTree tree(depth, 0.5);
  return FrictionMarket{tree, AdaptedProcess(tree.size(), ask), AdaptedProcess(tree.size(), bid)};
}

}  // namespace

TEST_CASE("liquidation value") {
  const FrictionMarket m = flat_market(1, 9.0, 11.0);
  CHECK(liquidation(m, 0, 3.0, 0.0) == 3.0);
  CHECK(liquidation(m, 0, 0.0, 1.0) == 9.0);
  CHECK(liquidation(m, 0, 0.0, -1.0) == -11.0);
}

TEST_CASE("market and payoff validation") {
  FrictionMarket m = flat_market(1, 9.0, 11.0);
  m.bid[1] = 12.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.bid[1] = 0.0;
  m.ask[1] = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  const FrictionMarket ok = flat_market(1, 9.0, 11.0);
  PayoffVec p = zero_payoff(ok.tree);
  p.x_cash[0] = -0.5;  // negative penalty
  CHECK_THROWS_AS(p.validate(ok), std::invalid_argument);
  p.x_cash[0] = 0.0;
  p.x_cash[1] = 1.0;  // X != Y at the horizon
  CHECK_THROWS_AS(p.validate(ok), std::invalid_argument);
  // Cancelling with 11 cash instead of one share: X - Y = (11, -1) liquidates to 0.
  PayoffVec q = zero_payoff(ok.tree);
  q.y_shares[0] = 1.0;
  q.x_cash[0] = 11.0;
  CHECK_NOTHROW(q.validate(ok));
  q.x_cash[0] = 9.0;
  CHECK_THROWS_AS(q.validate(ok), std::invalid_argument);
}

TEST_CASE("payoff functions at a node") {
  const FrictionMarket m = flat_market(1, 9.0, 11.0);
  PayoffVec zero = zero_payoff(m.tree);
  const NodePayoffFunctions z = payoff_functions(m, zero, 0);
  const PiecewiseLinear h = h_kernel(9.0, 11.0);
  CHECK(approx_equal(z.qa, h, 0.0));
  CHECK(approx_equal(z.ra, h, 0.0));
  CHECK(approx_equal(z.qb, h, 0.0));
  CHECK(approx_equal(z.rb, h, 0.0));

  PayoffVec cash = zero_payoff(m.tree);
  cash.x_cash[0] = 4.0;
  cash.y_cash[0] = 3.0;
  CHECK(payoff_functions(m, cash, 0).qa(0.0) == 4.0);

  // X = (1, 1): the seller holding nothing must buy the share at the ask; the
  // buyer's side is the liquidation value 1 + 9.
  PayoffVec share = zero_payoff(m.tree);
  share.x_cash[0] = 1.0;
  share.x_shares[0] = 1.0;
  share.y_cash[0] = 1.0;
  share.y_shares[0] = 1.0;
  const NodePayoffFunctions f = payoff_functions(m, share, 0);
  CHECK(f.qa(0.0) == 12.0);
  CHECK(-f.qb(0.0) == 10.0);
  CHECK(-f.qb(0.0) == liquidation(m, 0, 1.0, 1.0));
  CHECK(f.qa(1.0) == 1.0);
}

TEST_CASE("ordering of the four payoff functions on random packages") {
  gen::Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const FrictionMarket m = gen::friction_market(rng, 3);
    const PayoffVec p = gen::payoff_vec(rng, m);
    for (NodeIndex i = 0; i < m.tree.size(); ++i) {
      const NodePayoffFunctions f = payoff_functions(m, p, i);
      for (int j = -20; j <= 20; ++j) {
        const double y = j / 8.0;
        const double tol = 1e-9 * p.scale(m);
        CHECK(f.qa(y) >= f.ra(y) - tol);
        CHECK(f.qb(y) <= f.rb(y) + tol);
      }
    }
  }
}

TEST_CASE("one-period share delivery at 9/11") {
  const NineEleven c = nine_eleven(0.5);
  const TxSideTables sa = seller_price(c.m, c.p);
  const TxSideTables sb = buyer_price(c.m, c.p);
  // Children: owe one share at 12/13 or 7/8; max over children, then the root
  // spread caps the slopes at -11 / -9.
  CHECK(sa.worst[0](0.0) == 13.0);
  CHECK(sa.reach[0](0.0) == 11.0);
  CHECK(sa.price == 11.0);
  CHECK(sb.price == 9.0);

  const TxSuperhedge hs = seller_superhedge(c.m, c.p, sa);
  CHECK_FALSE(hs.stop.flag(0));
  CHECK(hs.portfolio.cash[1] == 0.0);
  CHECK(hs.portfolio.shares[1] == 1.0);
  const SuperhedgeCheck cs = verify_superhedge(true, c.m, c.p, hs.stop, hs.portfolio);
  CHECK(cs.worst_violation == 0.0);
  CHECK(cs.worst_self_financing == 0.0);

  const TxSuperhedge hb = buyer_superhedge(c.m, c.p, sb);
  CHECK(hb.stop.flag(0));  // take the share now and sell it at 9
  const SuperhedgeCheck cb = verify_superhedge(false, c.m, c.p, hb.stop, hb.portfolio);
  CHECK(cb.worst_violation == 0.0);
}

TEST_CASE("constant cash settles immediately") {
  const FrictionMarket m = flat_market(3, 9.0, 11.0);
  PayoffVec p = zero_payoff(m.tree);
  for (NodeIndex i = 0; i < m.tree.size(); ++i) p.x_cash[i] = p.y_cash[i] = 2.5;
  const TxSideTables sa = seller_price(m, p);
  const TxSideTables sb = buyer_price(m, p);
  CHECK(sa.price == 2.5);
  CHECK(sb.price == 2.5);
  CHECK(seller_superhedge(m, p, sa).stop.flag(0));
  CHECK(buyer_superhedge(m, p, sb).stop.flag(0));
}

TEST_CASE("zero spread reproduces the frictionless game price") {
  SECTION("one-period call") {
    CrrParams crr;
    crr.s0 = 1.0;
    crr.rate = 0.0;
    crr.up = 0.1;
    crr.down = -0.1;
    crr.steps = 1;
    const EventTree tree = martingale_tree(crr);
    AdaptedProcess pay(tree.size());
    const GameTree g0 = build_game(crr, pay, pay);
    AdaptedProcess call(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i) call[i] = std::max(0.0, g0.stock[i] - 1.0);
    AdaptedProcess seller = call;
    seller[0] = call[0] + 0.5;
    const GameTree g = build_game(crr, seller, call);
    FrictionMarket m{tree, AdaptedProcess(tree.size()), AdaptedProcess(tree.size())};
    PayoffVec p = zero_payoff(tree);
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      m.bid[i] = m.ask[i] = g.discounted_stock(i);
      p.x_cash[i] = g.discounted.upper[i];
      p.y_cash[i] = g.discounted.lower[i];
    }
    CHECK_THAT(seller_price(m, p).price, WithinAbs(0.05, 1e-12));
    CHECK_THAT(buyer_price(m, p).price, WithinAbs(0.05, 1e-12));
  }
  SECTION("random instances") {
    gen::Rng rng(13);
    for (int k = 0; k < 25; ++k) {
      const gen::ZeroSpreadCase z = gen::zero_spread_case(rng, 1 + k % 6);
      const double v = price(z.game).value;
      const double s = std::max(1.0, std::abs(v));
      CHECK_THAT(seller_price(z.market, z.payoff).price, WithinAbs(v, 1e-10 * s));
      CHECK_THAT(buyer_price(z.market, z.payoff).price, WithinAbs(v, 1e-10 * s));
    }
  }
}

TEST_CASE("seller price dominates buyer price and both hedges verify") {
  gen::Rng rng(21);
  for (int k = 0; k < 30; ++k) {
    const FrictionMarket m = gen::friction_market(rng, 1 + k % 5);
    const PayoffVec p = gen::payoff_vec(rng, m);
    const double scale = p.scale(m);
    const TxSideTables sa = seller_price(m, p);
    const TxSideTables sb = buyer_price(m, p);
    CHECK(sa.price >= sb.price - 1e-9 * scale);

    const TxSuperhedge hs = seller_superhedge(m, p, sa);
    const SuperhedgeCheck cs = verify_superhedge(true, m, p, hs.stop, hs.portfolio);
    CHECK(cs.worst_violation <= 1e-9 * scale);
    CHECK(cs.worst_self_financing <= 1e-9 * scale);

    const TxSuperhedge hb = buyer_superhedge(m, p, sb);
    const SuperhedgeCheck cb = verify_superhedge(false, m, p, hb.stop, hb.portfolio);
    CHECK(cb.worst_violation <= 1e-9 * scale);
    CHECK(cb.worst_self_financing <= 1e-9 * scale);
  }
}

TEST_CASE("less capital than the seller price breaks the hedge") {
  gen::Rng rng(22);
  for (int k = 0; k < 15; ++k) {
    const FrictionMarket m = gen::friction_market(rng, 1 + k % 4);
    const PayoffVec p = gen::payoff_vec(rng, m);
    const TxSideTables sa = seller_price(m, p);
    const double short_cash = sa.price - 1e-3 * p.scale(m);
    try {
      const TxSuperhedge h = seller_superhedge(m, p, sa, short_cash);
      const SuperhedgeCheck c = verify_superhedge(true, m, p, h.stop, h.portfolio);
      CHECK(c.worst_violation > 0.0);
    } catch (const std::logic_error&) {
      SUCCEED("no successor portfolio exists below the price");
    }
  }
}

TEST_CASE("prices shift with cash added to every package") {
  gen::Rng rng(23);
  for (int k = 0; k < 15; ++k) {
    const FrictionMarket m = gen::friction_market(rng, 1 + k % 4);
    PayoffVec p = gen::payoff_vec(rng, m);
    const double va = seller_price(m, p).price, vb = buyer_price(m, p).price;
    for (NodeIndex i = 0; i < m.tree.size(); ++i) {
      p.x_cash[i] += 3.25;
      p.y_cash[i] += 3.25;
    }
    const double tol = 1e-9 * p.scale(m);
    CHECK_THAT(seller_price(m, p).price, WithinAbs(va + 3.25, tol));
    CHECK_THAT(buyer_price(m, p).price, WithinAbs(vb + 3.25, tol));
  }
}

TEST_CASE("randomized stopping times") {
  const EventTree tree(2, 0.5);
  AdaptedProcess half(tree.size(), 0.5);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i)) half[i] = 1.0;
  }
  const RandomizedStoppingTime chi = p_to_chi(tree, half);
  CHECK(chi.weight[0] == 0.5);
  CHECK(chi.weight[tree.up(0)] == 0.25);
  CHECK(chi.weight[tree.down(0)] == 0.25);
  for (NodeIndex l : tree.leaves()) CHECK(chi.weight[l] == 0.25);
  const AdaptedProcess after = chi.tail_after(tree);
  CHECK(after[0] == 0.5);
  for (NodeIndex l : tree.leaves()) CHECK(after[l] == 0.0);

  AdaptedProcess at0(tree.size(), 0.0);
  at0[0] = 1.0;
  const RandomizedStoppingTime d0 = p_to_chi(tree, at0);
  AdaptedProcess z(tree.size());
  for (NodeIndex i = 0; i < tree.size(); ++i) z[i] = 1.0 + static_cast<double>(i);
  for (double v : chi_value(tree, z, d0)) CHECK(v == 1.0);
  for (double v : chi_value(tree, AdaptedProcess(tree.size(), 4.0), chi)) CHECK(v == 4.0);

  AdaptedProcess none(tree.size(), 0.0);
  CHECK_THROWS_AS(p_to_chi(tree, none), std::invalid_argument);
  AdaptedProcess bad = half;
  bad[1] = 1.5;
  CHECK_THROWS_AS(p_to_chi(tree, bad), std::invalid_argument);

  // Pure time 1 against chi: H = 1/2 Y_0 + 1/4 Y_1 + 1/4 X_1 per path.
  const FrictionMarket m = flat_market(2, 9.0, 11.0);
  PayoffVec p = zero_payoff(tree);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    p.y_cash[i] = static_cast<double>(i);
    p.x_cash[i] = tree.is_terminal(i) ? p.y_cash[i] : p.y_cash[i] + 8.0;
    p.y_shares[i] = p.x_shares[i] = 1.0;
  }
  const RandomizedStoppingTime one = chi_of(tree, PureStoppingTime::at_time(tree, 1));
  const auto leaves = tree.leaves();
  const auto pv = pair_value(tree, p, one, chi);
  REQUIRE(pv.size() == leaves.size());
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const NodeIndex n1 = tree.path_to(leaves[l])[1];
    CHECK(pv[l].first == 0.5 * p.y_cash[0] + 0.25 * p.y_cash[n1] + 0.25 * p.x_cash[n1]);
    CHECK(pv[l].second == 1.0);
  }
}

TEST_CASE("approximate martingale check") {
  gen::Rng rng(31);
  const gen::ZeroSpreadCase z = gen::zero_spread_case(rng, 3);
  const EventTree& tree = z.market.tree;
  ApproxMartingale pm{std::vector<double>(tree.size()), z.market.bid};
  for (NodeIndex i = 0; i < tree.size(); ++i) pm.prob_up[i] = tree.prob_up(i);
  const RandomizedStoppingTime at_t = chi_of(tree, PureStoppingTime::at_time(tree, tree.depth()));
  const ApproxMartingaleCheck ok = check_approx_martingale(z.market, at_t, pm, 1e-12);
  CHECK(ok.ok);
  CHECK(ok.worst_slack == 0.0);

  ApproxMartingale outside = pm;
  outside.price[1] *= 1.01;
  CHECK_FALSE(check_approx_martingale(z.market, at_t, outside).ok);

  ApproxMartingale skewed = pm;
  for (double& q : skewed.prob_up) q = 0.999;
  const ApproxMartingaleCheck bad = check_approx_martingale(z.market, at_t, skewed);
  CHECK_FALSE(bad.ok);
  CHECK(bad.worst_slack > 0.0);
}

TEST_CASE("dual objective stays below the seller price") {
  gen::Rng rng(37);
  for (int k = 0; k < 10; ++k) {
    const gen::ZeroSpreadCase z = gen::zero_spread_case(rng, 1 + k % 4);
    const EventTree& tree = z.market.tree;
    const TxSideTables sa = seller_price(z.market, z.payoff);
    const TxSuperhedge hs = seller_superhedge(z.market, z.payoff, sa);
    ApproxMartingale pm{std::vector<double>(tree.size()), z.market.bid};
    for (NodeIndex i = 0; i < tree.size(); ++i) pm.prob_up[i] = tree.prob_up(i);
    for (int j = 0; j < 20; ++j) {
      AdaptedProcess pr(tree.size());
      for (NodeIndex i = 0; i < tree.size(); ++i) pr[i] = tree.is_terminal(i) ? 1.0 : gen::uniform(rng, 0.0, 1.0);
      const RandomizedStoppingTime chi = p_to_chi(tree, pr);
      REQUIRE(check_approx_martingale(z.market, chi, pm, 1e-9).ok);
      const double scale = z.payoff.scale(z.market);
      CHECK(dual_objective(z.market, z.payoff, hs.stop, true, chi, pm) <= sa.price + 1e-9 * scale);
    }
  }
}
