#pragma once

// Seeded generators for the property and oracle checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "../dynkin.hpp"
#include "../game_option.hpp"
#include "../market_lattice.hpp"
#include "../polyhedral.hpp"
#include "../swing.hpp"
#include "../txcost.hpp"

namespace gameopt::gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Dynkin game with Z = Y, random per-node probabilities and payoffs in [0, 10].
/// About a third of the nodes carry no penalty.
inline DynkinInstance dynkin_instance(Rng& rng, int depth) {
  const std::size_t size = (std::size_t{2} << depth) - 1;
  std::vector<double> probs(size);
  for (double& p : probs) p = uniform(rng, 0.05, 0.95);
  EventTree tree(depth, std::move(probs));
  AdaptedProcess x(tree.size()), y(tree.size());
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    y[i] = uniform(rng, 0.0, 10.0);
    const double pen = uniform(rng, 0.0, 1.0) < 0.33 ? 0.0 : uniform(rng, 0.0, 5.0);
    x[i] = tree.is_terminal(i) ? y[i] : y[i] + pen;
  }
  return make_game(std::move(tree), std::move(x), std::move(y));
}

/// CRR market with -1 < a < r < b.
inline CrrParams crr(Rng& rng, int steps) {
  CrrParams c;
  c.s0 = uniform(rng, 50.0, 150.0);
  c.rate = uniform(rng, 0.0, 0.05);
  c.up = c.rate + uniform(rng, 0.02, 0.3);
  c.down = c.rate - uniform(rng, 0.02, 0.3);
  c.steps = steps;
  return c;
}

/// Adapted holder payoff Y in [0, 20] and seller payoff X = Y + penalty.
struct PayoffPair {
  AdaptedProcess seller, holder;
};

inline PayoffPair payoff_pair(Rng& rng, const EventTree& tree, double max_penalty = 5.0) {
  PayoffPair p{AdaptedProcess(tree.size()), AdaptedProcess(tree.size())};
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    p.holder[i] = uniform(rng, 0.0, 20.0);
    p.seller[i] = tree.is_terminal(i) ? p.holder[i] : p.holder[i] + uniform(rng, 0.0, max_penalty);
  }
  return p;
}

inline GameTree game_tree(Rng& rng, int steps, double max_penalty = 5.0) {
  const CrrParams market = crr(rng, steps);
  const EventTree tree = martingale_tree(market);
  const PayoffPair p = payoff_pair(rng, tree, max_penalty);
  return build_game(market, p.seller, p.holder);
}

inline SwingSpec swing_spec(Rng& rng, int steps, int claims) {
  SwingSpec s;
  s.market = crr(rng, steps);
  s.claims = claims;
  const EventTree tree = martingale_tree(s.market);
  for (int i = 0; i < claims; ++i) {
    const PayoffPair p = payoff_pair(rng, tree);
    s.upper.push_back(p.seller);
    s.lower.push_back(p.holder);
  }
  return s;
}

/// Bid/ask around a multiplicative mid process with mid_dn < mid < mid_up,
/// which keeps the recursion away from the bottom element.
inline FrictionMarket friction_market(Rng& rng, int depth, double max_spread = 0.05) {
  EventTree tree(depth, 0.5);
  FrictionMarket m{tree, AdaptedProcess(tree.size()), AdaptedProcess(tree.size())};
  std::vector<double> mid(tree.size());
  mid[0] = uniform(rng, 50.0, 150.0);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (!tree.is_terminal(i)) {
      mid[tree.up(i)] = mid[i] * (1.0 + uniform(rng, 0.02, 0.2));
      mid[tree.down(i)] = mid[i] * (1.0 - uniform(rng, 0.02, 0.2));
    }
    const double half = 0.5 * mid[i] * uniform(rng, 0.0, max_spread);
    m.bid[i] = mid[i] - half;
    m.ask[i] = mid[i] + half;
  }
  return m;
}

/// Packages: Y random cash and shares; X = Y shifted so that the liquidation
/// value of X - Y equals a random nonnegative penalty; X = Y at the horizon.
inline PayoffVec payoff_vec(Rng& rng, const FrictionMarket& m) {
  const EventTree& tree = m.tree;
  PayoffVec p{AdaptedProcess(tree.size()), AdaptedProcess(tree.size()), AdaptedProcess(tree.size()),
              AdaptedProcess(tree.size())};
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    p.y_cash[i] = uniform(rng, -50.0, 50.0);
    p.y_shares[i] = uniform(rng, -1.0, 1.0);
    if (tree.is_terminal(i)) {
      p.x_cash[i] = p.y_cash[i];
      p.x_shares[i] = p.y_shares[i];
      continue;
    }
    p.x_shares[i] = uniform(rng, -1.0, 1.0);
    const double pen = uniform(rng, 0.0, 1.0) < 0.25 ? 0.0 : uniform(rng, 0.0, 10.0);
    p.x_cash[i] = p.y_cash[i] - liquidation(m, i, 0.0, p.x_shares[i] - p.y_shares[i]) + pen;
  }
  return p;
}

/// Zero spread at the discounted CRR stock, cash-only discounted payoffs: the
/// frictionless game in disguise.
struct ZeroSpreadCase {
  GameTree game;
  FrictionMarket market;
  PayoffVec payoff;
};

inline ZeroSpreadCase zero_spread_case(Rng& rng, int steps) {
  ZeroSpreadCase z{game_tree(rng, steps), {}, {}};
  const EventTree& tree = z.game.tree;
  z.market = FrictionMarket{tree, AdaptedProcess(tree.size()), AdaptedProcess(tree.size())};
  z.payoff = PayoffVec{AdaptedProcess(tree.size()), AdaptedProcess(tree.size()), AdaptedProcess(tree.size()),
                       AdaptedProcess(tree.size())};
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    z.market.bid[i] = z.market.ask[i] = z.game.discounted_stock(i);
    z.payoff.x_cash[i] = z.game.discounted.upper[i];
    z.payoff.y_cash[i] = z.game.discounted.lower[i];
  }
  return z;
}

/// Piecewise-linear function with knots and values on the 1/8 lattice in
/// [-4, 4] and tail slopes inside [-c, -d] (so gr_[d,c] is finite).
/// All quantities are dyadic, so lattice evaluations are exact.
inline PiecewiseLinear lattice_function(Rng& rng, double d, double c) {
  const int count = uniform_int(rng, 1, 6);
  std::vector<int> ticks;
  while (static_cast<int>(ticks.size()) < count) {
    const int t = uniform_int(rng, -32, 32);
    if (std::find(ticks.begin(), ticks.end(), t) == ticks.end()) ticks.push_back(t);
  }
  std::sort(ticks.begin(), ticks.end());
  std::vector<double> xs, vs;
  for (int t : ticks) {
    xs.push_back(t / 8.0);
    vs.push_back(uniform_int(rng, -40, 40) / 8.0);
  }
  auto tail = [&]() {
    const int steps = static_cast<int>(std::round((c - d) * 8.0));
    return -d - uniform_int(rng, 0, std::max(0, steps)) / 8.0;
  };
  const double left = tail(), right = tail();
  return PiecewiseLinear::from_knots(xs, vs, left, right);
}

}  // namespace gameopt::gen
