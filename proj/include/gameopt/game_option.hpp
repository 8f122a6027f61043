#pragma once

// Game (Israeli) options in a CRR market: pricing by the Dynkin recursion on
// discounted payoffs, rational exercise times and the seller's replicating
// hedge.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynkin.hpp"
#include "market_lattice.hpp"
#include "payoff.hpp"

namespace gameopt {

struct GameOptionInstance {
  CrrParams market;
  PayoffFunctional payoff;
  double step_length = 1.0;        // clock increment per lattice step fed to the payoff
  bool keep_terminal_penalty = false;  // if false, X_N := Y_N
};

/// Everything the pricer and hedger need on the non-recombining tree.
struct GameTree {
  CrrParams market;
  EventTree tree;
  AdaptedProcess stock;            // S_k
  std::vector<double> bond;        // (1+r)^k per level
  AdaptedProcess holder;           // Y_k = F (undiscounted)
  AdaptedProcess seller;           // X_k = F + Delta (undiscounted)
  DynkinInstance discounted;       // (X, Y, Z=Y) divided by the bond

  double discounted_stock(NodeIndex i) const { return stock[i] / bond[static_cast<std::size_t>(tree.level(i))]; }
};

inline constexpr int kMaxTreeSteps = 20;

inline GameTree build_game(const GameOptionInstance& inst) {
  inst.market.validate();
  if (inst.market.steps > kMaxTreeSteps) {
    throw std::invalid_argument("build_game: " + std::to_string(inst.market.steps) +
                                " steps is too many for a non-recombining tree (limit " +
                                std::to_string(kMaxTreeSteps) + ")");
  }
  GameTree g;
  g.market = inst.market;
  g.tree = martingale_tree(inst.market);
  g.stock = stock_process(inst.market, g.tree);
  g.bond.resize(static_cast<std::size_t>(inst.market.steps) + 1);
  for (int k = 0; k <= inst.market.steps; ++k) g.bond[static_cast<std::size_t>(k)] = std::pow(1.0 + inst.market.rate, k);

  const EventTree& tree = g.tree;
  std::vector<PathState> states(tree.size());
  g.holder = AdaptedProcess(tree.size());
  g.seller = AdaptedProcess(tree.size());
  states[0] = inst.payoff.start(g.stock[0]);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (i > 0) states[i] = inst.payoff.advance(states[tree.parent(i)], g.stock[i], inst.step_length);
    const double f = inst.payoff.holder_value(states[i]);
    const double d = inst.payoff.penalty_value(states[i]);
    if (f < 0.0 || d < 0.0) throw std::invalid_argument("build_game: payoff '" + inst.payoff.id + "' went negative");
    g.holder[i] = f;
    g.seller[i] = (tree.is_terminal(i) && !inst.keep_terminal_penalty) ? f : f + d;
  }

  AdaptedProcess x(tree.size()), y(tree.size());
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    const double b = g.bond[static_cast<std::size_t>(tree.level(i))];
    x[i] = g.seller[i] / b;
    y[i] = g.holder[i] / b;
  }
  g.discounted = make_game(tree, std::move(x), std::move(y));
  return g;
}

/// Game tree from explicit per-node undiscounted payoffs.
inline GameTree build_game(const CrrParams& market, const AdaptedProcess& seller, const AdaptedProcess& holder) {
  market.validate();
  GameTree g;
  g.market = market;
  g.tree = martingale_tree(market);
  if (seller.size() != g.tree.size() || holder.size() != g.tree.size()) {
    throw std::invalid_argument("build_game: payoff arrays do not match the tree");
  }
  g.stock = stock_process(market, g.tree);
  g.bond.resize(static_cast<std::size_t>(market.steps) + 1);
  for (int k = 0; k <= market.steps; ++k) g.bond[static_cast<std::size_t>(k)] = std::pow(1.0 + market.rate, k);
  g.holder = holder;
  g.seller = seller;
  AdaptedProcess x(g.tree.size()), y(g.tree.size());
  for (NodeIndex i = 0; i < g.tree.size(); ++i) {
    const double b = g.bond[static_cast<std::size_t>(g.tree.level(i))];
    x[i] = seller[i] / b;
    y[i] = holder[i] / b;
  }
  g.discounted = make_game(g.tree, std::move(x), std::move(y));
  return g;
}

struct GamePrice {
  double value = 0.0;            // V at the root
  AdaptedProcess value_process;  // discounted
};

inline GamePrice price(const GameTree& g) {
  GamePrice out;
  out.value_process = solve_dp(g.discounted);
  out.value = out.value_process[0];
  return out;
}

inline StoppingPair rational_times(const GameTree& g, const GamePrice& p) {
  return epsilon_optimal_times(p.value_process, g.discounted, 0.0);
}

/// Positions decided at each node and held over the next step, plus the
/// wealth at each node before rebalancing.
struct HedgePortfolio {
  double initial_wealth = 0.0;
  std::vector<double> stock;   // gamma: shares held over (k, k+1]
  std::vector<double> bond;    // beta: bond units held over (k, k+1]
  std::vector<double> wealth;  // undiscounted wealth at the node
};

/// Replicates the children's discounted value before sigma; any surplus over
/// the replication cost goes to the bond. From sigma on everything sits in
/// the bond and no trading happens.
inline HedgePortfolio extract_hedge(const GameTree& g, const GamePrice& p, const PureStoppingTime& sigma,
                                    std::optional<double> initial_wealth = std::nullopt) {
  const EventTree& tree = g.tree;
  HedgePortfolio h;
  h.initial_wealth = initial_wealth.value_or(p.value);
  h.stock.assign(tree.size(), 0.0);
  h.bond.assign(tree.size(), 0.0);
  h.wealth.assign(tree.size(), 0.0);
  std::vector<double> disc_wealth(tree.size(), 0.0);
  disc_wealth[0] = h.initial_wealth;

  for (NodeIndex i = 0; i < tree.size(); ++i) {
    const int k = tree.level(i);
    const double b = g.bond[static_cast<std::size_t>(k)];
    h.wealth[i] = disc_wealth[i] * b;
    if (tree.is_terminal(i)) continue;
    double gamma = 0.0;
    if (!sigma.stopped_by(tree, i)) {
      const double su = g.discounted_stock(tree.up(i));
      const double sd = g.discounted_stock(tree.down(i));
      if (su == sd) throw std::runtime_error("extract_hedge: degenerate branch");
      gamma = (p.value_process[tree.up(i)] - p.value_process[tree.down(i)]) / (su - sd);
    }
    h.stock[i] = gamma;
    h.bond[i] = (h.wealth[i] - gamma * g.stock[i]) / b;
    const double s0 = g.discounted_stock(i);
    disc_wealth[tree.up(i)] = disc_wealth[i] + gamma * (g.discounted_stock(tree.up(i)) - s0);
    disc_wealth[tree.down(i)] = disc_wealth[i] + gamma * (g.discounted_stock(tree.down(i)) - s0);
  }
  return h;
}

struct HedgeCheck {
  double worst_shortfall = 0.0;        // max over nodes and k of (H(sigma,k) - W_{sigma^k})^+
  double worst_self_financing = 0.0;   // max |beta_k b_k + gamma_k S_k - beta_{k+1} b_k - gamma_{k+1} S_k|
  double worst_martingale = 0.0;       // max |E[W~_{k+1}] - W~_k| before sigma
};

/// Wealth is recomputed from the positions alone, so a portfolio whose
/// stored wealth column is wrong cannot pass.
inline HedgeCheck verify_hedge(const GameTree& g, const HedgePortfolio& h, const PureStoppingTime& sigma) {
  const EventTree& tree = g.tree;
  HedgeCheck c;
  std::vector<double> w(tree.size(), 0.0);
  w[0] = h.initial_wealth;
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    const double b = g.bond[static_cast<std::size_t>(tree.level(i))];
    if (i > 0) {
      const NodeIndex par = tree.parent(i);
      w[i] = h.bond[par] * b + h.stock[par] * g.stock[i];
    }
    if (!tree.is_terminal(i)) {
      const double after = h.bond[i] * b + h.stock[i] * g.stock[i];
      c.worst_self_financing = std::max(c.worst_self_financing, std::abs(after - w[i]) / std::max(1.0, std::abs(w[i])));
    }
  }
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i) || sigma.stopped_by(tree, i)) continue;
    const int k = tree.level(i);
    const double p = tree.prob_up(i);
    const double bk = g.bond[static_cast<std::size_t>(k)];
    const double bn = g.bond[static_cast<std::size_t>(k + 1)];
    const double e = p * w[tree.up(i)] / bn + (1.0 - p) * w[tree.down(i)] / bn;
    c.worst_martingale = std::max(c.worst_martingale, std::abs(e - w[i] / bk));
  }
  // H(sigma, k) = X_sigma if sigma < k, Y_k otherwise, compared with W_{sigma ^ k}.
  for (NodeIndex leaf : tree.leaves()) {
    const auto path = tree.path_to(leaf);
    const int s = sigma.time_on(tree, leaf);
    for (int k = 0; k <= tree.depth(); ++k) {
      const double obligation = s < k ? g.seller[path[static_cast<std::size_t>(s)]] : g.holder[path[static_cast<std::size_t>(k)]];
      const double wealth = w[path[static_cast<std::size_t>(std::min(s, k))]];
      c.worst_shortfall = std::max(c.worst_shortfall, obligation - wealth);
    }
  }
  c.worst_shortfall = std::max(0.0, c.worst_shortfall);
  return c;
}

}  // namespace gameopt
