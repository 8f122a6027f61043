#pragma once

// Seller's shortfall risk R(x) = inf_{pi, sigma} sup_tau E (H(sigma,tau) - W_{sigma^tau})^+
// in discounted units, with self-financing wealth that never goes negative.
//
// The DP below is our own formalization: at each node the seller first
// decides cancel-or-trade (and how many shares), then the buyer decides
// exercise-or-wait. It is checked against literal enumeration on tiny trees.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynkin.hpp"
#include "game_option.hpp"

namespace gameopt {

struct ShortfallOptions {
  int wealth_points = 401;
  double wealth_max = 0.0;       // 0: twice the largest discounted payoff
  int gamma_points = 101;        // uniform points over the no-bankruptcy interval (>= 2)
  bool structural_candidates = true;  // also try the share counts that land a child exactly on its price
};

struct ShortfallProblem {
  GameTree game;
  double capital = 0.0;                // x, currency at time 0
  std::optional<double> physical_prob; // up probability for the expectation; default the martingale one
  ShortfallOptions options;

  double prob_up(NodeIndex i) const { return physical_prob ? *physical_prob : game.tree.prob_up(i); }
  void validate() const {
    if (options.wealth_points < 2) throw std::invalid_argument("shortfall: wealth_points must be >= 2");
    if (options.gamma_points < 2) throw std::invalid_argument("shortfall: gamma_points must be >= 2");
    if (!(capital >= 0.0)) throw std::invalid_argument("shortfall: capital must be >= 0");
    if (physical_prob && !(*physical_prob > 0.0 && *physical_prob < 1.0)) {
      throw std::invalid_argument("shortfall: physical_prob must lie in (0, 1)");
    }
  }
};

/// Share counts tried at a node holding discounted wealth w.
/// `value` is the discounted game price process (for the replication and
/// structural candidates).
inline std::vector<double> shortfall_gamma_candidates(const GameTree& g, const AdaptedProcess& value, NodeIndex node,
                                                      double w, const ShortfallOptions& opt) {
  const EventTree& tree = g.tree;
  const double s = g.discounted_stock(node);
  const double su = g.discounted_stock(tree.up(node)), sd = g.discounted_stock(tree.down(node));
  const double up_gain = su - s, down_loss = s - sd;  // both > 0 when a < r < b
  const double lo = -w / up_gain, hi = w / down_loss;
  std::vector<double> c;
  c.reserve(static_cast<std::size_t>(opt.gamma_points) + 4);
  for (int i = 0; i < opt.gamma_points; ++i) {
    c.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(opt.gamma_points - 1));
  }
  c.push_back(0.0);
  c.push_back(std::clamp((value[tree.up(node)] - value[tree.down(node)]) / (su - sd), lo, hi));
  if (opt.structural_candidates) {
    c.push_back(std::clamp((value[tree.up(node)] - w) / up_gain, lo, hi));
    c.push_back(std::clamp((w - value[tree.down(node)]) / down_loss, lo, hi));
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

struct ShortfallResult {
  double risk = 0.0;            // R(x)
  double price = 0.0;           // fair price V (discounted = currency at 0)
  std::vector<double> grid;     // wealth grid
  std::vector<double> root;     // J_0(root, grid)
  std::size_t clamped = 0;      // next-step wealth that left the grid (top) and was clamped
  double scale = 1.0;
};

inline ShortfallResult shortfall_dp(const ShortfallProblem& prob) {
  prob.validate();
  const GameTree& g = prob.game;
  const EventTree& tree = g.tree;
  const DynkinInstance& inst = g.discounted;
  const AdaptedProcess value = solve_dp(inst);
  ShortfallResult out;
  out.price = value[0];
  out.scale = std::max(1.0, inst.scale());
  const double wmax = prob.options.wealth_max > 0.0 ? prob.options.wealth_max : 2.0 * std::max(inst.scale(), 1e-300);
  const int m = prob.options.wealth_points;
  const double step = wmax / (m - 1);
  out.grid.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) out.grid[static_cast<std::size_t>(j)] = step * j;

  std::vector<std::vector<double>> J(tree.size());
  const double slack = kHitSlack * out.scale;

  auto lookup = [&](NodeIndex node, double w) {
    if (w >= value[node] - slack) return 0.0;  // the perfect hedge is affordable
    const auto& row = J[node];
    if (w >= wmax) {
      ++out.clamped;
      return row.back();
    }
    const double pos = std::max(0.0, w) / step;
    const auto j = static_cast<std::size_t>(std::min<double>(std::floor(pos), m - 2));
    const double t = pos - static_cast<double>(j);
    return row[j] * (1.0 - t) + row[j + 1] * t;
  };

  for (NodeIndex node = tree.size(); node-- > 0;) {
    auto& row = J[node];
    row.resize(static_cast<std::size_t>(m));
    const double x = inst.upper[node], y = inst.lower[node];
    for (int j = 0; j < m; ++j) {
      const double w = out.grid[static_cast<std::size_t>(j)];
      if (tree.is_terminal(node)) {
        row[static_cast<std::size_t>(j)] = std::max(0.0, y - w);
        continue;
      }
      if (w >= value[node] - slack) {
        row[static_cast<std::size_t>(j)] = 0.0;
        continue;
      }
      const double s = g.discounted_stock(node);
      const double du = g.discounted_stock(tree.up(node)) - s, dd = g.discounted_stock(tree.down(node)) - s;
      const double p = prob.prob_up(node);
      double best = std::numeric_limits<double>::infinity();
      for (double gamma : shortfall_gamma_candidates(g, value, node, w, prob.options)) {
        const double e = p * lookup(tree.up(node), w + gamma * du) + (1.0 - p) * lookup(tree.down(node), w + gamma * dd);
        best = std::min(best, e);
      }
      row[static_cast<std::size_t>(j)] = std::min(std::max(0.0, x - w), std::max(std::max(0.0, y - w), best));
    }
  }
  out.root = J[0];
  out.risk = lookup(0, prob.capital);
  if (prob.capital >= wmax) out.risk = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Literal enumeration: every pure sigma, every gridded portfolio (share count
// per trading node from the same candidate rule, at the exact wealth), every
// pure tau.

inline constexpr int kShortfallBruteMaxSteps = 3;

struct ShortfallBrute {
  double risk = 0.0;
  std::size_t strategies = 0;  // (sigma, portfolio) pairs examined
};

inline ShortfallBrute shortfall_brute(const ShortfallProblem& prob) {
  prob.validate();
  const GameTree& g = prob.game;
  const EventTree& tree = g.tree;
  const int n = tree.depth();
  if (n > kShortfallBruteMaxSteps) {
    throw std::invalid_argument("shortfall_brute: N = " + std::to_string(n) + " exceeds the enumeration bound " +
                                std::to_string(kShortfallBruteMaxSteps));
  }
  const DynkinInstance& inst = g.discounted;
  const AdaptedProcess value = solve_dp(inst);
  const auto times = enumerate_stopping_times(n, kShortfallBruteMaxSteps);
  const auto leaves = tree.leaves();
  std::vector<std::vector<NodeIndex>> paths;
  std::vector<double> lp;  // leaf probability under the expectation measure
  for (NodeIndex l : leaves) {
    paths.push_back(tree.path_to(l));
    double pr = 1.0;
    const auto& path = paths.back();
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const double p = prob.prob_up(path[k]);
      pr *= path[k + 1] == tree.up(path[k]) ? p : 1.0 - p;
    }
    lp.push_back(pr);
  }

  ShortfallBrute out;
  out.risk = std::numeric_limits<double>::infinity();
  std::vector<double> wealth(tree.size(), 0.0);
  std::vector<std::vector<double>> shortfall(leaves.size(), std::vector<double>(static_cast<std::size_t>(n) + 1));

  for (const LeafTimes& sigma : times) {
    // Trading nodes: strictly before sigma on some path through them.
    std::vector<char> trading(tree.size(), 0);
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      for (int k = 0; k < sigma[l]; ++k) trading[paths[l][static_cast<std::size_t>(k)]] = 1;
    }
    std::vector<NodeIndex> order;
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      if (trading[i]) order.push_back(i);  // parents precede children in depth-first order
    }

    auto evaluate = [&]() {
      ++out.strategies;
      for (std::size_t l = 0; l < leaves.size(); ++l) {
        const int s = sigma[l];
        for (int t = 0; t <= n; ++t) {
          const NodeIndex settle = paths[l][static_cast<std::size_t>(std::min(s, t))];
          const double h = s < t ? inst.upper[paths[l][static_cast<std::size_t>(s)]]
                                 : inst.lower[paths[l][static_cast<std::size_t>(t)]];
          shortfall[l][static_cast<std::size_t>(t)] = std::max(0.0, h - wealth[settle]);
        }
      }
      double worst = 0.0;
      for (const LeafTimes& tau : times) {
        double e = 0.0;
        for (std::size_t l = 0; l < leaves.size(); ++l) e += lp[l] * shortfall[l][tau[l]];
        worst = std::max(worst, e);
      }
      out.risk = std::min(out.risk, worst);
    };

    std::function<void(std::size_t)> descend = [&](std::size_t idx) {
      if (idx == order.size()) {
        evaluate();
        return;
      }
      const NodeIndex node = order[idx];
      const double w = wealth[node];
      const double s = g.discounted_stock(node);
      for (double gamma : shortfall_gamma_candidates(g, value, node, w, prob.options)) {
        wealth[tree.up(node)] = w + gamma * (g.discounted_stock(tree.up(node)) - s);
        wealth[tree.down(node)] = w + gamma * (g.discounted_stock(tree.down(node)) - s);
        descend(idx + 1);
      }
    };
    wealth[0] = prob.capital;
    descend(0);
  }
  return out;
}

}  // namespace gameopt
