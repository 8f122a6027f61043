#pragma once

// Finite-horizon Dynkin games on binary event trees: backward induction,
// first-hitting epsilon-optimal stopping times, and brute-force oracles that
// enumerate every pure stopping time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "market_lattice.hpp"

namespace gameopt {

/// Relative slack used for equality tests on DP output.
inline constexpr double kHitSlack = 1e-9;

/// Payoff triple: the seller cancelling first pays X, the buyer exercising
/// first receives Y, simultaneous stopping pays Z.
struct DynkinInstance {
  EventTree tree;
  AdaptedProcess upper;  // X
  AdaptedProcess lower;  // Y
  AdaptedProcess tie;    // Z

  int horizon() const { return tree.depth(); }

  double scale() const {
    double s = std::max({upper.max_abs(), lower.max_abs(), tie.max_abs()});
    return s > 0.0 ? s : 1.0;
  }

  void validate() const {
    const std::size_t n = tree.size();
    if (upper.size() != n || lower.size() != n || tie.size() != n) {
      throw std::invalid_argument("DynkinInstance: payoff arrays must have one value per node");
    }
    const double slack = 1e-12 * scale();
    for (NodeIndex i = 0; i < n; ++i) {
      if (!std::isfinite(upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(tie[i])) {
        throw std::invalid_argument("DynkinInstance: non-finite payoff at node " + std::to_string(i));
      }
      if (lower[i] > tie[i] + slack || tie[i] > upper[i] + slack) {
        throw std::invalid_argument("DynkinInstance: need Y <= Z <= X at node " + std::to_string(i));
      }
      if (tree.is_terminal(i) && (upper[i] - lower[i] > slack)) {
        throw std::invalid_argument("DynkinInstance: X and Y differ at terminal node " + std::to_string(i));
      }
    }
  }
};

/// Instance with Z = Y, the game-option convention.
inline DynkinInstance make_game(EventTree tree, AdaptedProcess upper, AdaptedProcess lower) {
  DynkinInstance inst{std::move(tree), std::move(upper), lower, lower};
  return inst;
}

/// V_N = X_N, V_t = min(X_t, max(Y_t, E[V_{t+1}])).
inline AdaptedProcess solve_dp(const DynkinInstance& inst) {
  inst.validate();
  const EventTree& tree = inst.tree;
  AdaptedProcess v(tree.size());
  for (NodeIndex i = tree.size(); i-- > 0;) {
    if (tree.is_terminal(i)) {
      v[i] = inst.upper[i];
      continue;
    }
    const double p = tree.prob_up(i);
    const double cont = p * v[tree.up(i)] + (1.0 - p) * v[tree.down(i)];
    v[i] = std::min(inst.upper[i], std::max(inst.lower[i], cont));
  }
  return v;
}

/// A stopping time on the tree: the first flagged node along each path.
/// Terminal nodes are always flagged so every path stops by the horizon.
class PureStoppingTime {
public:
  PureStoppingTime() = default;
  explicit PureStoppingTime(const EventTree& tree) : flags_(tree.size(), 0) {
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      if (tree.is_terminal(i)) flags_[i] = 1;
    }
  }

  static PureStoppingTime at_time(const EventTree& tree, int t) {
    PureStoppingTime tau(tree);
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      if (tree.level(i) == t) tau.flags_[i] = 1;
    }
    return tau;
  }

  void set(NodeIndex node, bool stop) { flags_[node] = stop ? 1 : 0; }
  bool flag(NodeIndex node) const { return flags_[node] != 0; }
  std::size_t size() const { return flags_.size(); }

  /// True when the path through `node` has already stopped at or before it.
  bool stopped_by(const EventTree& tree, NodeIndex node) const {
    for (NodeIndex cur = node;; cur = tree.parent(cur)) {
      if (flags_[cur]) return true;
      if (cur == 0) return false;
    }
  }

  /// True when the path stops exactly at `node`.
  bool stops_at(const EventTree& tree, NodeIndex node) const {
    if (!flags_[node]) return false;
    return node == 0 || !stopped_by(tree, tree.parent(node));
  }

  /// Stop time along the path ending at `leaf`.
  int time_on(const EventTree& tree, NodeIndex leaf) const {
    for (NodeIndex node : tree.path_to(leaf)) {
      if (flags_[node]) return tree.level(node);
    }
    return tree.depth();
  }

  /// Stop time per leaf, leaves in depth-first order.
  std::vector<std::uint8_t> leaf_times(const EventTree& tree) const {
    std::vector<std::uint8_t> out;
    out.reserve(std::size_t{1} << tree.depth());
    std::vector<int> first(tree.size(), -1);
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      int inherited = (i == 0) ? -1 : first[tree.parent(i)];
      first[i] = inherited >= 0 ? inherited : (flags_[i] ? tree.level(i) : -1);
      if (tree.is_terminal(i)) out.push_back(static_cast<std::uint8_t>(first[i]));
    }
    return out;
  }

  /// Node at which the path through `leaf` stops.
  NodeIndex stop_node(const EventTree& tree, NodeIndex leaf) const {
    for (NodeIndex node : tree.path_to(leaf)) {
      if (flags_[node]) return node;
    }
    return leaf;
  }

private:
  std::vector<std::uint8_t> flags_;
};

struct StoppingPair {
  PureStoppingTime seller;  // sigma
  PureStoppingTime buyer;   // tau
};

/// sigma_eps = first t with V_t >= X_t - eps, tau_eps = first t with V_t <= Y_t + eps.
inline StoppingPair epsilon_optimal_times(const AdaptedProcess& value, const DynkinInstance& inst,
                                          double eps = 0.0) {
  const EventTree& tree = inst.tree;
  const double slack = kHitSlack * inst.scale();
  StoppingPair out{PureStoppingTime(tree), PureStoppingTime(tree)};
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i)) continue;
    out.seller.set(i, value[i] >= inst.upper[i] - eps - slack);
    out.buyer.set(i, value[i] <= inst.lower[i] + eps + slack);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive oracles.

/// Stop time per leaf; leaves in depth-first order.
using LeafTimes = std::vector<std::uint8_t>;

inline constexpr int kDefaultEnumerationBound = 4;

/// All pure stopping times on a depth-N tree. Their count obeys
/// s(0) = 1, s(N) = 1 + s(N-1)^2, so N = 4 gives 677 and N = 5 gives 458330.
inline std::vector<LeafTimes> enumerate_stopping_times(int depth, int bound = kDefaultEnumerationBound) {
  if (depth > bound) {
    throw std::invalid_argument("enumerate_stopping_times: depth " + std::to_string(depth) +
                                " exceeds enumeration bound " + std::to_string(bound));
  }
  std::vector<LeafTimes> cur{LeafTimes{0}};
  for (int d = 1; d <= depth; ++d) {
    std::vector<LeafTimes> next;
    next.reserve(1 + cur.size() * cur.size());
    const std::size_t half = std::size_t{1} << (d - 1);
    next.emplace_back(2 * half, std::uint8_t{0});
    for (const auto& up : cur) {
      for (const auto& dn : cur) {
        LeafTimes lt(2 * half);
        for (std::size_t j = 0; j < half; ++j) {
          lt[j] = static_cast<std::uint8_t>(up[j] + 1);
          lt[half + j] = static_cast<std::uint8_t>(dn[j] + 1);
        }
        next.push_back(std::move(lt));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Per-leaf table of H(s,t) along the leaf's path plus leaf probabilities.
class PathPayoffTable {
public:
  explicit PathPayoffTable(const DynkinInstance& inst) : n_(inst.horizon()) {
    const EventTree& tree = inst.tree;
    const std::size_t w = static_cast<std::size_t>(n_ + 1);
    for (NodeIndex leaf : tree.leaves()) {
      const auto path = tree.path_to(leaf);
      prob_.push_back(tree.reach_probability(leaf));
      for (std::size_t s = 0; s < w; ++s) {
        for (std::size_t t = 0; t < w; ++t) {
          double h;
          if (s < t) h = inst.upper[path[s]];
          else if (s > t) h = inst.lower[path[t]];
          else h = inst.tie[path[s]];
          table_.push_back(h);
        }
      }
    }
  }

  double expect(const LeafTimes& sigma, const LeafTimes& tau) const {
    const std::size_t w = static_cast<std::size_t>(n_ + 1);
    double acc = 0.0;
    for (std::size_t l = 0; l < prob_.size(); ++l) {
      acc += prob_[l] * table_[l * w * w + sigma[l] * w + tau[l]];
    }
    return acc;
  }

  std::size_t leaves() const { return prob_.size(); }

private:
  int n_;
  std::vector<double> prob_;
  std::vector<double> table_;
};

struct BruteForceValues {
  double upper = 0.0;  // min over sigma of max over tau
  double lower = 0.0;  // max over tau of min over sigma
};

inline BruteForceValues brute_force_values(const DynkinInstance& inst, int bound = kDefaultEnumerationBound) {
  inst.validate();
  const auto times = enumerate_stopping_times(inst.horizon(), bound);
  const PathPayoffTable table(inst);
  const double inf = std::numeric_limits<double>::infinity();

  BruteForceValues out{inf, -inf};
  for (const auto& sigma : times) {
    double worst = -inf;
    for (const auto& tau : times) {
      worst = std::max(worst, table.expect(sigma, tau));
      if (worst >= out.upper) break;  // cannot improve the min
    }
    out.upper = std::min(out.upper, worst);
  }
  for (const auto& tau : times) {
    double best = inf;
    for (const auto& sigma : times) {
      best = std::min(best, table.expect(sigma, tau));
      if (best <= out.lower) break;
    }
    out.lower = std::max(out.lower, best);
  }
  return out;
}

struct SaddleReport {
  double value = 0.0;            // E[H(sigma, tau)]
  double buyer_best = 0.0;       // max over tau' of E[H(sigma, tau')]
  double seller_best = 0.0;      // min over sigma' of E[H(sigma', tau)]
  double worst_violation = 0.0;  // largest breach of the two saddle inequalities
};

/// Checks E[H(s,t')] - eps <= E[H(s,t)] <= E[H(s',t)] + eps over all pure s', t'.
inline SaddleReport verify_saddle(const DynkinInstance& inst, const PureStoppingTime& sigma,
                                  const PureStoppingTime& tau, double eps = 0.0,
                                  int bound = kDefaultEnumerationBound) {
  const auto times = enumerate_stopping_times(inst.horizon(), bound);
  const PathPayoffTable table(inst);
  const LeafTimes s = sigma.leaf_times(inst.tree);
  const LeafTimes t = tau.leaf_times(inst.tree);

  SaddleReport rep;
  rep.value = table.expect(s, t);
  rep.buyer_best = -std::numeric_limits<double>::infinity();
  rep.seller_best = std::numeric_limits<double>::infinity();
  for (const auto& alt : times) {
    rep.buyer_best = std::max(rep.buyer_best, table.expect(s, alt));
    rep.seller_best = std::min(rep.seller_best, table.expect(alt, t));
  }
  rep.worst_violation = std::max({0.0, rep.buyer_best - eps - rep.value, rep.value - rep.seller_best - eps});
  return rep;
}

/// Expected payoff of a pair of pure stopping times, computed path by path.
inline double expected_payoff(const DynkinInstance& inst, const PureStoppingTime& sigma,
                              const PureStoppingTime& tau) {
  const EventTree& tree = inst.tree;
  double acc = 0.0;
  for (NodeIndex leaf : tree.leaves()) {
    const auto path = tree.path_to(leaf);
    const int s = sigma.time_on(tree, leaf);
    const int t = tau.time_on(tree, leaf);
    double h;
    if (s < t) h = inst.upper[path[s]];
    else if (s > t) h = inst.lower[path[t]];
    else h = inst.tie[path[s]];
    acc += tree.reach_probability(leaf) * h;
  }
  return acc;
}

}  // namespace gameopt
