#pragma once

// Finite binary event trees, CRR stock/bond dynamics and the binomial
// discretization of a Black-Scholes market.
//
// Node addressing is depth-first (pre-order). The root has index 0; for a
// node at level d in a tree of depth N its +1 child is index + 1 and its -1
// child is index + 2^(N-d). Every node therefore has a larger index than its
// parent, so a reverse sweep over indices visits children before parents.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gameopt {

using NodeIndex = std::size_t;

/// Sign sequence (+1 / -1) identifying a node by its path from the root.
using SignPath = std::vector<int>;

inline constexpr int kMaxTreeDepth = 24;

class EventTree {
public:
  EventTree() : EventTree(0, 0.5) {}

  EventTree(int depth, double prob_up) : depth_(depth) {
    build_shape();
    prob_up_.assign(size(), prob_up);
    validate_probabilities();
  }

  /// Per-node probability of the +1 child; entries at terminal nodes are ignored.
  EventTree(int depth, std::vector<double> prob_up) : depth_(depth), prob_up_(std::move(prob_up)) {
    build_shape();
    if (prob_up_.size() != size()) {
      throw std::invalid_argument("EventTree: probability vector has " +
                                  std::to_string(prob_up_.size()) + " entries, expected " +
                                  std::to_string(size()));
    }
    validate_probabilities();
  }

  int depth() const { return depth_; }
  std::size_t size() const { return level_.size(); }

  int level(NodeIndex node) const { return level_[node]; }
  bool is_terminal(NodeIndex node) const { return level_[node] == depth_; }

  NodeIndex up(NodeIndex node) const { return node + 1; }
  NodeIndex down(NodeIndex node) const {
    return node + (std::size_t{1} << static_cast<unsigned>(depth_ - level_[node]));
  }
  NodeIndex child(NodeIndex node, int sign) const { return sign > 0 ? up(node) : down(node); }

  /// Parent index; the root is its own parent.
  NodeIndex parent(NodeIndex node) const { return parent_[node]; }

  double prob_up(NodeIndex node) const { return prob_up_[node]; }
  double prob_child(NodeIndex node, int sign) const {
    return sign > 0 ? prob_up_[node] : 1.0 - prob_up_[node];
  }

  /// Number of nodes in a subtree rooted at the given level.
  std::size_t subtree_size(int level) const {
    return (std::size_t{1} << static_cast<unsigned>(depth_ - level + 1)) - 1;
  }

  NodeIndex index_of(std::span<const int> prefix) const {
    if (static_cast<int>(prefix.size()) > depth_) {
      throw std::out_of_range("EventTree::index_of: prefix longer than tree depth");
    }
    NodeIndex node = 0;
    for (int sign : prefix) {
      if (sign != 1 && sign != -1) throw std::invalid_argument("EventTree::index_of: signs must be +1 or -1");
      node = child(node, sign);
    }
    return node;
  }

  SignPath prefix_of(NodeIndex node) const {
    SignPath signs(static_cast<std::size_t>(level_[node]));
    for (NodeIndex cur = node; cur != 0; cur = parent_[cur]) {
      NodeIndex par = parent_[cur];
      signs[static_cast<std::size_t>(level_[par])] = (cur == par + 1) ? 1 : -1;
    }
    return signs;
  }

  /// Sign of the last step taken to reach `node` (0 for the root).
  int last_sign(NodeIndex node) const {
    if (node == 0) return 0;
    return node == parent_[node] + 1 ? 1 : -1;
  }

  /// Nodes from the root down to `node`, inclusive.
  std::vector<NodeIndex> path_to(NodeIndex node) const {
    std::vector<NodeIndex> path(static_cast<std::size_t>(level_[node]) + 1);
    for (NodeIndex cur = node;; cur = parent_[cur]) {
      path[static_cast<std::size_t>(level_[cur])] = cur;
      if (cur == 0) break;
    }
    return path;
  }

  /// Probability of reaching `node` from the root.
  double reach_probability(NodeIndex node) const {
    double prob = 1.0;
    for (NodeIndex cur = node; cur != 0; cur = parent_[cur]) {
      prob *= prob_child(parent_[cur], cur == parent_[cur] + 1 ? 1 : -1);
    }
    return prob;
  }

  /// Terminal nodes in depth-first order.
  std::vector<NodeIndex> leaves() const {
    std::vector<NodeIndex> out;
    out.reserve(std::size_t{1} << static_cast<unsigned>(depth_));
    for (NodeIndex i = 0; i < size(); ++i) {
      if (is_terminal(i)) out.push_back(i);
    }
    return out;
  }

  std::vector<NodeIndex> nodes_at(int level) const {
    std::vector<NodeIndex> out;
    for (NodeIndex i = 0; i < size(); ++i) {
      if (level_[i] == level) out.push_back(i);
    }
    return out;
  }

  const std::vector<double>& probabilities() const { return prob_up_; }

private:
  void build_shape() {
    if (depth_ < 0 || depth_ > kMaxTreeDepth) {
      throw std::invalid_argument("EventTree: depth must lie in [0, " + std::to_string(kMaxTreeDepth) + "]");
    }
    const std::size_t n = (std::size_t{1} << static_cast<unsigned>(depth_ + 1)) - 1;
    level_.assign(n, 0);
    parent_.assign(n, 0);
    for (NodeIndex i = 0; i < n; ++i) {
      if (level_[i] == depth_) continue;
      const NodeIndex u = up(i);
      const NodeIndex d = down(i);
      level_[u] = level_[d] = static_cast<std::uint8_t>(level_[i] + 1);
      parent_[u] = parent_[d] = i;
    }
  }

  void validate_probabilities() const {
    for (NodeIndex i = 0; i < size(); ++i) {
      if (is_terminal(i)) continue;
      const double p = prob_up_[i];
      if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("EventTree: one-step probability must lie in (0,1) at node " +
                                    std::to_string(i));
      }
    }
  }

  int depth_ = 0;
  std::vector<std::uint8_t> level_;
  std::vector<NodeIndex> parent_;
  std::vector<double> prob_up_;
};

/// One value per node of an EventTree, indexed by NodeIndex.
class AdaptedProcess {
public:
  AdaptedProcess() = default;
  explicit AdaptedProcess(std::size_t nodes, double fill = 0.0) : values_(nodes, fill) {}
  explicit AdaptedProcess(std::vector<double> values) : values_(std::move(values)) {}

  static AdaptedProcess from(const EventTree& tree, const std::function<double(NodeIndex)>& fn) {
    AdaptedProcess out(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i) out.values_[i] = fn(i);
    return out;
  }

  double operator[](NodeIndex i) const { return values_[i]; }
  double& operator[](NodeIndex i) { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

private:
  std::vector<double> values_;
};

/// Cox-Ross-Rubinstein market: S_k = s0 * prod(1 + rho_j), rho_j in {up, down},
/// savings account growing at `rate` per step.
struct CrrParams {
  double s0 = 1.0;
  double up = 0.1;     // return on a +1 step
  double down = -0.1;  // return on a -1 step
  double rate = 0.0;   // per-step interest rate
  int steps = 1;

  void validate() const {
    if (!(s0 > 0.0)) throw std::invalid_argument("CrrParams: s0 must be positive");
    if (!(down > -1.0)) throw std::invalid_argument("CrrParams: down return must exceed -1");
    if (!(down < rate && rate < up)) {
      throw std::invalid_argument("CrrParams: need down < rate < up (no-arbitrage strip)");
    }
    if (steps < 0) throw std::invalid_argument("CrrParams: steps must be nonnegative");
  }
};

/// Risk-neutral probability of the up move, (r - a) / (b - a).
inline double martingale_prob(const CrrParams& params) {
  params.validate();
  return (params.rate - params.down) / (params.up - params.down);
}

inline double path_price(const CrrParams& params, std::span<const int> prefix) {
  double price = params.s0;
  for (int sign : prefix) price *= 1.0 + (sign > 0 ? params.up : params.down);
  return price;
}

/// Bond discount factor (1+r)^(-t).
inline double discount(const CrrParams& params, int t) {
  return std::pow(1.0 + params.rate, -static_cast<double>(t));
}

/// Stock price at every node of `tree`.
inline AdaptedProcess stock_process(const CrrParams& params, const EventTree& tree) {
  AdaptedProcess s(tree.size());
  s[0] = params.s0;
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i)) continue;
    s[tree.up(i)] = s[i] * (1.0 + params.up);
    s[tree.down(i)] = s[i] * (1.0 + params.down);
  }
  return s;
}

/// Tree of the given depth carrying the martingale measure of `params`.
inline EventTree martingale_tree(const CrrParams& params) {
  return EventTree(params.steps, martingale_prob(params));
}

/// CRR approximation of a Black-Scholes market with rate r, volatility kappa
/// and maturity T using n steps.
struct BsDiscretization {
  double rate = 0.0;        // continuous rate per year
  double volatility = 0.0;  // per sqrt(year)
  double maturity = 0.0;    // years
  int steps = 0;
  double step_rate = 0.0;    // exp(rT/n) - 1
  double up_return = 0.0;    // exp(rT/n + kappa sqrt(T/n)) - 1
  double down_return = 0.0;  // exp(rT/n - kappa sqrt(T/n)) - 1
  double prob_up = 0.5;      // 1 / (exp(kappa sqrt(T/n)) + 1)

  double step_length() const { return maturity / steps; }
  double log_step() const { return volatility * std::sqrt(maturity / steps); }

  CrrParams crr(double s0) const { return CrrParams{s0, up_return, down_return, step_rate, steps}; }
};

inline BsDiscretization bs_to_crr(double rate, double volatility, double maturity, int steps) {
  if (!(volatility > 0.0)) throw std::invalid_argument("bs_to_crr: volatility must be positive");
  if (!(maturity > 0.0)) throw std::invalid_argument("bs_to_crr: maturity must be positive");
  if (steps <= 0) throw std::invalid_argument("bs_to_crr: steps must be at least 1");
  BsDiscretization d;
  d.rate = rate;
  d.volatility = volatility;
  d.maturity = maturity;
  d.steps = steps;
  const double dt = maturity / steps;
  const double jump = volatility * std::sqrt(dt);
  d.step_rate = std::expm1(rate * dt);
  d.up_return = std::expm1(rate * dt + jump);
  d.down_return = std::expm1(rate * dt - jump);
  d.prob_up = 1.0 / (std::exp(jump) + 1.0);
  return d;
}

}  // namespace gameopt
