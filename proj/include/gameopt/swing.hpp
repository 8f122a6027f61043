#pragma once

// Swing game options: L sequential claims on one CRR tree, consecutive
// claims at least one step apart (several may settle at the horizon).
//
// Everything is computed in discounted units (payoffs and stock divided by
// the bond), so with zero interest the numbers are the undiscounted ones.
// Layer k holds the game with k claims left: layer 1 is the last claim,
// layer L the first. Claim i (1-based) therefore uses layer L - i + 1.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dynkin.hpp"
#include "market_lattice.hpp"

namespace gameopt {

struct SwingSpec {
  CrrParams market;
  int claims = 1;                     // L
  std::vector<AdaptedProcess> upper;  // X_i, undiscounted, i = 0..L-1
  std::vector<AdaptedProcess> lower;  // Y_i

  void validate(const EventTree& tree) const {
    if (claims < 1) throw std::invalid_argument("SwingSpec: need at least one claim");
    if (market.steps < 1) throw std::invalid_argument("SwingSpec: need at least one step");
    if (static_cast<int>(upper.size()) != claims || static_cast<int>(lower.size()) != claims) {
      throw std::invalid_argument("SwingSpec: one payoff pair per claim expected");
    }
    for (int i = 0; i < claims; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (upper[iu].size() != tree.size() || lower[iu].size() != tree.size()) {
        throw std::invalid_argument("SwingSpec: payoff arrays must have one value per node");
      }
      for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!(lower[iu][n] >= 0.0) || !(upper[iu][n] >= lower[iu][n]) || !std::isfinite(upper[iu][n])) {
          throw std::invalid_argument("SwingSpec: need 0 <= Y <= X < inf for claim " + std::to_string(i + 1) +
                                      " at node " + std::to_string(n));
        }
      }
    }
  }
};

struct SwingLayers {
  int claims = 1;
  EventTree tree;
  AdaptedProcess stock;                 // discounted
  std::vector<AdaptedProcess> x_claim;  // discounted X_i, i = 0..L-1
  std::vector<AdaptedProcess> y_claim;
  std::vector<AdaptedProcess> X, Y, V;  // layer k stored at k-1
  double value = 0.0;
  double scale = 1.0;

  const AdaptedProcess& layer_value(int k) const { return V[static_cast<std::size_t>(k - 1)]; }
  /// Layer used by claim i (1-based).
  int layer_of_claim(int i) const { return claims - i + 1; }
};

inline SwingLayers solve_swing(const SwingSpec& spec) {
  spec.market.validate();
  SwingLayers s;
  s.claims = spec.claims;
  s.tree = martingale_tree(spec.market);
  spec.validate(s.tree);
  const EventTree& tree = s.tree;
  const int n = tree.depth();
  const AdaptedProcess raw = stock_process(spec.market, tree);
  std::vector<double> bond(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) bond[static_cast<std::size_t>(k)] = std::pow(1.0 + spec.market.rate, k);
  auto disc = [&](const AdaptedProcess& a) {
    AdaptedProcess out(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i) out[i] = a[i] / bond[static_cast<std::size_t>(tree.level(i))];
    return out;
  };
  s.stock = disc(raw);
  for (int i = 0; i < spec.claims; ++i) {
    s.x_claim.push_back(disc(spec.upper[static_cast<std::size_t>(i)]));
    s.y_claim.push_back(disc(spec.lower[static_cast<std::size_t>(i)]));
    s.scale = std::max({s.scale, s.x_claim.back().max_abs(), s.y_claim.back().max_abs()});
  }

  for (int k = 1; k <= spec.claims; ++k) {
    const auto claim = static_cast<std::size_t>(spec.claims - k);
    AdaptedProcess x = s.x_claim[claim], y = s.y_claim[claim];
    if (k > 1) {
      // Continuation bonus E(V^{(k-1)}_{(n+1) ^ N} | F_n).
      const AdaptedProcess& prev = s.V.back();
      for (NodeIndex i = 0; i < tree.size(); ++i) {
        const double bonus = tree.is_terminal(i)
                                 ? prev[i]
                                 : tree.prob_up(i) * prev[tree.up(i)] + (1.0 - tree.prob_up(i)) * prev[tree.down(i)];
        x[i] += bonus;
        y[i] += bonus;
      }
    }
    // At the horizon only Y can be paid: the buyer exercises by N at the latest.
    AdaptedProcess xt = x;
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      if (tree.is_terminal(i)) xt[i] = y[i];
    }
    const AdaptedProcess v = solve_dp(make_game(tree, xt, y));
    s.X.push_back(std::move(x));
    s.Y.push_back(std::move(y));
    s.V.push_back(v);
  }
  s.value = s.V.back()[0];
  return s;
}

/// Payoff history of settled claims: settlement times a_j and cancel bits d_j.
struct SwingHistory {
  std::vector<int> times;
  std::vector<int> cancels;
};

/// Earliest time claim number history.size()+1 may settle.
inline int swing_earliest(const SwingHistory& h, int horizon) {
  return h.times.empty() ? 0 : std::min(horizon, h.times.back() + 1);
}

/// A stopping strategy: for claim i (1-based) and the history so far, the
/// stop time along the path ending at `leaf`. Implementations must return an
/// adapted time no earlier than swing_earliest(history).
using SwingStrategy = std::function<int(int claim, const SwingHistory& history, NodeIndex leaf)>;

namespace detail {

inline int first_hit(const SwingLayers& s, const AdaptedProcess& target, int layer, int from, NodeIndex leaf) {
  const auto path = s.tree.path_to(leaf);
  const AdaptedProcess& v = s.layer_value(layer);
  const double slack = kHitSlack * s.scale;
  for (int k = from; k < s.tree.depth(); ++k) {
    const NodeIndex node = path[static_cast<std::size_t>(k)];
    if (std::abs(target[node] - v[node]) <= slack) return k;
  }
  return s.tree.depth();
}

}  // namespace detail

/// s*_1 = N ^ first k with X^{(L)} = V^{(L)}; s*_i = N ^ first k > a_{i-1}
/// with X^{(L-i+1)} = V^{(L-i+1)}.
inline SwingStrategy optimal_seller(const SwingLayers& s) {
  return [&s](int claim, const SwingHistory& h, NodeIndex leaf) {
    const int layer = s.layer_of_claim(claim);
    const int from = h.times.empty() ? 0 : h.times.back() + 1;
    return detail::first_hit(s, s.X[static_cast<std::size_t>(layer - 1)], layer, from, leaf);
  };
}

inline SwingStrategy optimal_buyer(const SwingLayers& s) {
  return [&s](int claim, const SwingHistory& h, NodeIndex leaf) {
    const int layer = s.layer_of_claim(claim);
    const int from = h.times.empty() ? 0 : h.times.back() + 1;
    return detail::first_hit(s, s.Y[static_cast<std::size_t>(layer - 1)], layer, from, leaf);
  };
}

/// Per-leaf record of one play of the game.
struct SwingTranscript {
  std::vector<std::vector<int>> sigma;  // [leaf][claim]
  std::vector<std::vector<int>> tau;
  std::vector<double> payoff;           // discounted sum of claim payments per leaf
  double value = 0.0;                   // G(s, b)
};

inline SwingTranscript play(const SwingLayers& s, const SwingStrategy& seller, const SwingStrategy& buyer) {
  const EventTree& tree = s.tree;
  const int n = tree.depth();
  SwingTranscript tr;
  for (NodeIndex leaf : tree.leaves()) {
    const auto path = tree.path_to(leaf);
    SwingHistory h;
    std::vector<int> sig, tau;
    double total = 0.0;
    for (int i = 1; i <= s.claims; ++i) {
      const int lo = swing_earliest(h, n);
      const int si = std::clamp(seller(i, h, leaf), lo, n);
      const int ti = std::clamp(buyer(i, h, leaf), lo, n);
      sig.push_back(si);
      tau.push_back(ti);
      const auto ci = static_cast<std::size_t>(i - 1);
      total += si < ti ? s.x_claim[ci][path[static_cast<std::size_t>(si)]]
                       : s.y_claim[ci][path[static_cast<std::size_t>(ti)]];
      h.times.push_back(std::min(si, ti));
      h.cancels.push_back(si < ti ? 1 : 0);  // a tie counts as exercise
    }
    tr.sigma.push_back(std::move(sig));
    tr.tau.push_back(std::move(tau));
    tr.payoff.push_back(total);
    tr.value += tree.reach_probability(leaf) * total;
  }
  return tr;
}

/// Number of stocks held over (k, k+1] at `node` when `remaining` claims are
/// still open after the payments at k: replicates V^{(remaining)} one step on.
inline double swing_gamma(const SwingLayers& s, NodeIndex node, int remaining) {
  const EventTree& tree = s.tree;
  if (remaining <= 0 || tree.is_terminal(node)) return 0.0;
  const AdaptedProcess& v = s.layer_value(remaining);
  const NodeIndex u = tree.up(node), d = tree.down(node);
  if (s.stock[u] == s.stock[d]) throw std::runtime_error("swing_gamma: degenerate branch");
  return (v[u] - v[d]) / (s.stock[u] - s.stock[d]);
}

/// Discounted wealth W_0..W_N along one path after the payments at each
/// time, for given per-claim settlement times and cancel bits.
inline std::vector<double> swing_wealth_path(const SwingLayers& s, double initial, const std::vector<NodeIndex>& path,
                                             const std::vector<int>& settle, const std::vector<double>& paid) {
  const int n = s.tree.depth();
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  auto payments_at = [&](int k) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < settle.size(); ++i) {
      if (settle[i] == k) sum += paid[i];
      if (settle[i] <= k) ++count;
    }
    return std::pair<double, int>(sum, count);
  };
  auto [p0, c0] = payments_at(0);
  w[0] = initial - p0;
  int settled = c0;
  for (int k = 1; k <= n; ++k) {
    if (settled >= s.claims) {
      w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k - 1)];
      continue;
    }
    const NodeIndex prev = path[static_cast<std::size_t>(k - 1)];
    const NodeIndex cur = path[static_cast<std::size_t>(k)];
    const double gamma = swing_gamma(s, prev, s.claims - settled);
    auto [pk, ck] = payments_at(k);
    w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k - 1)] + gamma * (s.stock[cur] - s.stock[prev]) - pk;
    settled = ck;
  }
  return w;
}

struct SwingHedgeRun {
  double initial = 0.0;
  double min_wealth = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> wealth;  // [leaf][k]
};

/// Rolls the replicating portfolio against a given pair of strategies.
inline SwingHedgeRun swing_hedge(const SwingLayers& s, const SwingStrategy& seller, const SwingStrategy& buyer,
                                 std::optional<double> initial = std::nullopt) {
  const SwingTranscript tr = play(s, seller, buyer);
  SwingHedgeRun run;
  run.initial = initial.value_or(s.value);
  const auto leaves = s.tree.leaves();
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const auto path = s.tree.path_to(leaves[l]);
    std::vector<int> settle;
    std::vector<double> paid;
    for (int i = 0; i < s.claims; ++i) {
      const int si = tr.sigma[l][static_cast<std::size_t>(i)], ti = tr.tau[l][static_cast<std::size_t>(i)];
      settle.push_back(std::min(si, ti));
      paid.push_back(si < ti ? s.x_claim[static_cast<std::size_t>(i)][path[static_cast<std::size_t>(si)]]
                             : s.y_claim[static_cast<std::size_t>(i)][path[static_cast<std::size_t>(ti)]]);
    }
    auto w = swing_wealth_path(s, run.initial, path, settle, paid);
    for (double x : w) run.min_wealth = std::min(run.min_wealth, x);
    run.wealth.push_back(std::move(w));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Exhaustive checks at desk scale (N <= 4, L <= 2).
//
// A buyer strategy is b_1 plus, for every history h = (a_1, d_1), a stopping
// time in Gamma_{m(h)}. The events {history = h} are disjoint, so the best
// b_2 can be picked history by history; the enumeration covers every b_1 and,
// for each history, every member of Gamma_{m(h)}.

inline constexpr int kSwingMaxSteps = 4;
inline constexpr int kSwingMaxClaims = 2;

/// All stopping times with values in {m, ..., N} as per-leaf times.
inline std::vector<LeafTimes> enumerate_stopping_times_from(int depth, int m) {
  const std::vector<LeafTimes> sub = enumerate_stopping_times(depth - m, depth - m);
  const std::size_t blocks = std::size_t{1} << m;
  const std::size_t width = sub.front().size();
  std::vector<LeafTimes> out;
  std::vector<std::size_t> choice(blocks, 0);
  while (true) {
    LeafTimes lt(blocks * width);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t j = 0; j < width; ++j) lt[b * width + j] = static_cast<std::uint8_t>(sub[choice[b]][j] + m);
    }
    out.push_back(std::move(lt));
    std::size_t b = 0;
    while (b < blocks && ++choice[b] == sub.size()) choice[b++] = 0;
    if (b == blocks) break;
  }
  return out;
}

struct SwingSaddleReport {
  double value = 0.0;            // G(s*, b*)
  double buyer_best = 0.0;       // max_b G(s*, b)
  double seller_best = 0.0;      // min_s G(s, b*)
  double worst_violation = 0.0;  // breach of G(s*,b) <= G(s*,b*) <= G(s,b*)
  double min_wealth = 0.0;       // hedge wealth against every buyer strategy
  std::size_t first_claim_strategies = 0;
};

namespace detail {

struct SwingOracle {
  const SwingLayers& s;
  int n;
  std::vector<NodeIndex> leaves;
  std::vector<std::vector<NodeIndex>> paths;
  std::vector<double> prob;
  std::vector<std::vector<LeafTimes>> from;  // from[m] = Gamma_m

  explicit SwingOracle(const SwingLayers& layers) : s(layers), n(layers.tree.depth()) {
    if (n > kSwingMaxSteps || s.claims > kSwingMaxClaims) {
      throw std::invalid_argument("swing oracle: limited to N <= " + std::to_string(kSwingMaxSteps) +
                                  " and L <= " + std::to_string(kSwingMaxClaims));
    }
    leaves = s.tree.leaves();
    for (NodeIndex l : leaves) {
      paths.push_back(s.tree.path_to(l));
      prob.push_back(s.tree.reach_probability(l));
    }
    for (int m = 0; m <= n; ++m) from.push_back(enumerate_stopping_times_from(n, m));
  }

  double pay(int claim, int si, int ti, std::size_t l) const {
    const auto c = static_cast<std::size_t>(claim - 1);
    return si < ti ? s.x_claim[c][paths[l][static_cast<std::size_t>(si)]]
                   : s.y_claim[c][paths[l][static_cast<std::size_t>(ti)]];
  }
};

}  // namespace detail

inline SwingSaddleReport verify_swing_saddle(const SwingLayers& s) {
  detail::SwingOracle o(s);
  const int n = o.n;
  const std::size_t nl = o.leaves.size();
  const SwingStrategy ss = optimal_seller(s), bs = optimal_buyer(s);
  SwingSaddleReport rep;
  rep.value = play(s, ss, bs).value;
  rep.first_claim_strategies = o.from[0].size();

  // Optimal times per leaf: claim 1, and claim 2 for each previous settlement a.
  std::vector<int> s1(nl), b1(nl);
  std::vector<std::vector<int>> s2(static_cast<std::size_t>(n) + 1, std::vector<int>(nl)),
      b2(static_cast<std::size_t>(n) + 1, std::vector<int>(nl));
  for (std::size_t l = 0; l < nl; ++l) {
    s1[l] = ss(1, {}, o.leaves[l]);
    b1[l] = bs(1, {}, o.leaves[l]);
    for (int a = 0; a <= n && s.claims > 1; ++a) {
      SwingHistory h{{a}, {0}};
      s2[static_cast<std::size_t>(a)][l] = std::max(std::min(n, a + 1), ss(2, h, o.leaves[l]));
      b2[static_cast<std::size_t>(a)][l] = std::max(std::min(n, a + 1), bs(2, h, o.leaves[l]));
    }
  }

  // deviator_is_buyer: the buyer varies b (maximizing) against s*; otherwise
  // the seller varies s (minimizing) against b*.
  auto best_response = [&](bool deviator_is_buyer) {
    std::map<std::tuple<int, int, std::vector<bool>>, double> cache;
    double best = deviator_is_buyer ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (const LeafTimes& dev : o.from[0]) {
      double total = 0.0;
      std::map<std::pair<int, int>, std::vector<bool>> groups;
      for (std::size_t l = 0; l < nl; ++l) {
        const int si = deviator_is_buyer ? s1[l] : dev[l];
        const int ti = deviator_is_buyer ? dev[l] : b1[l];
        total += o.prob[l] * o.pay(1, si, ti, l);
        if (s.claims > 1) {
          auto& mask = groups[{std::min(si, ti), si < ti ? 1 : 0}];
          mask.resize(nl, false);
          mask[l] = true;
        }
      }
      for (const auto& [h, mask] : groups) {
        const auto key = std::make_tuple(h.first, h.second, mask);
        auto it = cache.find(key);
        if (it == cache.end()) {
          const int a = h.first;
          const int m = std::min(n, a + 1);
          double inner = deviator_is_buyer ? -std::numeric_limits<double>::infinity()
                                           : std::numeric_limits<double>::infinity();
          for (const LeafTimes& alt : o.from[static_cast<std::size_t>(m)]) {
            double e = 0.0;
            for (std::size_t l = 0; l < nl; ++l) {
              if (!mask[l]) continue;
              const int si = deviator_is_buyer ? s2[static_cast<std::size_t>(a)][l] : alt[l];
              const int ti = deviator_is_buyer ? alt[l] : b2[static_cast<std::size_t>(a)][l];
              e += o.prob[l] * o.pay(2, si, ti, l);
            }
            inner = deviator_is_buyer ? std::max(inner, e) : std::min(inner, e);
          }
          it = cache.emplace(key, inner).first;
        }
        total += it->second;
      }
      best = deviator_is_buyer ? std::max(best, total) : std::min(best, total);
    }
    return best;
  };
  rep.buyer_best = best_response(true);
  rep.seller_best = best_response(false);
  rep.worst_violation = std::max({0.0, rep.buyer_best - rep.value, rep.value - rep.seller_best});

  // Hedge wealth against every buyer strategy.
  {
    std::map<std::tuple<int, int, std::vector<bool>>, double> cache;
    double worst = std::numeric_limits<double>::infinity();
    for (const LeafTimes& dev : o.from[0]) {
      std::map<std::pair<int, int>, std::vector<bool>> groups;
      for (std::size_t l = 0; l < nl; ++l) {
        const int si = s1[l], ti = dev[l];
        if (s.claims == 1) {
          const auto w = swing_wealth_path(s, s.value, o.paths[l], {std::min(si, ti)}, {o.pay(1, si, ti, l)});
          worst = std::min(worst, *std::min_element(w.begin(), w.end()));
        } else {
          auto& mask = groups[{std::min(si, ti), si < ti ? 1 : 0}];
          mask.resize(nl, false);
          mask[l] = true;
        }
      }
      for (const auto& [h, mask] : groups) {
        const auto key = std::make_tuple(h.first, h.second, mask);
        if (cache.count(key)) continue;
        const int a = h.first, d = h.second;
        const int m = std::min(n, a + 1);
        double inner = std::numeric_limits<double>::infinity();
        for (const LeafTimes& alt : o.from[static_cast<std::size_t>(m)]) {
          for (std::size_t l = 0; l < nl; ++l) {
            if (!mask[l]) continue;
            // On this history claim 1 settled at a: cancelled by the seller
            // (d = 1, sigma_1 = a) or exercised by the buyer (tau_1 = a).
            const double p1 = d ? s.x_claim[0][o.paths[l][static_cast<std::size_t>(a)]]
                                : s.y_claim[0][o.paths[l][static_cast<std::size_t>(a)]];
            const int si = s2[static_cast<std::size_t>(a)][l], ti = alt[l];
            const auto w = swing_wealth_path(s, s.value, o.paths[l], {a, std::min(si, ti)}, {p1, o.pay(2, si, ti, l)});
            inner = std::min(inner, *std::min_element(w.begin(), w.end()));
          }
        }
        cache.emplace(key, inner);
        worst = std::min(worst, inner);
      }
    }
    rep.min_wealth = worst;
  }
  return rep;
}

}  // namespace gameopt
