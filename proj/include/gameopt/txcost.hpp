#pragma once

// Game options settled in cash and shares under proportional transaction
// costs (bid/ask spread). All prices are discounted, the bond is 1.
//
// Seller side: z_T = r^a_T; going back, zhat = max over children of z,
// w = gr_[bid,ask](zhat), z = min(q^a, max(r^a, w)) and the ask price is
// z_0(0). The buyer side mirrors this with (q^b, r^b) and u = min(r^b,
// max(q^b, v)); the bid price is -u_0(0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dynkin.hpp"
#include "market_lattice.hpp"
#include "polyhedral.hpp"

namespace gameopt {

struct FrictionMarket {
  EventTree tree;
  AdaptedProcess ask;
  AdaptedProcess bid;

  void validate() const {
    if (ask.size() != tree.size() || bid.size() != tree.size()) {
      throw std::invalid_argument("FrictionMarket: price arrays must have one value per node");
    }
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      if (!(bid[i] > 0.0) || !(ask[i] >= bid[i])) {
        throw std::invalid_argument("FrictionMarket: need ask >= bid > 0 at node " + std::to_string(i));
      }
    }
  }
};

/// theta_t(gamma, delta) = gamma + bid * delta^+ - ask * delta^-.
inline double liquidation(const FrictionMarket& m, NodeIndex node, double cash, double shares) {
  return cash + m.bid[node] * std::max(shares, 0.0) - m.ask[node] * std::max(-shares, 0.0);
}

/// Cancellation package X and exercise package Y, each (cash, shares).
struct PayoffVec {
  AdaptedProcess x_cash, x_shares;
  AdaptedProcess y_cash, y_shares;

  void validate(const FrictionMarket& m) const {
    const std::size_t n = m.tree.size();
    if (x_cash.size() != n || x_shares.size() != n || y_cash.size() != n || y_shares.size() != n) {
      throw std::invalid_argument("PayoffVec: arrays must have one value per node");
    }
    const double slack = 1e-12 * scale(m);
    for (NodeIndex i = 0; i < n; ++i) {
      const double pen = liquidation(m, i, x_cash[i] - y_cash[i], x_shares[i] - y_shares[i]);
      if (pen < -slack) throw std::invalid_argument("PayoffVec: negative penalty at node " + std::to_string(i));
      if (m.tree.is_terminal(i) &&
          (std::abs(x_cash[i] - y_cash[i]) > slack || std::abs(x_shares[i] - y_shares[i]) > slack)) {
        throw std::invalid_argument("PayoffVec: X and Y differ at terminal node " + std::to_string(i));
      }
    }
  }

  /// Magnitude used for slacks: the largest package value at the ask.
  double scale(const FrictionMarket& m) const {
    double s = 1.0;
    for (NodeIndex i = 0; i < m.tree.size(); ++i) {
      s = std::max(s, std::abs(x_cash[i]) + m.ask[i] * std::abs(x_shares[i]));
      s = std::max(s, std::abs(y_cash[i]) + m.ask[i] * std::abs(y_shares[i]));
    }
    return s;
  }
};

struct NodePayoffFunctions {
  PiecewiseLinear qa, ra, qb, rb;
};

inline NodePayoffFunctions payoff_functions(const FrictionMarket& m, const PayoffVec& p, NodeIndex node) {
  const double b = m.bid[node], a = m.ask[node];
  auto shifted = [&](double cash, double shift) {
    // cash + h(y - shift)
    return PiecewiseLinear::from_knots({shift}, {cash}, -a, -b);
  };
  NodePayoffFunctions f;
  f.qa = shifted(p.x_cash[node], p.x_shares[node]);
  f.ra = shifted(p.y_cash[node], p.y_shares[node]);
  f.qb = shifted(-p.x_cash[node], -p.x_shares[node]);
  f.rb = shifted(-p.y_cash[node], -p.y_shares[node]);
  return f;
}

/// Per-node functions of one side's recursion.
struct TxSideTables {
  std::vector<PiecewiseLinear> value;  // z (seller) or u (buyer)
  std::vector<PiecewiseLinear> worst;  // zhat / uhat; unused at terminals
  std::vector<PiecewiseLinear> reach;  // w / v; unused at terminals
  double price = 0.0;
};

namespace detail {

inline TxSideTables tx_recursion(const FrictionMarket& m, const PayoffVec& p, bool seller) {
  m.validate();
  p.validate(m);
  const EventTree& tree = m.tree;
  TxSideTables t;
  t.value.resize(tree.size());
  t.worst.resize(tree.size(), PiecewiseLinear::bottom());
  t.reach.resize(tree.size(), PiecewiseLinear::bottom());
  for (NodeIndex i = tree.size(); i-- > 0;) {
    const NodePayoffFunctions f = payoff_functions(m, p, i);
    if (tree.is_terminal(i)) {
      t.value[i] = seller ? f.ra : f.rb;
      continue;
    }
    t.worst[i] = pointwise_max(t.value[tree.up(i)], t.value[tree.down(i)]);
    t.reach[i] = gr_transform(t.worst[i], m.bid[i], m.ask[i]);
    if (seller) t.value[i] = pointwise_min(f.qa, pointwise_max(f.ra, t.reach[i]));
    else t.value[i] = pointwise_min(f.rb, pointwise_max(f.qb, t.reach[i]));
  }
  if (t.value[0].is_bottom()) {
    throw std::domain_error(std::string(seller ? "seller" : "buyer") +
                            " recursion reached -infinity at the root: the spread process admits arbitrage");
  }
  t.price = seller ? t.value[0](0.0) : -t.value[0](0.0);
  return t;
}

}  // namespace detail

inline TxSideTables seller_price(const FrictionMarket& m, const PayoffVec& p) { return detail::tx_recursion(m, p, true); }
inline TxSideTables buyer_price(const FrictionMarket& m, const PayoffVec& p) { return detail::tx_recursion(m, p, false); }

/// Predictable (cash, shares) positions: entry i is the portfolio held at
/// node i, chosen at its parent (the root entry is the initial portfolio).
struct PortfolioProcess {
  std::vector<double> cash;
  std::vector<double> shares;
};

struct TxSuperhedge {
  PureStoppingTime stop;  // sigma for the seller, tau for the buyer
  PortfolioProcess portfolio;
};

namespace detail {

/// Successor of (alpha, beta) inside epi(zhat) reachable by one self-financing
/// trade at prices (bid, ask). Minimizes h(beta - b') + zhat(b') over the
/// kinks b' in {beta} and the knots of zhat; ties go to the smallest trade,
/// then the smaller b'. Cash is not thrown away: alpha' = alpha - h(beta - b').
inline std::pair<double, double> successor(double alpha, double beta, const PiecewiseLinear& zhat, double bid,
                                           double ask, double slack) {
  std::vector<double> cands{beta};
  cands.insert(cands.end(), zhat.knots().begin(), zhat.knots().end());
  double best_obj = std::numeric_limits<double>::infinity();
  double best_b = beta;
  for (double b : cands) {
    const double obj = h_value(bid, ask, beta - b) + zhat(b);
    const double tie = 1e-12 * std::max(1.0, std::abs(obj));
    const bool better = obj < best_obj - tie;
    const bool same = std::abs(obj - best_obj) <= tie;
    if (better || (same && (std::abs(beta - b) < std::abs(beta - best_b) ||
                            (std::abs(beta - b) == std::abs(beta - best_b) && b < best_b)))) {
      best_obj = obj;
      best_b = b;
    }
  }
  if (!(alpha >= best_obj - slack)) {
    throw std::logic_error("superhedge: no successor portfolio found (alpha below the reachable frontier by " +
                           std::to_string(best_obj - alpha) + ")");
  }
  return {alpha - h_value(bid, ask, beta - best_b), best_b};
}

inline TxSuperhedge tx_superhedge(const FrictionMarket& m, const PayoffVec& p, const TxSideTables& t, bool seller,
                                  double initial_cash) {
  const EventTree& tree = m.tree;
  const double slack = 1e-9 * p.scale(m);
  TxSuperhedge out{PureStoppingTime(tree), {}};
  out.portfolio.cash.assign(tree.size(), 0.0);
  out.portfolio.shares.assign(tree.size(), 0.0);
  out.portfolio.cash[0] = initial_cash;
  std::vector<std::uint8_t> stopped(tree.size(), 0);

  for (NodeIndex i = 0; i < tree.size(); ++i) {
    const double a = out.portfolio.cash[i], b = out.portfolio.shares[i];
    const bool inherited = i > 0 && stopped[tree.parent(i)];
    if (inherited) {
      stopped[i] = 1;
      out.stop.set(i, false);
    } else {
      const NodePayoffFunctions f = payoff_functions(m, p, i);
      const bool hit = epi_member(a, b, seller ? f.qa : f.rb, p.scale(m));
      stopped[i] = hit || tree.is_terminal(i);
      out.stop.set(i, stopped[i] != 0);
    }
    if (tree.is_terminal(i)) continue;
    double na = a, nb = b;
    if (!stopped[i]) std::tie(na, nb) = successor(a, b, t.worst[i], m.bid[i], m.ask[i], slack);
    for (NodeIndex c : {tree.up(i), tree.down(i)}) {
      out.portfolio.cash[c] = na;
      out.portfolio.shares[c] = nb;
    }
  }
  return out;
}

}  // namespace detail

inline TxSuperhedge seller_superhedge(const FrictionMarket& m, const PayoffVec& p, const TxSideTables& t,
                                      std::optional<double> initial_cash = std::nullopt) {
  return detail::tx_superhedge(m, p, t, true, initial_cash.value_or(t.price));
}

inline TxSuperhedge buyer_superhedge(const FrictionMarket& m, const PayoffVec& p, const TxSideTables& t,
                                     std::optional<double> initial_cash = std::nullopt) {
  return detail::tx_superhedge(m, p, t, false, initial_cash.value_or(-t.price));
}

struct SuperhedgeCheck {
  double worst_violation = 0.0;     // epigraph breaches of the settlement conditions
  double worst_self_financing = 0.0;
  double scale = 1.0;
};

/// Seller: (alpha, beta) at sigma^t must lie in epi(q^a_sigma) when sigma < t
/// and in epi(r^a_t) otherwise. Buyer: at s^tau in epi(q^b_s) when s < tau,
/// in epi(r^b_tau) otherwise. Every trade must satisfy the spread condition.
inline SuperhedgeCheck verify_superhedge(bool seller, const FrictionMarket& m, const PayoffVec& p,
                                         const PureStoppingTime& stop, const PortfolioProcess& pf) {
  const EventTree& tree = m.tree;
  SuperhedgeCheck c;
  c.scale = p.scale(m);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i)) continue;
    for (NodeIndex ch : {tree.up(i), tree.down(i)}) {
      const double need = h_value(m.bid[i], m.ask[i], pf.shares[i] - pf.shares[ch]);
      c.worst_self_financing = std::max(c.worst_self_financing, need - (pf.cash[i] - pf.cash[ch]));
    }
  }
  for (NodeIndex leaf : tree.leaves()) {
    const auto path = tree.path_to(leaf);
    const int st = stop.time_on(tree, leaf);
    for (int t = 0; t <= tree.depth(); ++t) {
      const NodeIndex at = path[static_cast<std::size_t>(std::min(st, t))];
      double cash, shares;
      if (seller) {
        // H(sigma, t) = X_sigma if sigma < t else Y_t, settled at sigma ^ t.
        cash = st < t ? p.x_cash[at] : p.y_cash[at];
        shares = st < t ? p.x_shares[at] : p.y_shares[at];
        c.worst_violation = std::max(c.worst_violation, -liquidation(m, at, pf.cash[at] - cash, pf.shares[at] - shares));
      } else {
        // H(s, tau) = X_s if s < tau else Y_tau, received at s ^ tau.
        cash = t < st ? p.x_cash[at] : p.y_cash[at];
        shares = t < st ? p.x_shares[at] : p.y_shares[at];
        c.worst_violation = std::max(c.worst_violation, -liquidation(m, at, pf.cash[at] + cash, pf.shares[at] + shares));
      }
    }
  }
  c.worst_violation = std::max(0.0, c.worst_violation);
  c.worst_self_financing = std::max(0.0, c.worst_self_financing);
  return c;
}

// ---------------------------------------------------------------------------
// Randomized stopping times and approximate martingales.

/// Weights chi per node; along every path they sum to one.
struct RandomizedStoppingTime {
  AdaptedProcess weight;

  /// chi*_{t+1} = 1 - sum_{s <= t} chi_s, known at time t.
  AdaptedProcess tail_after(const EventTree& tree) const {
    AdaptedProcess out(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      const double before = i == 0 ? 1.0 : out[tree.parent(i)];
      out[i] = before - weight[i];
    }
    return out;
  }
};

/// chi_t = p_t * prod_{j<t} (1 - p_j). Terminal p must be 1.
inline RandomizedStoppingTime p_to_chi(const EventTree& tree, const AdaptedProcess& p) {
  if (p.size() != tree.size()) throw std::invalid_argument("p_to_chi: one probability per node expected");
  RandomizedStoppingTime chi{AdaptedProcess(tree.size())};
  std::vector<double> survive(tree.size(), 1.0);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (p[i] < 0.0 || p[i] > 1.0) throw std::invalid_argument("p_to_chi: p must lie in [0,1]");
    const double before = i == 0 ? 1.0 : survive[tree.parent(i)];
    chi.weight[i] = p[i] * before;
    survive[i] = before * (1.0 - p[i]);
    if (tree.is_terminal(i) && 1.0 - survive[i] < 1.0 - 1e-12) {
      throw std::invalid_argument("p_to_chi: total mass below one on some path (terminal p must be 1)");
    }
  }
  return chi;
}

inline RandomizedStoppingTime chi_of(const EventTree& tree, const PureStoppingTime& tau) {
  RandomizedStoppingTime chi{AdaptedProcess(tree.size())};
  for (NodeIndex i = 0; i < tree.size(); ++i) chi.weight[i] = tau.stops_at(tree, i) ? 1.0 : 0.0;
  return chi;
}

/// (Z)_chi = sum_t chi_t Z_t per leaf (depth-first leaf order).
inline std::vector<double> chi_value(const EventTree& tree, const AdaptedProcess& z, const RandomizedStoppingTime& chi) {
  std::vector<double> out;
  for (NodeIndex leaf : tree.leaves()) {
    double acc = 0.0;
    for (NodeIndex n : tree.path_to(leaf)) acc += chi.weight[n] * z[n];
    out.push_back(acc);
  }
  return out;
}

/// H(chi, chi~) = sum_{s,t} chi_s chi~_t H(s,t) per leaf, as (cash, shares).
inline std::vector<std::pair<double, double>> pair_value(const EventTree& tree, const PayoffVec& p,
                                                         const RandomizedStoppingTime& chi,
                                                         const RandomizedStoppingTime& chi_tilde) {
  std::vector<std::pair<double, double>> out;
  for (NodeIndex leaf : tree.leaves()) {
    const auto path = tree.path_to(leaf);
    double cash = 0.0, shares = 0.0;
    for (std::size_t s = 0; s < path.size(); ++s) {
      for (std::size_t t = 0; t < path.size(); ++t) {
        const double w = chi.weight[path[s]] * chi_tilde.weight[path[t]];
        if (w == 0.0) continue;
        const NodeIndex at = path[std::min(s, t)];
        cash += w * (s < t ? p.x_cash[at] : p.y_cash[at]);
        shares += w * (s < t ? p.x_shares[at] : p.y_shares[at]);
      }
    }
    out.emplace_back(cash, shares);
  }
  return out;
}

/// A measure given by per-node conditional up-probabilities in [0,1] (zero
/// allowed), together with a price process S inside the spread.
struct ApproxMartingale {
  std::vector<double> prob_up;
  AdaptedProcess price;
};

struct ApproxMartingaleCheck {
  bool ok = true;
  double worst_slack = 0.0;  // largest breach (0 when ok)
};

/// S^b <= S <= S^a and chi*_{t+1} S^b_t <= E_P(S^{chi*}_{t+1} | F_t) <= chi*_{t+1} S^a_t
/// at every node reached with positive probability.
inline ApproxMartingaleCheck check_approx_martingale(const FrictionMarket& m, const RandomizedStoppingTime& chi,
                                                     const ApproxMartingale& pm, double tol = 1e-12) {
  const EventTree& tree = m.tree;
  ApproxMartingaleCheck rep;
  // tail[i] = E_P(S^{chi*}_t | node i) = chi_i S_i + E(tail[child]).
  std::vector<double> tail(tree.size(), 0.0);
  std::vector<double> reach(tree.size(), 0.0);
  reach[0] = 1.0;
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i)) continue;
    reach[tree.up(i)] = reach[i] * pm.prob_up[i];
    reach[tree.down(i)] = reach[i] * (1.0 - pm.prob_up[i]);
  }
  const AdaptedProcess after = chi.tail_after(tree);
  auto breach = [&](double amount) {
    if (amount > tol) {
      rep.ok = false;
      rep.worst_slack = std::max(rep.worst_slack, amount);
    }
  };
  for (NodeIndex i = tree.size(); i-- > 0;) {
    double cont = 0.0;
    if (!tree.is_terminal(i)) {
      const double pu = pm.prob_up[i];
      if (pu < -tol || pu > 1.0 + tol) breach(std::max(-pu, pu - 1.0));
      cont = pu * tail[tree.up(i)] + (1.0 - pu) * tail[tree.down(i)];
    }
    tail[i] = chi.weight[i] * pm.price[i] + cont;
    if (reach[i] <= 0.0) continue;
    const double scale = std::max(1.0, m.ask[i]);
    breach((m.bid[i] - pm.price[i]) / scale);
    breach((pm.price[i] - m.ask[i]) / scale);
    breach((after[i] * m.bid[i] - cont) / scale);
    breach((cont - after[i] * m.ask[i]) / scale);
  }
  return rep;
}

/// E_P (H^(1)(sigma, .) + S H^(2)(sigma, .))_chi for the seller (or with a
/// fixed buyer time tau when `seller` is false).
inline double dual_objective(const FrictionMarket& m, const PayoffVec& p, const PureStoppingTime& fixed, bool seller,
                             const RandomizedStoppingTime& chi, const ApproxMartingale& pm) {
  const EventTree& tree = m.tree;
  double total = 0.0;
  for (NodeIndex leaf : tree.leaves()) {
    const auto path = tree.path_to(leaf);
    double prob = 1.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
      const NodeIndex par = path[k - 1];
      prob *= tree.last_sign(path[k]) > 0 ? pm.prob_up[par] : 1.0 - pm.prob_up[par];
    }
    if (prob == 0.0) continue;
    const int f = fixed.time_on(tree, leaf);
    double acc = 0.0;
    for (int t = 0; t <= tree.depth(); ++t) {
      const NodeIndex nt = path[static_cast<std::size_t>(t)];
      if (chi.weight[nt] == 0.0) continue;
      bool cancel_first;  // H(s,t) = X_s if s < t else Y_t
      int settle;
      if (seller) {
        cancel_first = f < t;
        settle = std::min(f, t);
      } else {
        cancel_first = t < f;
        settle = std::min(f, t);
      }
      const NodeIndex at = path[static_cast<std::size_t>(settle)];
      const double cash = cancel_first ? p.x_cash[at] : p.y_cash[at];
      const double shares = cancel_first ? p.x_shares[at] : p.y_shares[at];
      acc += chi.weight[nt] * (cash + pm.price[nt] * shares);
    }
    total += prob * acc;
  }
  return total;
}

/// Draws a randomized stopping time and an approximate martingale for it.
/// chi comes from random stopping probabilities; S is uniform in the spread;
/// each conditional probability is drawn uniformly from the interval that
/// keeps the conditional band inequality, going backwards. Returns false
/// when some node has an empty interval.
template <class Rng>
bool sample_approx_martingale(const FrictionMarket& m, Rng& rng, RandomizedStoppingTime& chi, ApproxMartingale& pm) {
  const EventTree& tree = m.tree;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AdaptedProcess p(tree.size());
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    const double r = unit(rng);
    // Mix in pure stops and pure continuation now and then.
    p[i] = tree.is_terminal(i) ? 1.0 : (r < 0.15 ? 0.0 : (r > 0.9 ? 1.0 : unit(rng)));
  }
  chi = p_to_chi(tree, p);
  pm.price = AdaptedProcess(tree.size());
  pm.prob_up.assign(tree.size(), 0.5);
  for (NodeIndex i = 0; i < tree.size(); ++i) pm.price[i] = m.bid[i] + unit(rng) * (m.ask[i] - m.bid[i]);
  const AdaptedProcess after = chi.tail_after(tree);
  std::vector<double> tail(tree.size(), 0.0);
  for (NodeIndex i = tree.size(); i-- > 0;) {
    double cont = 0.0;
    if (!tree.is_terminal(i)) {
      const double au = tail[tree.up(i)], ad = tail[tree.down(i)];
      const double lo = after[i] * m.bid[i], hi = after[i] * m.ask[i];
      // cont(p) = ad + p (au - ad) must land in [lo, hi].
      double plo = 0.0, phi = 1.0;
      if (au != ad) {
        double a1 = (lo - ad) / (au - ad), a2 = (hi - ad) / (au - ad);
        if (a1 > a2) std::swap(a1, a2);
        plo = std::max(plo, a1);
        phi = std::min(phi, a2);
      } else if (ad < lo || ad > hi) {
        return false;
      }
      if (plo > phi) return false;
      const double pu = plo + unit(rng) * (phi - plo);
      pm.prob_up[i] = pu;
      cont = ad + pu * (au - ad);
    }
    tail[i] = chi.weight[i] * pm.price[i] + cont;
  }
  return true;
}

}  // namespace gameopt
