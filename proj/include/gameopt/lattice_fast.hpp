#pragma once

// Recombining-lattice fast paths for payoffs that declare enough structure.
//
// Markov payoffs (function of time and current price) live on the usual
// (k, j) lattice with j = number of up moves. The Russian payoff with zero
// interest is handled in the stock numeraire: the state j >= 0 is the
// logarithm of max(m, running max) / S in units of the log step, which moves
// j -> max(j-1, 0) on an up move and j -> j+1 on a down move.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynkin.hpp"
#include "market_lattice.hpp"
#include "payoff.hpp"

namespace gameopt {

/// Values, stop flags and hedge positions per lattice state and step.
struct LatticeGame {
  enum class Layout { markov, russian };
  Layout layout = Layout::markov;
  int steps = 0;
  int initial_state = 0;
  double value = 0.0;  // price at the root (currency)
  bool has_tables = false;
  // Indexed [k][j]. Values and positions are discounted (bond units) for the
  // Markov layout and per unit of stock for the Russian layout.
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint8_t>> seller_stop;
  std::vector<std::vector<std::uint8_t>> buyer_stop;
  std::vector<std::vector<double>> gamma;  // shares held over (k, k+1]
  std::vector<std::vector<double>> bond;   // bond units held over (k, k+1], at wealth = value

  int next_state(int j, int sign) const {
    if (layout == Layout::markov) return sign > 0 ? j + 1 : j;
    return sign > 0 ? std::max(j - 1, 0) : j + 1;
  }
};

struct MarkovLatticeOptions {
  double step_length = 1.0;
  bool keep_terminal_penalty = false;
  bool keep_tables = false;
};

/// Game option price for a Markov payoff on the recombining CRR lattice.
inline LatticeGame price_markov_lattice(const CrrParams& market, const PayoffFunctional& payoff,
                                        const MarkovLatticeOptions& opt = {}) {
  if (payoff.structure != PayoffStructure::markov) {
    throw std::invalid_argument("price_markov_lattice: payoff '" + payoff.id + "' is not Markov");
  }
  const double p = martingale_prob(market);
  const int n = market.steps;
  const double u = 1.0 + market.up;
  const double d = 1.0 + market.down;
  const double growth = 1.0 + market.rate;

  auto stock = [&](int k, int j) { return market.s0 * std::pow(u, j) * std::pow(d, k - j); };
  auto bondv = [&](int k) { return std::pow(growth, k); };
  auto payoffs_at = [&](int k, int j, double& x, double& y) {
    PathState st;
    st.time = k * opt.step_length;
    st.step = k;
    st.price = stock(k, j);
    st.initial = market.s0;
    st.running_max = st.running_min = st.price;
    const double b = bondv(k);
    y = payoff.holder_value(st) / b;
    x = (k == n && !opt.keep_terminal_penalty) ? y : y + payoff.penalty_value(st) / b;
  };

  LatticeGame out;
  out.layout = LatticeGame::Layout::markov;
  out.steps = n;
  out.has_tables = opt.keep_tables;
  if (opt.keep_tables) {
    out.values.resize(static_cast<std::size_t>(n) + 1);
    out.seller_stop.resize(static_cast<std::size_t>(n) + 1);
    out.buyer_stop.resize(static_cast<std::size_t>(n) + 1);
    out.gamma.resize(static_cast<std::size_t>(n) + 1);
    out.bond.resize(static_cast<std::size_t>(n) + 1);
  }

  std::vector<double> next(static_cast<std::size_t>(n) + 1), cur(static_cast<std::size_t>(n) + 1);
  double scale = 0.0;
  for (int j = 0; j <= n; ++j) {
    double x, y;
    payoffs_at(n, j, x, y);
    next[static_cast<std::size_t>(j)] = x;
    scale = std::max(scale, std::abs(x));
  }
  if (opt.keep_tables) {
    out.values[static_cast<std::size_t>(n)] = next;
    out.seller_stop[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, 1);
    out.buyer_stop[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, 1);
    out.gamma[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.bond[static_cast<std::size_t>(n)] = next;
  }
  for (int k = n - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    std::vector<std::uint8_t> sflag, bflag;
    std::vector<double> gam, bnd;
    if (opt.keep_tables) {
      sflag.resize(ku + 1);
      bflag.resize(ku + 1);
      gam.resize(ku + 1);
      bnd.resize(ku + 1);
    }
    for (int j = 0; j <= k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      double x, y;
      payoffs_at(k, j, x, y);
      scale = std::max(scale, std::abs(x));
      const double vu = next[ju + 1], vd = next[ju];
      const double cont = p * vu + (1.0 - p) * vd;
      const double v = std::min(x, std::max(y, cont));
      cur[ju] = v;
      if (opt.keep_tables) {
        const double slack = kHitSlack * std::max(scale, 1.0);
        sflag[ju] = v >= x - slack;
        bflag[ju] = v <= y + slack;
        const double s_here = stock(k, j) / bondv(k);
        const double s_up = s_here * u / growth, s_dn = s_here * d / growth;
        gam[ju] = (vu - vd) / (s_up - s_dn);
        bnd[ju] = v - gam[ju] * s_here;
      }
    }
    cur.resize(ku + 1);
    std::swap(cur, next);
    cur.resize(static_cast<std::size_t>(n) + 1);
    if (opt.keep_tables) {
      out.values[ku] = std::vector<double>(next.begin(), next.begin() + k + 1);
      out.seller_stop[ku] = std::move(sflag);
      out.buyer_stop[ku] = std::move(bflag);
      out.gamma[ku] = std::move(gam);
      out.bond[ku] = std::move(bnd);
    }
  }
  out.value = next[0];
  return out;
}

/// Offset j0 with m = s0 * u^{j0}, or -1 when the floor is off the lattice.
inline int russian_initial_state(double s0, double floor_level, double log_step) {
  if (floor_level < s0 * (1.0 - 1e-12)) return -1;
  const double j = std::log(floor_level / s0) / log_step;
  const double jr = std::round(j);
  if (std::abs(j - jr) > 1e-9) return -1;
  return static_cast<int>(jr);
}

/// Russian game option F = max(m, running max), Delta = delta * S, with zero
/// interest. Requires m = s0 * exp(j0 * log_step) for an integer j0 >= 0.
inline LatticeGame price_russian_lattice(const CrrParams& market, const PayoffFunctional& payoff,
                                         bool keep_tables = false) {
  if (payoff.structure != PayoffStructure::russian) {
    throw std::invalid_argument("price_russian_lattice: payoff '" + payoff.id + "' is not Russian");
  }
  if (market.rate != 0.0) {
    throw std::invalid_argument("price_russian_lattice: the reduced state needs zero interest");
  }
  const double u = 1.0 + market.up;
  const double d = 1.0 + market.down;
  if (std::abs(u * d - 1.0) > 1e-12) {
    throw std::invalid_argument("price_russian_lattice: needs a symmetric log lattice (u d = 1)");
  }
  const int j0 = russian_initial_state(market.s0, payoff.floor_level, std::log(u));
  if (j0 < 0) throw std::invalid_argument("price_russian_lattice: floor not on the lattice");
  const double p = martingale_prob(market);
  const double q = p * u;  // up probability under the stock numeraire
  const double delta = payoff.penalty_rate;
  const int n = market.steps;
  const int width = n + j0 + 1;

  std::vector<double> upow(static_cast<std::size_t>(width) + 1);
  for (int j = 0; j <= width; ++j) upow[static_cast<std::size_t>(j)] = std::pow(u, j);

  LatticeGame out;
  out.layout = LatticeGame::Layout::russian;
  out.steps = n;
  out.initial_state = j0;
  out.has_tables = keep_tables;
  if (keep_tables) {
    out.values.resize(static_cast<std::size_t>(n) + 1);
    out.seller_stop.resize(static_cast<std::size_t>(n) + 1);
    out.buyer_stop.resize(static_cast<std::size_t>(n) + 1);
    out.gamma.resize(static_cast<std::size_t>(n) + 1);
    out.bond.resize(static_cast<std::size_t>(n) + 1);
  }
  // At step k the reachable states are 0..k+j0.
  std::vector<double> next(upow.begin(), upow.begin() + n + j0 + 1);
  if (keep_tables) {
    const auto nu = static_cast<std::size_t>(n);
    out.values[nu] = next;
    out.seller_stop[nu].assign(next.size(), 1);
    out.buyer_stop[nu].assign(next.size(), 1);
    out.gamma[nu].assign(next.size(), 0.0);
    out.bond[nu].assign(next.size(), 0.0);
  }
  const double slack = kHitSlack * (upow[static_cast<std::size_t>(width)] + delta);
  for (int k = n - 1; k >= 0; --k) {
    const std::size_t len = static_cast<std::size_t>(k + j0) + 1;
    std::vector<double> cur(len);
    std::vector<std::uint8_t> sflag, bflag;
    std::vector<double> gam, bnd;
    if (keep_tables) {
      sflag.resize(len);
      bflag.resize(len);
      gam.resize(len);
      bnd.resize(len);
    }
    for (std::size_t j = 0; j < len; ++j) {
      const double vu = next[j == 0 ? 0 : j - 1];
      const double vd = next[j + 1];
      const double y = upow[j];
      const double x = y + delta;
      const double cont = q * vu + (1.0 - q) * vd;
      const double v = std::min(x, std::max(y, cont));
      cur[j] = v;
      if (keep_tables) {
        sflag[j] = v >= x - slack;
        bflag[j] = v <= y + slack;
        // Value in currency is S * v; replicate S_up v_up and S_dn v_dn per unit of S.
        gam[j] = (u * vu - d * vd) / (u - d);
        bnd[j] = v - gam[j];
      }
    }
    next = std::move(cur);
    if (keep_tables) {
      const auto ku = static_cast<std::size_t>(k);
      out.values[ku] = next;
      out.seller_stop[ku] = std::move(sflag);
      out.buyer_stop[ku] = std::move(bflag);
      out.gamma[ku] = std::move(gam);
      out.bond[ku] = std::move(bnd);
    }
  }
  out.value = market.s0 * next[static_cast<std::size_t>(j0)];
  return out;
}

}  // namespace gameopt
