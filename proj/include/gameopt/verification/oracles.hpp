#pragma once

// Independent reference computations used by the tests and the selftest.
// None of these call the code they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "../market_lattice.hpp"
#include "../polyhedral.hpp"
#include "../txcost.hpp"

namespace gameopt::oracle {

/// Snell envelope U_N = Y_N, U = max(Y, E U') on a tree.
inline std::vector<double> snell(const EventTree& tree, const std::vector<double>& y) {
  std::vector<double> u(tree.size());
  for (NodeIndex i = tree.size(); i-- > 0;) {
    if (tree.is_terminal(i)) {
      u[i] = y[i];
      continue;
    }
    const double p = tree.prob_up(i);
    u[i] = std::max(y[i], p * u[tree.up(i)] + (1.0 - p) * u[tree.down(i)]);
  }
  return u;
}

/// Classical American-option hedge: shares replicating the envelope one step on.
inline std::vector<double> snell_hedge(const EventTree& tree, const std::vector<double>& envelope,
                                       const std::vector<double>& discounted_stock) {
  std::vector<double> g(tree.size(), 0.0);
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (tree.is_terminal(i)) continue;
    g[i] = (envelope[tree.up(i)] - envelope[tree.down(i)]) /
           (discounted_stock[tree.up(i)] - discounted_stock[tree.down(i)]);
  }
  return g;
}

/// American put on a recombining CRR lattice, written out longhand.
inline double american_put(double s0, double strike, double up, double down, double rate, int n) {
  const double p = (rate - down) / (up - down);
  const double disc = 1.0 / (1.0 + rate);
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    const double s = s0 * std::pow(1.0 + up, j) * std::pow(1.0 + down, n - j);
    v[static_cast<std::size_t>(j)] = std::max(strike - s, 0.0);
  }
  for (int k = n - 1; k >= 0; --k) {
    for (int j = 0; j <= k; ++j) {
      const double s = s0 * std::pow(1.0 + up, j) * std::pow(1.0 + down, k - j);
      const double cont = disc * (p * v[static_cast<std::size_t>(j) + 1] + (1.0 - p) * v[static_cast<std::size_t>(j)]);
      v[static_cast<std::size_t>(j)] = std::max(strike - s, cont);
    }
  }
  return v[0];
}

/// inf over u on the grid {lo, lo + step, ..., hi} (plus u = 0) of
/// h_[d,c](u) + f(y - u).
inline double grid_inf_convolution(const PiecewiseLinear& f, double d, double c, double y, double lo, double hi,
                                   double step) {
  double best = h_value(d, c, 0.0) + f(y);
  const auto count = static_cast<long long>(std::floor((hi - lo) / step + 0.5));
  for (long long i = 0; i <= count; ++i) {
    const double u = lo + static_cast<double>(i) * step;
    best = std::min(best, h_value(d, c, u) + f(y - u));
  }
  return best;
}

/// Smallest initial cash (holding no shares) that lets the seller superhedge
/// when share positions are restricted to `grid` (which must contain 0):
/// C_T = r^a_T, C_t(b) = min(q^a_t(b), max(r^a_t(b), min_{b'} [h(b - b') + max_child C_{t+1}(b')])).
inline double grid_superhedge_capital(const FrictionMarket& m, const PayoffVec& p, const std::vector<double>& grid) {
  const EventTree& tree = m.tree;
  std::vector<std::vector<double>> c(tree.size(), std::vector<double>(grid.size()));
  for (NodeIndex i = tree.size(); i-- > 0;) {
    const double bid = m.bid[i], ask = m.ask[i];
    auto deliver = [&](double cash, double shares, double b) { return cash + h_value(bid, ask, b - shares); };
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double b = grid[g];
      const double ra = deliver(p.y_cash[i], p.y_shares[i], b);
      if (tree.is_terminal(i)) {
        c[i][g] = ra;
        continue;
      }
      const double qa = deliver(p.x_cash[i], p.x_shares[i], b);
      double cont = std::numeric_limits<double>::infinity();
      for (std::size_t g2 = 0; g2 < grid.size(); ++g2) {
        const double need = std::max(c[tree.up(i)][g2], c[tree.down(i)][g2]);
        cont = std::min(cont, h_value(bid, ask, b - grid[g2]) + need);
      }
      c[i][g] = std::min(qa, std::max(ra, cont));
    }
  }
  const auto zero = std::find(grid.begin(), grid.end(), 0.0);
  return c[0][static_cast<std::size_t>(zero - grid.begin())];
}

}  // namespace gameopt::oracle
