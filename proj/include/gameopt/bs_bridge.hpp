#pragma once

// From binomial game options to Black-Scholes ones: price sequences and the
// empirical error envelope, the Skorokhod embedding of the sign walk into
// drifted Brownian motion, transported exercise times and the near hedge.
//
// Brownian paths are plain Euler walks on a fine grid of step T / (n m).
// Each Monte Carlo path gets its own generator seeded from (master seed,
// path index), so results do not depend on evaluation order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "game_option.hpp"
#include "lattice_fast.hpp"
#include "market_lattice.hpp"
#include "payoff.hpp"

namespace gameopt {

struct BsParams {
  double z = 100.0;
  double rate = 0.0;
  double volatility = 0.2;
  double maturity = 1.0;

  void validate() const {
    if (!(z > 0.0)) throw std::invalid_argument("BsParams: z must be positive");
    if (!(volatility > 0.0)) throw std::invalid_argument("BsParams: volatility must be positive");
    if (!(maturity > 0.0)) throw std::invalid_argument("BsParams: maturity must be positive");
  }
  BsDiscretization discretize(int n) const { return bs_to_crr(rate, volatility, maturity, n); }
};

/// V^{(n)}(z) on the n-step approximation. Markov payoffs and the zero-rate
/// Russian payoff use recombining lattices; anything else needs the full tree.
inline double bs_lattice_price(const PayoffFunctional& payoff, const BsParams& bs, int n) {
  bs.validate();
  const BsDiscretization d = bs.discretize(n);
  const CrrParams crr = d.crr(bs.z);
  if (payoff.structure == PayoffStructure::markov) {
    MarkovLatticeOptions opt;
    opt.step_length = d.step_length();
    return price_markov_lattice(crr, payoff, opt).value;
  }
  if (payoff.structure == PayoffStructure::russian && bs.rate == 0.0) {
    return price_russian_lattice(crr, payoff).value;
  }
  GameOptionInstance inst{crr, payoff, d.step_length(), false};
  return price(build_game(inst)).value;
}

struct PriceEntry {
  int n = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;
};

inline std::vector<PriceEntry> price_sequence(const PayoffFunctional& payoff, const BsParams& bs,
                                              const std::vector<int>& ns) {
  std::vector<PriceEntry> out;
  for (int n : ns) {
    PriceEntry e;
    e.n = n;
    try {
      e.value = bs_lattice_price(payoff, bs, n);
      e.ok = true;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// n^{-1/4} (ln n)^{3/4}
inline double rate_envelope(int n) {
  const double x = static_cast<double>(n);
  return std::pow(x, -0.25) * std::pow(std::log(x), 0.75);
}

struct ConvergenceReport {
  int n_ref = 0;
  double reference = 0.0;
  int fit_max_n = 64;
  double fitted_c = 0.0;
  std::vector<int> ns;            // analyzed n (excluding n_ref)
  std::vector<double> values;
  std::vector<double> errors;     // |V^(n) - V^(n_ref)|
  std::vector<double> envelope;   // fitted_c * rate_envelope(n)
  std::vector<int> violations;    // n > fit_max_n with error above the envelope
  bool envelope_respected = true;

  double delta_hat(int n) const { return fitted_c * rate_envelope(n); }
};

/// Uses the largest n in the table as the reference; failed entries are skipped.
inline ConvergenceReport convergence_report(const std::vector<PriceEntry>& table, int fit_max_n = 64) {
  ConvergenceReport rep;
  rep.fit_max_n = fit_max_n;
  const PriceEntry* ref = nullptr;
  for (const auto& e : table) {
    if (e.ok && (!ref || e.n > ref->n)) ref = &e;
  }
  if (!ref) throw std::invalid_argument("convergence_report: no successful entries");
  rep.n_ref = ref->n;
  rep.reference = ref->value;
  for (const auto& e : table) {
    if (!e.ok || e.n == rep.n_ref || e.n < 2) continue;
    rep.ns.push_back(e.n);
    rep.values.push_back(e.value);
    rep.errors.push_back(std::abs(e.value - rep.reference));
  }
  for (std::size_t i = 0; i < rep.ns.size(); ++i) {
    if (rep.ns[i] <= fit_max_n) rep.fitted_c = std::max(rep.fitted_c, rep.errors[i] / rate_envelope(rep.ns[i]));
  }
  for (std::size_t i = 0; i < rep.ns.size(); ++i) {
    const double env = rep.fitted_c * rate_envelope(rep.ns[i]);
    rep.envelope.push_back(env);
    if (rep.ns[i] > fit_max_n && rep.errors[i] > env * (1.0 + 1e-12) + 1e-15) {
      rep.violations.push_back(rep.ns[i]);
      rep.envelope_respected = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Strategy tables: stop rules and hedge coefficients on sign prefixes. The
// n = 64 tables needed in practice are far too large as explicit prefix maps,
// so they are stored on the recombining state (number of up moves for Markov
// payoffs, the reduced Russian state otherwise) that the prefix determines.

struct StrategyTable {
  std::string payoff_id;
  BsParams bs;
  int n = 0;
  LatticeGame lattice;

  int initial_state() const { return lattice.initial_state; }
  int next_state(int j, int sign) const { return lattice.next_state(j, sign); }
  bool seller_stop(int k, int j) const { return lattice.seller_stop[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] != 0; }
  bool buyer_stop(int k, int j) const { return lattice.buyer_stop[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] != 0; }
  /// Shares held over (theta_k, theta_{k+1}] after k moves in state j.
  double gamma(int k, int j) const { return lattice.gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]; }
  double bond(int k, int j) const { return lattice.bond[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]; }

  /// mu(lambda) or nu(lambda) for a full or partial sign sequence; returns
  /// -1 if the prefix ends before the rule stops.
  int stop_index(const std::vector<int>& signs, bool seller) const {
    int j = initial_state();
    for (int k = 0; k <= n; ++k) {
      if (seller ? seller_stop(k, j) : buyer_stop(k, j)) return k;
      if (k == static_cast<int>(signs.size())) return -1;
      j = next_state(j, signs[static_cast<std::size_t>(k)]);
    }
    return n;
  }
};

inline StrategyTable build_strategy_table(const PayoffFunctional& payoff, const BsParams& bs, int n) {
  bs.validate();
  const BsDiscretization d = bs.discretize(n);
  StrategyTable t;
  t.payoff_id = payoff.id;
  t.bs = bs;
  t.n = n;
  if (payoff.structure == PayoffStructure::markov) {
    MarkovLatticeOptions opt;
    opt.step_length = d.step_length();
    opt.keep_tables = true;
    t.lattice = price_markov_lattice(d.crr(bs.z), payoff, opt);
  } else if (payoff.structure == PayoffStructure::russian && bs.rate == 0.0) {
    t.lattice = price_russian_lattice(d.crr(bs.z), payoff, true);
  } else {
    throw std::invalid_argument("build_strategy_table: payoff '" + payoff.id +
                                "' has no recombining state (needs a Markov payoff or the zero-rate Russian)");
  }
  return t;
}

/// Text format, one record per line:
///   strategy_table v1
///   payoff <id>
///   market z r kappa T n
///   layout markov|russian initial_state value
///   <k> <j> <seller_stop> <buyer_stop> <gamma> <bond>   (for every state)
/// Markov values are in discounted (bond) units; Russian gamma is shares and
/// bond is per unit of the current stock price.
inline void write_strategy_table(std::ostream& os, const StrategyTable& t) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "strategy_table v1\n";
  buf << "payoff " << t.payoff_id << "\n";
  buf << "market " << t.bs.z << ' ' << t.bs.rate << ' ' << t.bs.volatility << ' ' << t.bs.maturity << ' ' << t.n << "\n";
  buf << "layout " << (t.lattice.layout == LatticeGame::Layout::markov ? "markov" : "russian") << ' '
      << t.lattice.initial_state << ' ' << t.lattice.value << "\n";
  for (std::size_t k = 0; k < t.lattice.seller_stop.size(); ++k) {
    for (std::size_t j = 0; j < t.lattice.seller_stop[k].size(); ++j) {
      buf << k << ' ' << j << ' ' << int(t.lattice.seller_stop[k][j]) << ' ' << int(t.lattice.buyer_stop[k][j]) << ' '
          << t.lattice.gamma[k][j] << ' ' << t.lattice.bond[k][j] << "\n";
    }
  }
  os << buf.str();
}

inline StrategyTable read_strategy_table(std::istream& is) {
  auto fail = [](const std::string& what) { throw std::runtime_error("strategy table: " + what); };
  std::string line, word;
  if (!std::getline(is, line) || line != "strategy_table v1") fail("bad header");
  StrategyTable t;
  if (!(is >> word) || word != "payoff" || !(is >> t.payoff_id)) fail("missing payoff line");
  if (!(is >> word) || word != "market" || !(is >> t.bs.z >> t.bs.rate >> t.bs.volatility >> t.bs.maturity >> t.n)) {
    fail("missing market line");
  }
  std::string layout;
  if (!(is >> word) || word != "layout" || !(is >> layout >> t.lattice.initial_state >> t.lattice.value)) {
    fail("missing layout line");
  }
  if (layout == "markov") {
    t.lattice.layout = LatticeGame::Layout::markov;
  } else if (layout == "russian") {
    t.lattice.layout = LatticeGame::Layout::russian;
  } else {
    fail("unknown layout '" + layout + "'");
  }
  t.lattice.steps = t.n;
  t.lattice.has_tables = true;
  const auto levels = static_cast<std::size_t>(t.n) + 1;
  t.lattice.values.assign(levels, {});
  t.lattice.seller_stop.assign(levels, {});
  t.lattice.buyer_stop.assign(levels, {});
  t.lattice.gamma.assign(levels, {});
  t.lattice.bond.assign(levels, {});
  std::size_t k, j;
  int sflag, bflag;
  double g, b;
  while (is >> k >> j >> sflag >> bflag >> g >> b) {
    if (k >= levels || j != t.lattice.seller_stop[k].size()) fail("records out of order");
    t.lattice.seller_stop[k].push_back(static_cast<std::uint8_t>(sflag));
    t.lattice.buyer_stop[k].push_back(static_cast<std::uint8_t>(bflag));
    t.lattice.gamma[k].push_back(g);
    t.lattice.bond[k].push_back(b);
  }
  for (std::size_t i = 0; i < levels; ++i) {
    if (t.lattice.seller_stop[i].empty()) fail("level " + std::to_string(i) + " has no records");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Seeding and the embedding.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 path_rng(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64(splitmix64(master ^ splitmix64(index)));
}

struct EmbeddingOptions {
  int n = 64;
  int fine_steps = 100;     // m: grid points per expected increment
  double cap_factor = 4.0;  // simulate at most cap_factor * T
  int crossings = -1;       // stop after this many crossings (-1: n)
};

struct EmbeddedPath {
  std::vector<double> theta;  // theta_0 = 0, ..., one per crossing (padded ones sit at the cap)
  std::vector<int> signs;
  int crossings = 0;          // genuine crossings found
  bool flagged = false;       // padded with coin flips
  double grid_step = 0.0;
};

/// B*_t = -kappa t / 2 + B_t on the grid; theta_{k+1} is the first grid time
/// after theta_k with |B* - B*_{theta_k}| >= sqrt(T/n).
inline EmbeddedPath simulate_embedding(const BsParams& bs, const EmbeddingOptions& opt, std::uint64_t seed,
                                       std::uint64_t index = 0) {
  bs.validate();
  if (opt.n < 1) throw std::invalid_argument("simulate_embedding: n must be >= 1");
  if (opt.fine_steps < 1) throw std::invalid_argument("simulate_embedding: fine_steps must be >= 1");
  const int want = opt.crossings < 0 ? opt.n : std::min(opt.crossings, opt.n);
  const double dt = bs.maturity / (static_cast<double>(opt.n) * opt.fine_steps);
  const double h = std::sqrt(bs.maturity / opt.n);
  const double drift = -0.5 * bs.volatility * dt;
  const double sd = std::sqrt(dt);
  const auto cap = static_cast<long long>(std::ceil(opt.cap_factor * bs.maturity / dt));
  auto rng = path_rng(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);

  EmbeddedPath p;
  p.grid_step = dt;
  p.theta.push_back(0.0);
  double b = 0.0, anchor = 0.0;
  for (long long i = 1; i <= cap && p.crossings < want; ++i) {
    b += drift + sd * normal(rng);
    const double move = b - anchor;
    if (std::abs(move) >= h) {
      p.signs.push_back(move > 0 ? 1 : -1);
      p.theta.push_back(static_cast<double>(i) * dt);
      anchor = b;
      ++p.crossings;
    }
  }
  if (p.crossings < want) {
    p.flagged = true;
    std::bernoulli_distribution coin(0.5);
    while (static_cast<int>(p.signs.size()) < want) {
      p.signs.push_back(coin(rng) ? 1 : -1);
      p.theta.push_back(static_cast<double>(cap) * dt);
    }
  }
  return p;
}

struct TransportedTimes {
  int seller_index = 0;  // mu*(lambda_B)
  int buyer_index = 0;   // nu*(lambda_B)
  double phi = 0.0;      // theta_mu capped at T
  double psi = 0.0;
  bool flagged = false;
};

inline TransportedTimes transport_times(const StrategyTable& table, const EmbeddedPath& path) {
  if (static_cast<int>(path.signs.size()) < table.n) {
    throw std::invalid_argument("transport_times: path has fewer than n signs");
  }
  TransportedTimes t;
  t.seller_index = table.stop_index(path.signs, true);
  t.buyer_index = table.stop_index(path.signs, false);
  t.phi = std::min(path.theta[static_cast<std::size_t>(t.seller_index)], table.bs.maturity);
  t.psi = std::min(path.theta[static_cast<std::size_t>(t.buyer_index)], table.bs.maturity);
  t.flagged = path.flagged;
  return t;
}

/// Fraction of +1 first increments over `paths` simulated paths.
struct SignFrequency {
  std::size_t paths = 0;
  std::size_t ups = 0;
  std::size_t flagged = 0;
  double frequency = 0.0;
  double expected = 0.0;  // p^(n)
  double sigma = 0.0;     // binomial standard deviation of the frequency
};

inline SignFrequency first_increment_frequency(const BsParams& bs, int n, int fine_steps, std::size_t paths,
                                               std::uint64_t seed) {
  SignFrequency f;
  f.paths = paths;
  EmbeddingOptions opt{n, fine_steps, 4.0, 1};
  for (std::size_t i = 0; i < paths; ++i) {
    const EmbeddedPath p = simulate_embedding(bs, opt, seed, i);
    if (p.flagged) {
      ++f.flagged;
      continue;
    }
    if (p.signs.front() > 0) ++f.ups;
  }
  const std::size_t used = paths - f.flagged;
  f.frequency = used ? static_cast<double>(f.ups) / static_cast<double>(used) : 0.0;
  f.expected = bs.discretize(n).prob_up;
  f.sigma = used ? std::sqrt(f.expected * (1.0 - f.expected) / static_cast<double>(used)) : 0.0;
  return f;
}

// ---------------------------------------------------------------------------
// Monte Carlo over embedded paths: value at the transported times and the
// maximal shortfall of the transported hedge, at two monitoring grids.

struct McOptions {
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  int fine_steps = 100;  // m for the headline run
  bool grid_check = true;  // also run at 2m on the same Brownian paths
};

struct McStat {
  double mean = 0.0;
  double se = 0.0;
};

struct McResult {
  int n = 0;
  double lattice_value = 0.0;  // V^(n)
  McStat value;                // E Q(phi*, psi*) at m
  McStat shortfall;            // E sup_t (H(phi, t) - W_{phi ^ t})^+ at m
  McStat value_fine;           // same at 2m (grid_check)
  McStat shortfall_fine;
  McStat shortfall_diff;       // paired difference fine - headline
  std::size_t paths = 0;
  double seller_stop_rate = 0.0;  // fraction of paths with phi < T
  double buyer_stop_rate = 0.0;
};

namespace detail {

struct Accumulator {
  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  void add(double x) {
    sum += x;
    sum2 += x * x;
    ++count;
  }
  McStat stat() const {
    McStat s;
    if (count == 0) return s;
    const double c = static_cast<double>(count);
    s.mean = sum / c;
    const double var = count > 1 ? std::max(0.0, (sum2 - c * s.mean * s.mean) / (c - 1.0)) : 0.0;
    s.se = std::sqrt(var / c);
    return s;
  }
};

/// Follows one monitoring grid (every `stride`-th fine point) along a path.
/// Stop rules are read at theta_k only (the start and right after each
/// crossing); both times are capped at T, where an unsettled side settles.
class PathTracker {
public:
  PathTracker(const PayoffFunctional& payoff, const StrategyTable& table, int stride, double fine_dt, long long horizon)
      : payoff_(payoff), table_(table), stride_(stride), dt_(fine_dt * stride), horizon_(horizon) {
    const BsParams& bs = table.bs;
    h_ = std::sqrt(bs.maturity / table.n);
    state_ = payoff.start(bs.z);
    j_ = table.initial_state();
    s_disc_ = bs.z;
    wealth_ = table.lattice.value;  // discounted
    settle(0.0, table.seller_stop(0, j_), table.buyer_stop(0, j_), false);
    monitor(0.0);
    refresh_gamma();
  }

  bool done() const { return seller_done_ && buyer_done_; }

  /// Feed the fine point with index i and Brownian value b.
  void step(long long i, double b) {
    if (done() || i % stride_ != 0) return;
    const BsParams& bs = table_.bs;
    const double t = static_cast<double>(i / stride_) * dt_;
    const double s_disc = bs.z * std::exp(bs.volatility * b);
    state_ = payoff_.advance(state_, s_disc * std::exp(bs.rate * t), dt_);
    wealth_ += gamma_ * (s_disc - s_disc_);
    s_disc_ = s_disc;
    bool crossed = false;
    if (k_ < table_.n && std::abs(b - anchor_) >= h_) {
      j_ = table_.next_state(j_, b > anchor_ ? 1 : -1);
      anchor_ = b;
      ++k_;
      crossed = true;
    }
    const bool seller = crossed && table_.seller_stop(k_, j_);
    const bool buyer = crossed && table_.buyer_stop(k_, j_);
    settle(t, seller, buyer, i >= horizon_);
    monitor(t);
    refresh_gamma();
  }

  double q_value() const { return q_; }
  double shortfall() const { return sup_short_; }
  bool seller_stopped_early() const { return seller_done_ && phi_ < last_time(); }
  bool buyer_stopped_early() const { return buyer_done_ && psi_ < last_time(); }

private:
  double last_time() const { return static_cast<double>(horizon_ / stride_) * dt_; }

  void settle(double t, bool seller, bool buyer, bool at_end) {
    seller = !seller_done_ && (seller || at_end);
    buyer = !buyer_done_ && (buyer || at_end);
    if (!resolved_ && (seller || buyer)) {
      // H(phi, psi): G_phi if the seller stops strictly first, F_psi otherwise.
      const double h = (seller && !buyer) ? payoff_.seller_value(state_) : payoff_.holder_value(state_);
      q_ = std::exp(-table_.bs.rate * t) * h;
      resolved_ = true;
    }
    if (seller) {
      seller_done_ = true;
      phi_ = t;
      just_stopped_ = true;
    }
    if (buyer) {
      buyer_done_ = true;
      psi_ = t;
    }
  }

  // sup over t of (H(phi, t) - W_{phi ^ t})^+: F_t - W_t up to phi, then
  // G_phi - W_phi for every later t when phi < T.
  void monitor(double t) {
    if (monitored_out_) return;
    const double w = wealth_ * std::exp(table_.bs.rate * t);
    sup_short_ = std::max(sup_short_, payoff_.holder_value(state_) - w);
    if (just_stopped_) {
      if (phi_ < last_time()) sup_short_ = std::max(sup_short_, payoff_.seller_value(state_) - w);
      monitored_out_ = true;
    }
  }

  void refresh_gamma() { gamma_ = (seller_done_ || k_ >= table_.n) ? 0.0 : table_.gamma(k_, j_); }

  const PayoffFunctional& payoff_;
  const StrategyTable& table_;
  int stride_;
  double dt_;
  long long horizon_;
  double h_ = 0.0;
  PathState state_;
  int k_ = 0, j_ = 0;
  double anchor_ = 0.0;
  double s_disc_ = 0.0;
  double wealth_ = 0.0;
  double gamma_ = 0.0;
  bool seller_done_ = false, buyer_done_ = false, resolved_ = false, monitored_out_ = false, just_stopped_ = false;
  double phi_ = 0.0, psi_ = 0.0;
  double q_ = 0.0;
  double sup_short_ = 0.0;
};

}  // namespace detail

/// Paths are simulated up to T only: the transported times are capped at T,
/// so crossings after T never matter.
inline McResult embed_mc(const PayoffFunctional& payoff, const StrategyTable& table, const McOptions& opt) {
  const BsParams& bs = table.bs;
  bs.validate();
  if (opt.fine_steps < 1) throw std::invalid_argument("embed_mc: fine_steps must be >= 1");
  const int ratio = opt.grid_check ? 2 : 1;
  const long long fine_per_T = static_cast<long long>(table.n) * opt.fine_steps * ratio;
  const double fine_dt = bs.maturity / static_cast<double>(fine_per_T);
  const double drift = -0.5 * bs.volatility * fine_dt;
  const double sd = std::sqrt(fine_dt);

  detail::Accumulator value, shortfall, value_fine, shortfall_fine, diff;
  std::size_t seller_early = 0, buyer_early = 0;
  for (std::size_t path = 0; path < opt.paths; ++path) {
    auto rng = path_rng(opt.seed, path);
    std::normal_distribution<double> normal(0.0, 1.0);
    detail::PathTracker coarse(payoff, table, ratio, fine_dt, fine_per_T);
    detail::PathTracker fine(payoff, table, 1, fine_dt, fine_per_T);
    double b = 0.0;
    for (long long i = 1; i <= fine_per_T; ++i) {
      if (coarse.done() && (!opt.grid_check || fine.done())) break;
      b += drift + sd * normal(rng);
      coarse.step(i, b);
      if (opt.grid_check) fine.step(i, b);
    }
    value.add(coarse.q_value());
    shortfall.add(std::max(0.0, coarse.shortfall()));
    if (coarse.seller_stopped_early()) ++seller_early;
    if (coarse.buyer_stopped_early()) ++buyer_early;
    if (opt.grid_check) {
      value_fine.add(fine.q_value());
      shortfall_fine.add(std::max(0.0, fine.shortfall()));
      diff.add(std::max(0.0, fine.shortfall()) - std::max(0.0, coarse.shortfall()));
    }
  }
  McResult r;
  r.n = table.n;
  r.lattice_value = table.lattice.value;
  r.value = value.stat();
  r.shortfall = shortfall.stat();
  r.value_fine = value_fine.stat();
  r.shortfall_fine = shortfall_fine.stat();
  r.shortfall_diff = diff.stat();
  r.paths = opt.paths;
  r.seller_stop_rate = static_cast<double>(seller_early) / static_cast<double>(std::max<std::size_t>(1, opt.paths));
  r.buyer_stop_rate = static_cast<double>(buyer_early) / static_cast<double>(std::max<std::size_t>(1, opt.paths));
  return r;
}

// ---------------------------------------------------------------------------
// Empirical Lipschitz constants on sampled paths.

struct LipschitzReport {
  double spatial = 0.0;   // max (|dF| + |dDelta|) / ((s+1) d_{0s})
  double temporal = 0.0;  // max (|F_t - F_s| + |Delta_t - Delta_s|) / (|t-s|(1 + sup|v|) + sup_[s,t] |v_u - v_s|)
  double declared = 1.0;
  bool violated = false;
  double worst_temporal_s = 0.0;  // s of the worst temporal pair
  std::size_t samples = 0;
};

namespace detail {

inline void evaluate_along(const PayoffFunctional& payoff, const std::vector<double>& v, double dt,
                           std::vector<double>& f, std::vector<double>& d) {
  f.resize(v.size());
  d.resize(v.size());
  PathState st = payoff.start(v[0]);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) st = payoff.advance(st, v[i], dt);
    f[i] = payoff.holder_value(st);
    d[i] = payoff.penalty_value(st);
  }
}

}  // namespace detail

/// Paths live on a grid of `grid_points` intervals over [0, horizon]. The
/// sampler mixes log-normal walks, piecewise-constant jump paths and paths
/// that jump once early and then freeze (these probe small times).
inline LipschitzReport lipschitz_check(const PayoffFunctional& payoff, std::size_t samples, std::uint64_t seed,
                                       int grid_points = 500, double horizon = 1.0) {
  LipschitzReport rep;
  rep.declared = payoff.lipschitz;
  rep.samples = samples;
  const double dt = horizon / grid_points;
  const auto len = static_cast<std::size_t>(grid_points) + 1;
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_index(0, len - 1);

  auto sample_path = [&](int kind) {
    std::vector<double> v(len);
    const double z = 10.0 + 190.0 * unif(rng);
    if (kind == 0) {
      const double vol = 0.05 + unif(rng);
      double x = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        v[i] = z * std::exp(x);
        x += vol * std::sqrt(dt) * normal(rng);
      }
    } else if (kind == 1) {
      double level = z;
      for (std::size_t i = 0; i < len; ++i) {
        if (i > 0 && unif(rng) < 0.02) level = z * (0.5 + unif(rng));
        v[i] = level;
      }
    } else {
      const std::size_t jump = 1 + static_cast<std::size_t>(unif(rng) * 4.0);
      const double after = z * (0.5 + unif(rng));
      for (std::size_t i = 0; i < len; ++i) v[i] = i < jump ? z : after;
    }
    return v;
  };

  std::vector<double> f1, d1, f2, d2;
  for (std::size_t n = 0; n < samples; ++n) {
    const int kind = static_cast<int>(n % 3);
    const std::vector<double> v = sample_path(kind);
    detail::evaluate_along(payoff, v, dt, f1, d1);

    // Temporal pair (s, t) on the same path; half of them near the origin.
    std::size_t s = n % 2 == 0 ? static_cast<std::size_t>(unif(rng) * 6.0) : any_index(rng);
    std::size_t t = n % 2 == 0 ? s + 1 + static_cast<std::size_t>(unif(rng) * 3.0) : any_index(rng);
    if (s > t) std::swap(s, t);
    t = std::min(t, len - 1);
    if (s != t) {
      double sup_all = 0.0, osc = 0.0;
      for (std::size_t i = 0; i <= t; ++i) sup_all = std::max(sup_all, std::abs(v[i]));
      for (std::size_t i = s; i <= t; ++i) osc = std::max(osc, std::abs(v[i] - v[s]));
      const double num = std::abs(f1[t] - f1[s]) + std::abs(d1[t] - d1[s]);
      const double den = static_cast<double>(t - s) * dt * (1.0 + sup_all) + osc;
      const double ratio = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (ratio > rep.temporal) {
        rep.temporal = ratio;
        rep.worst_temporal_s = static_cast<double>(s) * dt;
      }
    }

    // Spatial pair: a perturbed copy compared at a random time.
    std::vector<double> w = v;
    const double amp = std::pow(10.0, -3.0 + 4.0 * unif(rng));
    for (double& x : w) x = std::max(1e-6, x + amp * (2.0 * unif(rng) - 1.0));
    detail::evaluate_along(payoff, w, dt, f2, d2);
    const std::size_t at = any_index(rng);
    double dist = 0.0;
    for (std::size_t i = 0; i <= at; ++i) dist = std::max(dist, std::abs(v[i] - w[i]));
    const double num = std::abs(f1[at] - f2[at]) + std::abs(d1[at] - d2[at]);
    const double den = (static_cast<double>(at) * dt + 1.0) * dist;
    const double ratio = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.spatial = std::max(rep.spatial, ratio);
  }
  const double limit = rep.declared * (1.0 + 1e-6);
  rep.violated = rep.temporal > limit || rep.spatial > limit;
  return rep;
}

}  // namespace gameopt
