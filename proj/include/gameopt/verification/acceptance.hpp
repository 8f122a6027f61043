#pragma once

// The acceptance suite behind `selftest` and the acceptance binary.
// Reports are deterministic for a fixed seed; wall-clock timings go to the
// optional log stream only.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../bs_bridge.hpp"
#include "../dynkin.hpp"
#include "../game_option.hpp"
#include "../payoff.hpp"
#include "../polyhedral.hpp"
#include "../shortfall.hpp"
#include "../swing.hpp"
#include "../txcost.hpp"
#include "oracles.hpp"
#include "random_instances.hpp"

namespace gameopt::acceptance {

/// 12 significant digits, the report format for every number.
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteOptions {
  std::uint64_t seed = 20261016;
  bool quick = false;            // reduced sizes; same code paths
  std::ostream* log = nullptr;   // progress and timings
};

struct SuiteReport {
  std::uint64_t seed = 0;
  bool quick = false;
  std::vector<CriterionResult> results;

  bool all_pass() const {
    for (const auto& r : results) {
      if (!r.pass) return false;
    }
    return !results.empty();
  }

  std::string text() const {
    std::ostringstream os;
    os << "selftest seed=" << seed << " mode=" << (quick ? "quick" : "full") << '\n';
    for (const auto& r : results) {
      os << 'C' << r.id << ' ' << (r.pass ? "PASS" : "FAIL") << ' ' << r.name << ": " << r.detail << '\n';
    }
    os << "overall " << (all_pass() ? "PASS" : "FAIL") << '\n';
    return os.str();
  }
};

/// Sizes per mode.
struct SuiteSizes {
  int dynkin_instances = 200;
  int penalty_instances = 50;
  int swing_instances = 20;
  int shortfall_instances = 20;
  std::vector<int> convergence_ns{16, 32, 64, 128, 256, 512, 1024, 4096};
  std::size_t embedding_paths = 100000;
  int mc_n = 64;
  std::size_t mc_paths = 100000;
  int poly_functions = 100;
  int poly_points = 1000;
  int minkowski_pairs = 10000;
  int zero_spread_instances = 50;
  int friction_instances = 200;
  int dual_samples = 10000;

  static SuiteSizes make(bool quick) {
    SuiteSizes s;
    if (!quick) return s;
    s.dynkin_instances = 24;
    s.penalty_instances = 10;
    s.swing_instances = 4;
    s.shortfall_instances = 3;
    s.convergence_ns = {16, 32, 64, 128, 512};
    s.embedding_paths = 5000;
    s.mc_n = 16;
    s.mc_paths = 2000;
    s.poly_functions = 20;
    s.poly_points = 200;
    s.minkowski_pairs = 2000;
    s.zero_spread_instances = 10;
    s.friction_instances = 30;
    s.dual_samples = 1000;
    return s;
  }
};

/// Market and payoffs of the convergence and transport runs.
inline BsParams put_market() { return BsParams{110.0, 0.05, 0.2, 1.0}; }
inline PayoffFunctional put_payoff() { return payoffs::vanilla_put(100.0, 4.0); }
inline BsParams russian_market() { return BsParams{100.0, 0.0, 0.2, 1.0}; }
inline PayoffFunctional russian_payoff() { return payoffs::russian(100.0, 0.2); }

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline gen::Rng criterion_rng(std::uint64_t seed, int id) {
  return gen::Rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(id))));
}

class Suite {
public:
  explicit Suite(const SuiteOptions& opt) : opt_(opt), sizes_(SuiteSizes::make(opt.quick)) {}

  SuiteReport run() {
    SuiteReport rep;
    rep.seed = opt_.seed;
    rep.quick = opt_.quick;
    timed(rep, [this] { return dynkin_oracle(); });
    timed(rep, [this] { return dynkin_saddle(); });
    timed(rep, [this] { return penalty_limits(); });
    timed(rep, [this] { return swing(); });
    timed(rep, [this] { return shortfall(); });
    timed(rep, [this] { return convergence(); });
    timed(rep, [this] { return embedding(); });
    timed(rep, [this] { return transport(); });
    timed(rep, [this] { return hedge_shortfall(); });
    timed(rep, [this] { return polyhedral(); });
    timed(rep, [this] { return transaction_costs(); });
    return rep;
  }

private:
  template <class F>
  void timed(SuiteReport& rep, F&& f) {
    const auto t0 = Clock::now();
    CriterionResult r = f();
    if (opt_.log) {
      *opt_.log << "[selftest] C" << r.id << ' ' << (r.pass ? "PASS" : "FAIL") << " in " << num(seconds_since(t0))
                << " s\n";
      opt_.log->flush();
    }
    rep.results.push_back(std::move(r));
  }

  // ---- criteria 1 and 2 share their instances --------------------------

  const std::vector<DynkinInstance>& dynkin_instances() {
    if (dynkin_.empty()) {
      auto rng = criterion_rng(opt_.seed, 1);
      for (int i = 0; i < sizes_.dynkin_instances; ++i) dynkin_.push_back(gen::dynkin_instance(rng, 1 + i % 4));
    }
    return dynkin_;
  }

  CriterionResult dynkin_oracle() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& inst : dynkin_instances()) {
      const double v = solve_dp(inst)[0];
      const BruteForceValues bf = brute_force_values(inst);
      const double s = inst.scale();
      worst = std::max({worst, std::abs(v - bf.upper) / s, std::abs(v - bf.lower) / s});
    }
    const bool fast = seconds_since(t0) < 10.0;
    std::ostringstream d;
    d << "instances=" << dynkin_.size() << " max_rel_err=" << num(worst) << " tol=1e-12 runtime_under_10s="
      << (fast ? "yes" : "no");
    return {1, "dynkin_oracle_equivalence", worst <= 1e-12 && fast, d.str()};
  }

  CriterionResult dynkin_saddle() {
    double worst = 0.0;
    for (const auto& inst : dynkin_instances()) {
      const AdaptedProcess v = solve_dp(inst);
      const StoppingPair pair = epsilon_optimal_times(v, inst, 0.0);
      const SaddleReport rep = verify_saddle(inst, pair.seller, pair.buyer, 0.0);
      worst = std::max({worst, rep.worst_violation, std::abs(rep.value - v[0])});
    }
    std::ostringstream d;
    d << "instances=" << dynkin_.size() << " worst_violation=" << num(worst) << " tol=1e-10";
    return {2, "saddle_point_hitting_times", worst <= 1e-10, d.str()};
  }

  // ---- criterion 3 ------------------------------------------------------

  CriterionResult penalty_limits() {
    auto rng = criterion_rng(opt_.seed, 3);
    int zero_mismatch = 0;
    double worst = 0.0;
    for (int i = 0; i < sizes_.penalty_instances; ++i) {
      const GameTree g = gen::game_tree(rng, 1 + i % 10);
      const EventTree& tree = g.tree;
      const AdaptedProcess& y = g.discounted.lower;
      if (solve_dp(make_game(tree, y, y))[0] != y[0]) ++zero_mismatch;
      const double big = 1e6 * g.discounted.scale();
      AdaptedProcess x = y;
      for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.is_terminal(n)) x[n] += big;
      }
      const double v = solve_dp(make_game(tree, x, y))[0];
      worst = std::max(worst, std::abs(v - oracle::snell(tree, y.values())[0]));
    }
    std::ostringstream d;
    d << "instances=" << sizes_.penalty_instances << " zero_penalty_mismatches=" << zero_mismatch
      << " max_abs_err_vs_snell=" << num(worst) << " tol=1e-9";
    return {3, "penalty_limits", zero_mismatch == 0 && worst <= 1e-9, d.str()};
  }

  // ---- criterion 4 ------------------------------------------------------

  CriterionResult swing() {
    auto rng = criterion_rng(opt_.seed, 4);
    double single_err = 0.0;
    for (int i = 0; i < sizes_.swing_instances; ++i) {
      const SwingSpec spec = gen::swing_spec(rng, 1 + i % 6, 1);
      const double sv = solve_swing(spec).value;
      const double gv = price(build_game(spec.market, spec.upper[0], spec.lower[0])).value;
      single_err = std::max(single_err, std::abs(sv - gv) / std::max(1.0, std::abs(gv)));
    }
    double violation = 0.0, wealth = std::numeric_limits<double>::infinity();
    int two_claims = 0;
    for (int i = 0; i < sizes_.swing_instances; ++i) {
      const int claims = i % 5 == 0 ? 1 : 2;
      two_claims += claims == 2;
      const SwingSpec spec = gen::swing_spec(rng, 1 + i % 4, claims);
      const SwingLayers layers = solve_swing(spec);
      const SwingSaddleReport rep = verify_swing_saddle(layers);
      violation = std::max(violation, rep.worst_violation / layers.scale);
      wealth = std::min(wealth, rep.min_wealth / layers.scale);
    }
    const bool pass = single_err <= 1e-12 && violation <= 1e-10 && wealth >= -1e-9;
    std::ostringstream d;
    d << "single_claim_rel_err=" << num(single_err) << " saddle_instances=" << sizes_.swing_instances
      << " (two_claims=" << two_claims << ") worst_violation_over_scale=" << num(violation)
      << " min_hedge_wealth_over_scale=" << num(wealth);
    return {4, "swing_saddle_and_hedge", pass, d.str()};
  }

  // ---- criterion 5 ------------------------------------------------------

  CriterionResult shortfall() {
    auto rng = criterion_rng(opt_.seed, 5);
    double worst_gap = 0.0, worst_rise = 0.0, worst_tail = 0.0;
    int comparisons = 0;
    for (int i = 0; i < sizes_.shortfall_instances; ++i) {
      ShortfallProblem prob;
      prob.game = gen::game_tree(rng, 1 + i % 3);
      if (i % 2 == 1) prob.physical_prob = gen::uniform(rng, 0.2, 0.8);
      prob.options.wealth_points = 4001;
      prob.options.gamma_points = 2;
      prob.options.structural_candidates = false;
      const double v = price(prob.game).value;
      for (double frac : {0.0, 0.3, 0.7, 1.0}) {
        prob.capital = frac * v;
        const ShortfallResult dp = shortfall_dp(prob);
        const ShortfallBrute bf = shortfall_brute(prob);
        worst_gap = std::max(worst_gap, std::abs(dp.risk - bf.risk) / dp.scale);
        ++comparisons;
        if (frac == 0.0) {
          const double step = dp.grid[1] - dp.grid[0];
          for (std::size_t j = 0; j < dp.root.size(); ++j) {
            if (j > 0) worst_rise = std::max(worst_rise, (dp.root[j] - dp.root[j - 1]) / dp.scale);
            if (dp.grid[j] >= v + step) worst_tail = std::max(worst_tail, std::abs(dp.root[j]));
          }
        }
      }
    }
    // Monotonicity is exact in exact arithmetic; neighbouring grid points use
    // different gamma candidates, so allow rounding at 1e-12 of the scale.
    const bool pass = worst_gap <= 1e-3 && worst_rise <= 1e-12 && worst_tail == 0.0;
    std::ostringstream d;
    d << "instances=" << sizes_.shortfall_instances << " comparisons=" << comparisons
      << " max_gap_over_scale=" << num(worst_gap) << " tol=1e-3 max_rise_over_scale=" << num(worst_rise)
      << " rise_tol=1e-12 max_risk_above_price=" << num(worst_tail);
    return {5, "shortfall_dp_vs_enumeration", pass, d.str()};
  }

  // ---- criteria 6 to 9 --------------------------------------------------

  const ConvergenceReport& put_convergence() {
    if (!put_report_) put_report_ = convergence_report(price_sequence(put_payoff(), put_market(), sizes_.convergence_ns));
    return *put_report_;
  }

  static std::string describe(const ConvergenceReport& r) {
    std::ostringstream d;
    d << "n_ref=" << r.n_ref << " V_ref=" << num(r.reference) << " C_hat=" << num(r.fitted_c) << " errors=[";
    for (std::size_t i = 0; i < r.ns.size(); ++i) d << (i ? " " : "") << r.ns[i] << ':' << num(r.errors[i]);
    d << "] violations=" << r.violations.size();
    return d.str();
  }

  CriterionResult convergence() {
    const auto t0 = Clock::now();
    const ConvergenceReport& put = put_convergence();
    const ConvergenceReport russian =
        convergence_report(price_sequence(russian_payoff(), russian_market(), sizes_.convergence_ns));
    const std::size_t expected = sizes_.convergence_ns.size() - 1;
    const bool complete = put.ns.size() == expected && russian.ns.size() == expected;
    const bool fast = seconds_since(t0) < 300.0;
    std::ostringstream d;
    d << "put{" << describe(put) << "} russian{" << describe(russian) << "} all_n_priced=" << (complete ? "yes" : "no")
      << " runtime_under_5min=" << (fast ? "yes" : "no");
    return {6, "convergence_envelope", put.envelope_respected && russian.envelope_respected && complete && fast,
            d.str()};
  }

  CriterionResult embedding() {
    const SignFrequency f = first_increment_frequency(put_market(), 64, 100, sizes_.embedding_paths,
                                                      splitmix64(opt_.seed + 7));
    const double flagged = static_cast<double>(f.flagged) / static_cast<double>(f.paths);
    const double z = f.sigma > 0.0 ? (f.frequency - f.expected) / f.sigma : 0.0;
    std::ostringstream d;
    d << "paths=" << f.paths << " frequency=" << num(f.frequency) << " p64=" << num(f.expected)
      << " z_score=" << num(z) << " flagged_fraction=" << num(flagged);
    return {7, "embedding_first_increment", std::abs(z) <= 3.0 && flagged < 0.01, d.str()};
  }

  const McResult& transport_run() {
    if (!mc_) {
      const StrategyTable table = build_strategy_table(put_payoff(), put_market(), sizes_.mc_n);
      McOptions mo;
      mo.paths = sizes_.mc_paths;
      mo.seed = splitmix64(opt_.seed + 8);
      mo.fine_steps = 100;
      mo.grid_check = true;
      mc_ = embed_mc(put_payoff(), table, mo);
    }
    return *mc_;
  }

  CriterionResult transport() {
    const McResult& mc = transport_run();
    const double dhat = put_convergence().delta_hat(mc.n);
    const double gap = std::abs(mc.value.mean - mc.lattice_value);
    std::ostringstream d;
    d << "n=" << mc.n << " paths=" << mc.paths << " V_n=" << num(mc.lattice_value) << " estimate=" << num(mc.value.mean)
      << " se=" << num(mc.value.se) << " gap=" << num(gap) << " delta_hat=" << num(dhat)
      << " seller_stop_rate=" << num(mc.seller_stop_rate) << " buyer_stop_rate=" << num(mc.buyer_stop_rate);
    return {8, "strategy_transport", gap <= dhat + 3.0 * mc.value.se, d.str()};
  }

  CriterionResult hedge_shortfall() {
    const McResult& mc = transport_run();
    const double dhat = put_convergence().delta_hat(mc.n);
    const double change = std::abs(mc.shortfall_fine.mean - mc.shortfall.mean);
    const bool bound = mc.shortfall.mean <= dhat + 3.0 * mc.shortfall.se;
    const bool grid = change < 2.0 * mc.shortfall.se;
    std::ostringstream d;
    d << "n=" << mc.n << " mean_shortfall=" << num(mc.shortfall.mean) << " se=" << num(mc.shortfall.se)
      << " delta_hat=" << num(dhat) << " bound_ok=" << (bound ? "yes" : "no")
      << " half_step_mean=" << num(mc.shortfall_fine.mean) << " change=" << num(change)
      << " grid_ok=" << (grid ? "yes" : "no");
    return {9, "hedge_shortfall", bound && grid, d.str()};
  }

  // ---- criterion 10 -----------------------------------------------------

  CriterionResult polyhedral() {
    auto rng = criterion_rng(opt_.seed, 10);
    double worst = 0.0;
    int minkowski_fail = 0, pairs = 0;
    const int pairs_per = std::max(1, sizes_.minkowski_pairs / sizes_.poly_functions);
    for (int i = 0; i < sizes_.poly_functions; ++i) {
      const double d = gen::uniform_int(rng, 1, 16) / 8.0;
      const double c = d + gen::uniform_int(rng, 0, 16) / 8.0;
      const PiecewiseLinear f = gen::lattice_function(rng, d, c);
      const PiecewiseLinear g = gr_transform(f, d, c);
      for (int k = 0; k < sizes_.poly_points; ++k) {
        const double y = gen::uniform_int(rng, -384, 384) / 64.0;
        const double want = oracle::grid_inf_convolution(f, d, c, y, -12.0, 12.0, 1.0 / 64.0);
        worst = std::max(worst, std::abs(g(y) - want) / std::max(1.0, std::abs(want)));
      }
      for (int k = 0; k < pairs_per; ++k, ++pairs) {
        const double y1 = gen::uniform_int(rng, -256, 256) / 64.0;
        const double y2 = gen::uniform_int(rng, -256, 256) / 64.0;
        const double x1 = h_value(d, c, y1) + gen::uniform_int(rng, 0, 64) / 64.0;
        const double x2 = f(y2) + gen::uniform_int(rng, 0, 64) / 64.0;
        const double lhs = x1 + x2, rhs = g(y1 + y2);
        if (lhs < rhs - 1e-12 * std::max(1.0, std::abs(rhs))) ++minkowski_fail;
      }
    }
    std::ostringstream d;
    d << "functions=" << sizes_.poly_functions << " points_per_function=" << sizes_.poly_points
      << " max_rel_err=" << num(worst) << " tol=1e-9 minkowski_pairs=" << pairs << " failures=" << minkowski_fail;
    return {10, "polyhedral_algebra", worst <= 1e-9 && minkowski_fail == 0, d.str()};
  }

  // ---- criterion 11 -----------------------------------------------------

  CriterionResult transaction_costs() {
    auto rng = criterion_rng(opt_.seed, 11);
    double zero_err = 0.0;
    for (int i = 0; i < sizes_.zero_spread_instances; ++i) {
      const gen::ZeroSpreadCase z = gen::zero_spread_case(rng, 1 + i % 6);
      const double v = price(z.game).value;
      const double va = seller_price(z.market, z.payoff).price;
      const double vb = buyer_price(z.market, z.payoff).price;
      const double s = std::max(1.0, std::abs(v));
      zero_err = std::max({zero_err, std::abs(va - v) / s, std::abs(vb - v) / s});
    }

    struct Case {
      FrictionMarket m;
      PayoffVec p;
      TxSideTables seller, buyer;
      TxSuperhedge seller_hedge, buyer_hedge;
      double scale;
    };
    std::vector<Case> cases;
    double order_gap = 0.0, hedge_worst = 0.0, minimal_margin = std::numeric_limits<double>::infinity();
    int ordered_fail = 0, minimality_fail = 0, minimality_checked = 0, failures = 0;
    std::vector<double> grid;
    for (int k = -48; k <= 48; ++k) grid.push_back(k / 16.0);
    for (int i = 0; i < sizes_.friction_instances; ++i) {
      const int depth = 1 + i % 5;
      Case cs;
      cs.m = gen::friction_market(rng, depth);
      cs.p = gen::payoff_vec(rng, cs.m);
      cs.scale = cs.p.scale(cs.m);
      try {
        cs.seller = seller_price(cs.m, cs.p);
        cs.buyer = buyer_price(cs.m, cs.p);
        cs.seller_hedge = seller_superhedge(cs.m, cs.p, cs.seller);
        cs.buyer_hedge = buyer_superhedge(cs.m, cs.p, cs.buyer);
      } catch (const std::exception&) {
        ++failures;
        continue;
      }
      if (cs.seller.price < cs.buyer.price - 1e-9 * cs.scale) ++ordered_fail;
      order_gap = std::min(order_gap, (cs.seller.price - cs.buyer.price) / cs.scale);
      const SuperhedgeCheck a = verify_superhedge(true, cs.m, cs.p, cs.seller_hedge.stop, cs.seller_hedge.portfolio);
      const SuperhedgeCheck b = verify_superhedge(false, cs.m, cs.p, cs.buyer_hedge.stop, cs.buyer_hedge.portfolio);
      hedge_worst = std::max({hedge_worst, a.worst_violation / cs.scale, a.worst_self_financing / cs.scale,
                              b.worst_violation / cs.scale, b.worst_self_financing / cs.scale});
      if (depth <= 3) {
        ++minimality_checked;
        const double need = oracle::grid_superhedge_capital(cs.m, cs.p, grid);
        const double reduced = cs.seller.price - 1e-3 * cs.scale;
        minimal_margin = std::min(minimal_margin, (need - reduced) / cs.scale);
        if (!(need > reduced)) ++minimality_fail;
      }
      cases.push_back(std::move(cs));
    }

    // Dual spot-check: sampled randomized stopping times with approximate
    // martingales never beat the prices from the wrong side.
    int accepted = 0, attempts = 0, dual_fail = 0;
    double dual_worst = 0.0;
    const long long max_attempts = 50LL * sizes_.dual_samples;
    for (std::size_t c = 0; accepted < sizes_.dual_samples && attempts < max_attempts && !cases.empty(); ++c) {
      const Case& cs = cases[c % cases.size()];
      RandomizedStoppingTime chi;
      ApproxMartingale pm;
      ++attempts;
      if (!sample_approx_martingale(cs.m, rng, chi, pm)) continue;
      ++accepted;
      const double up = dual_objective(cs.m, cs.p, cs.seller_hedge.stop, true, chi, pm) - cs.seller.price;
      const double dn = cs.buyer.price - dual_objective(cs.m, cs.p, cs.buyer_hedge.stop, false, chi, pm);
      const double breach = std::max(up, dn) / cs.scale;
      dual_worst = std::max(dual_worst, breach);
      if (breach > 1e-9) ++dual_fail;
    }

    const bool pass = zero_err <= 1e-10 && failures == 0 && ordered_fail == 0 && hedge_worst <= 1e-9 &&
                      minimality_fail == 0 && minimality_checked > 0 && accepted >= sizes_.dual_samples &&
                      dual_fail == 0;
    std::ostringstream d;
    d << "zero_spread_instances=" << sizes_.zero_spread_instances << " zero_spread_rel_err=" << num(zero_err)
      << " friction_instances=" << sizes_.friction_instances << " rejected=" << failures
      << " ask_below_bid=" << ordered_fail << " min_spread_over_scale=" << num(order_gap)
      << " superhedge_worst_over_scale=" << num(hedge_worst) << " minimality_checked=" << minimality_checked
      << " minimality_failures=" << minimality_fail << " min_margin_over_scale=" << num(minimal_margin)
      << " dual_samples=" << accepted << " dual_attempts=" << attempts << " dual_breaches=" << dual_fail
      << " dual_worst_over_scale=" << num(dual_worst);
    return {11, "transaction_costs", pass, d.str()};
  }

  SuiteOptions opt_;
  SuiteSizes sizes_;
  std::vector<DynkinInstance> dynkin_;
  std::optional<ConvergenceReport> put_report_;
  std::optional<McResult> mc_;
};

}  // namespace detail

inline SuiteReport run_suite(const SuiteOptions& opt) { return detail::Suite(opt).run(); }

/// Determinism: two complete runs with the same seed must serialize to the
/// same bytes.
inline CriterionResult determinism(const std::string& first, const std::string& second) {
  std::size_t line = 0, at = 0;
  const bool same = first == second;
  if (!same) {
    const std::size_t n = std::min(first.size(), second.size());
    while (at < n && first[at] == second[at]) {
      if (first[at] == '\n') ++line;
      ++at;
    }
  }
  std::ostringstream d;
  d << "bytes=" << first.size() << '/' << second.size();
  if (!same) d << " first_difference_line=" << line + 1;
  return {12, "determinism", same, d.str()};
}

}  // namespace gameopt::acceptance
