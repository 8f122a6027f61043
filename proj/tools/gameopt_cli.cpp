// gameopt: command-line front end for pricing, hedging and verification runs.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gameopt/gameopt.hpp"
#include "gameopt/io.hpp"
#include "gameopt/verification/acceptance.hpp"
#include "gameopt/verification/oracles.hpp"

namespace {

using namespace gameopt;
using io::ConfigError;
using io::ConfigView;
using io::json;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quick = false;
};

/// Exit codes: 0 success, 1 failed acceptance check, 2 rejected config or instance.
constexpr int kExitFailed = 1;
constexpr int kExitRejected = 2;

json load(const Common& c) {
  if (c.config.empty()) return json::object();
  return io::load_json(c.config);
}

json provenance(const std::string& sub, const Common& c) {
  json j;
  j["subcommand"] = sub;
  j["config_file"] = c.config;
  return j;
}

void emit(const fs::path& dir, const std::string& name, const std::string& content) {
  io::write_atomic(dir / name, content);
  std::cerr << "wrote " << (dir / name).string() << "\n";
}

/// Holder and seller payoffs on the tree, from either a payoff spec or
/// explicit per-node arrays.
struct TreePayoff {
  GameTree game;
  bool from_nodes = false;
};

TreePayoff read_tree_game(ConfigView& v, const CrrParams& market, json& resolved) {
  const double step_length = v.number("step_length", 1.0);
  const bool keep = v.boolean("keep_terminal_penalty", false);
  resolved["step_length"] = step_length;
  resolved["keep_terminal_penalty"] = keep;
  if (market.steps > kMaxTreeSteps) {
    throw ConfigError("config: key 'market.steps' = " + std::to_string(market.steps) +
                      " exceeds the tree limit " + std::to_string(kMaxTreeSteps));
  }
  TreePayoff t;
  if (v.has("nodes")) {
    ConfigView nodes = v.object("nodes");
    const std::size_t size = io::tree_size(market.steps);
    const AdaptedProcess seller = io::read_nodes(nodes, "seller", size);
    const AdaptedProcess holder = io::read_nodes(nodes, "holder", size);
    nodes.finish();
    resolved["nodes"] = {{"seller", seller.values()}, {"holder", holder.values()}};
    try {
      t.game = build_game(market, seller, holder);
      t.game.discounted.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: instance rejected: ") + e.what());
    }
    t.from_nodes = true;
    return t;
  }
  json pr;
  const PayoffFunctional payoff = io::read_payoff(v.object("payoff"), pr);
  resolved["payoff"] = pr;
  try {
    t.game = build_game(GameOptionInstance{market, payoff, step_length, keep});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: instance rejected: ") + e.what());
  }
  return t;
}

struct TimeSummary {
  double prob_before_horizon = 0.0;
  double expected = 0.0;
};

TimeSummary summarize(const EventTree& tree, const PureStoppingTime& t) {
  TimeSummary s;
  for (NodeIndex leaf : tree.leaves()) {
    const double p = tree.reach_probability(leaf);
    const int k = t.time_on(tree, leaf);
    s.expected += p * k;
    if (k < tree.depth()) s.prob_before_horizon += p;
  }
  return s;
}

json summary_json(const TimeSummary& s) {
  return {{"prob_before_horizon", io::number(s.prob_before_horizon)}, {"expected_time", io::number(s.expected)}};
}

// ---------------------------------------------------------------------------

int run_price(const Common& c) {
  json cfg = load(c);
  ConfigView v(cfg, "");
  json resolved = provenance("price", c);
  json mr;
  const CrrParams market = io::read_crr(v.object("market"), mr);
  resolved["market"] = mr;
  const bool verify = v.boolean("verify", true);
  const long long bound = v.integer("enumeration_bound", kDefaultEnumerationBound);
  const double tol = v.number("tolerance", 1e-10);
  const bool value_csv = v.boolean("value_csv", false);
  if (bound < 0 || bound > kDefaultEnumerationBound) {
    throw ConfigError("config: key 'enumeration_bound' must lie in [0, " + std::to_string(kDefaultEnumerationBound) +
                      "]");
  }
  resolved["verify"] = verify;
  resolved["enumeration_bound"] = bound;
  resolved["tolerance"] = tol;
  resolved["value_csv"] = value_csv;

  const fs::path dir = io::output_dir(c.out);
  json report;

  // Large Markov instances go to the recombining lattice.
  if (market.steps > kMaxTreeSteps && !v.has("nodes")) {
    const double step_length = v.number("step_length", 1.0);
    const bool keep = v.boolean("keep_terminal_penalty", false);
    json pr;
    const PayoffFunctional payoff = io::read_payoff(v.object("payoff"), pr);
    v.finish();
    resolved["payoff"] = pr;
    resolved["step_length"] = step_length;
    resolved["keep_terminal_penalty"] = keep;
    if (payoff.structure != PayoffStructure::markov) {
      throw ConfigError("config: instance rejected: " + std::to_string(market.steps) +
                        " steps needs a Markov payoff (put, call or constant)");
    }
    const LatticeGame lat = price_markov_lattice(market, payoff, {step_length, keep, true});
    io::Csv csv(resolved, {"k", "j", "value_disc", "seller_stop", "buyer_stop", "gamma", "bond"});
    for (std::size_t k = 0; k < lat.values.size(); ++k) {
      for (std::size_t j = 0; j < lat.values[k].size(); ++j) {
        csv.cell(k).cell(j).cell(lat.values[k][j]).cell(int(lat.seller_stop[k][j])).cell(int(lat.buyer_stop[k][j]));
        csv.cell(lat.gamma[k][j]).cell(lat.bond[k][j]).end_row();
      }
    }
    emit(dir, "price_hedge.csv", csv.str());
    report["config"] = resolved;
    report["method"] = "recombining_lattice";
    report["value"] = io::number(lat.value);
    report["hedge_table"] = "price_hedge.csv";
    emit(dir, "price.json", io::dump(report));
    std::cout << "value " << acceptance::num(lat.value) << "\n";
    return 0;
  }

  const TreePayoff tp = read_tree_game(v, market, resolved);
  v.finish();
  const GameTree& g = tp.game;
  const EventTree& tree = g.tree;
  const GamePrice p = price(g);
  const StoppingPair times = rational_times(g, p);
  const HedgePortfolio hedge = extract_hedge(g, p, times.seller);
  const HedgeCheck hc = verify_hedge(g, hedge, times.seller);

  io::Csv csv(resolved, {"node", "prefix", "level", "stock", "holder", "seller", "value_disc", "seller_stop",
                         "buyer_stop", "gamma", "bond", "wealth"});
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    csv.cell(i).cell(io::prefix_string(tree, i)).cell(tree.level(i)).cell(g.stock[i]).cell(g.holder[i]);
    csv.cell(g.seller[i]).cell(p.value_process[i]).cell(int(times.seller.stops_at(tree, i)));
    csv.cell(int(times.buyer.stops_at(tree, i))).cell(hedge.stock[i]).cell(hedge.bond[i]).cell(hedge.wealth[i]);
    csv.end_row();
  }
  emit(dir, "price_hedge.csv", csv.str());
  if (value_csv) {
    io::Csv vc(resolved, {"node", "prefix", "level", "value"});
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      const double b = g.bond[static_cast<std::size_t>(tree.level(i))];
      vc.cell(i).cell(io::prefix_string(tree, i)).cell(tree.level(i)).cell(p.value_process[i] * b).end_row();
    }
    emit(dir, "price_values.csv", vc.str());
  }

  report["config"] = resolved;
  report["method"] = "tree";
  report["value"] = io::number(p.value);
  report["seller_time"] = summary_json(summarize(tree, times.seller));
  report["buyer_time"] = summary_json(summarize(tree, times.buyer));
  report["hedge"] = {{"table", "price_hedge.csv"},
                     {"initial_wealth", io::number(hedge.initial_wealth)},
                     {"worst_shortfall", io::number(hc.worst_shortfall)},
                     {"worst_self_financing", io::number(hc.worst_self_financing)},
                     {"worst_martingale", io::number(hc.worst_martingale)}};
  if (verify && tree.depth() <= bound) {
    const BruteForceValues bf = brute_force_values(g.discounted, static_cast<int>(bound));
    const SaddleReport sr = verify_saddle(g.discounted, times.seller, times.buyer, 0.0, static_cast<int>(bound));
    const double s = g.discounted.scale();
    const bool ok = std::abs(bf.upper - p.value) <= tol * s && std::abs(bf.lower - p.value) <= tol * s &&
                    sr.worst_violation <= tol * s;
    report["verification"] = {{"enumerated", true},
                              {"min_max", io::number(bf.upper)},
                              {"max_min", io::number(bf.lower)},
                              {"saddle_violation", io::number(sr.worst_violation)},
                              {"pass", ok}};
  } else {
    report["verification"] = {{"enumerated", false}};
  }
  emit(dir, "price.json", io::dump(report));
  std::cout << "value " << acceptance::num(p.value) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_swing(const Common& c) {
  json cfg = load(c);
  ConfigView v(cfg, "");
  json resolved = provenance("swing", c);
  json mr;
  SwingSpec spec;
  spec.market = io::read_crr(v.object("market"), mr);
  resolved["market"] = mr;
  spec.claims = static_cast<int>(v.integer("claims"));
  resolved["claims"] = spec.claims;
  if (spec.claims < 1) throw ConfigError("config: key 'claims' must be at least 1");
  if (spec.market.steps > kMaxTreeSteps) {
    throw ConfigError("config: key 'market.steps' exceeds the tree limit " + std::to_string(kMaxTreeSteps));
  }
  const double step_length = v.number("step_length", 1.0);
  const bool verify = v.boolean("verify", true);
  const double tol = v.number("tolerance", 1e-10);
  resolved["step_length"] = step_length;
  resolved["verify"] = verify;
  resolved["tolerance"] = tol;
  const std::size_t size = io::tree_size(spec.market.steps);
  if (v.has("nodes")) {
    json arr = json::array();
    for (ConfigView n : v.objects("nodes")) {
      spec.upper.push_back(io::read_nodes(n, "seller", size));
      spec.lower.push_back(io::read_nodes(n, "holder", size));
      n.finish();
      arr.push_back({{"seller", spec.upper.back().values()}, {"holder", spec.lower.back().values()}});
    }
    resolved["nodes"] = arr;
  } else {
    json arr = json::array();
    for (ConfigView pv : v.objects("payoffs")) {
      json pr;
      const PayoffFunctional payoff = io::read_payoff(pv, pr);
      arr.push_back(pr);
      const GameTree g = build_game(GameOptionInstance{spec.market, payoff, step_length, false});
      spec.upper.push_back(g.seller);
      spec.lower.push_back(g.holder);
    }
    resolved["payoffs"] = arr;
  }
  v.finish();
  if (static_cast<int>(spec.upper.size()) != spec.claims) {
    throw ConfigError("config: expected one payoff per claim (" + std::to_string(spec.claims) + "), got " +
                      std::to_string(spec.upper.size()));
  }
  SwingLayers layers;
  try {
    layers = solve_swing(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: instance rejected: ") + e.what());
  }
  const EventTree& tree = layers.tree;
  const fs::path dir = io::output_dir(c.out);

  io::Csv lc(resolved, {"layer", "node", "prefix", "level", "X", "Y", "V", "seller_hit", "buyer_hit", "gamma"});
  const double slack = kHitSlack * layers.scale;
  for (int k = 1; k <= layers.claims; ++k) {
    const auto ku = static_cast<std::size_t>(k - 1);
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      const double vv = layers.V[ku][i];
      lc.cell(k).cell(i).cell(io::prefix_string(tree, i)).cell(tree.level(i));
      lc.cell(layers.X[ku][i]).cell(layers.Y[ku][i]).cell(vv);
      lc.cell(int(std::abs(layers.X[ku][i] - vv) <= slack)).cell(int(std::abs(layers.Y[ku][i] - vv) <= slack));
      lc.cell(swing_gamma(layers, i, k)).end_row();
    }
  }
  emit(dir, "swing_layers.csv", lc.str());

  const SwingStrategy seller = optimal_seller(layers), buyer = optimal_buyer(layers);
  const SwingTranscript tr = play(layers, seller, buyer);
  std::vector<std::string> header{"leaf", "prefix", "probability"};
  for (int i = 1; i <= layers.claims; ++i) {
    header.push_back("sigma_" + std::to_string(i));
    header.push_back("tau_" + std::to_string(i));
  }
  header.push_back("payoff_disc");
  io::Csv tc(resolved, header);
  const auto leaves = tree.leaves();
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    tc.cell(leaves[l]).cell(io::prefix_string(tree, leaves[l])).cell(tree.reach_probability(leaves[l]));
    for (int i = 0; i < layers.claims; ++i) {
      tc.cell(tr.sigma[l][static_cast<std::size_t>(i)]).cell(tr.tau[l][static_cast<std::size_t>(i)]);
    }
    tc.cell(tr.payoff[l]).end_row();
  }
  emit(dir, "swing_transcripts.csv", tc.str());

  json report;
  report["config"] = resolved;
  report["value"] = io::number(layers.value);
  json lv = json::array();
  for (int k = 1; k <= layers.claims; ++k) lv.push_back(io::number(layers.layer_value(k)[0]));
  report["layer_values"] = lv;
  report["optimal_play_value"] = io::number(tr.value);
  const SwingHedgeRun run = swing_hedge(layers, seller, buyer);
  report["hedge_min_wealth_optimal_play"] = io::number(run.min_wealth);
  if (verify && tree.depth() <= kSwingMaxSteps && layers.claims <= kSwingMaxClaims) {
    const SwingSaddleReport sr = verify_swing_saddle(layers);
    report["verification"] = {{"enumerated", true},
                              {"buyer_best", io::number(sr.buyer_best)},
                              {"seller_best", io::number(sr.seller_best)},
                              {"worst_violation", io::number(sr.worst_violation)},
                              {"min_hedge_wealth", io::number(sr.min_wealth)},
                              {"pass", sr.worst_violation <= tol * layers.scale &&
                                           sr.min_wealth >= -10.0 * tol * layers.scale}};
  } else {
    report["verification"] = {{"enumerated", false}};
  }
  report["tables"] = {"swing_layers.csv", "swing_transcripts.csv"};
  emit(dir, "swing.json", io::dump(report));
  std::cout << "value " << acceptance::num(layers.value) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_shortfall(const Common& c) {
  json cfg = load(c);
  ConfigView v(cfg, "");
  json resolved = provenance("shortfall", c);
  json mr;
  const CrrParams market = io::read_crr(v.object("market"), mr);
  resolved["market"] = mr;
  ShortfallProblem prob;
  prob.game = read_tree_game(v, market, resolved).game;
  prob.options.wealth_points = static_cast<int>(v.integer("wealth_points", prob.options.wealth_points));
  prob.options.wealth_max = v.number("wealth_max", 0.0);
  prob.options.gamma_points = static_cast<int>(v.integer("gamma_points", prob.options.gamma_points));
  prob.options.structural_candidates = v.boolean("structural_candidates", true);
  if (v.has("physical_prob")) prob.physical_prob = v.number("physical_prob");
  const bool brute = v.boolean("brute_check", false);
  const double v0 = price(prob.game).value;
  std::vector<double> xs;
  if (v.has("capital")) {
    xs = v.numbers("capital");
  } else {
    double from = 0.0, to = 1.2 * v0;
    long long points = 25;
    if (v.has("x_sweep")) {
      ConfigView sw = v.object("x_sweep");
      from = sw.number("from", from);
      to = sw.number("to", to);
      points = sw.integer("points", points);
      sw.finish();
    }
    if (points < 1) throw ConfigError("config: key 'x_sweep.points' must be at least 1");
    for (long long i = 0; i < points; ++i) {
      xs.push_back(points == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
  }
  v.finish();
  resolved["wealth_points"] = prob.options.wealth_points;
  resolved["wealth_max"] = prob.options.wealth_max;
  resolved["gamma_points"] = prob.options.gamma_points;
  resolved["structural_candidates"] = prob.options.structural_candidates;
  resolved["physical_prob"] = prob.physical_prob ? json(*prob.physical_prob) : json(nullptr);
  resolved["brute_check"] = brute;
  resolved["capital"] = xs;
  if (brute && market.steps > kShortfallBruteMaxSteps) {
    throw ConfigError("config: key 'brute_check' needs market.steps <= " + std::to_string(kShortfallBruteMaxSteps));
  }
  try {
    prob.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: instance rejected: ") + e.what());
  }

  std::vector<std::string> header{"x", "risk"};
  if (brute) header.push_back("risk_enumerated");
  io::Csv csv(resolved, header);
  json risks = json::array();
  std::size_t clamped = 0;
  for (double x : xs) {
    if (x < 0.0) throw ConfigError("config: key 'capital' entries must be nonnegative");
    prob.capital = x;
    const ShortfallResult r = shortfall_dp(prob);
    clamped += r.clamped;
    csv.cell(x).cell(r.risk);
    json row = {{"x", io::number(x)}, {"risk", io::number(r.risk)}};
    if (brute) {
      const double b = shortfall_brute(prob).risk;
      csv.cell(b);
      row["risk_enumerated"] = io::number(b);
    }
    csv.end_row();
    risks.push_back(row);
  }
  const fs::path dir = io::output_dir(c.out);
  emit(dir, "shortfall.csv", csv.str());
  json report;
  report["config"] = resolved;
  report["price"] = io::number(v0);
  report["risk"] = risks;
  report["clamped_lookups"] = clamped;
  report["table"] = "shortfall.csv";
  emit(dir, "shortfall.json", io::dump(report));
  std::cout << "price " << acceptance::num(v0) << " points " << xs.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_converge(const Common& c) {
  json cfg = load(c);
  ConfigView v(cfg, "");
  json resolved = provenance("converge", c);
  json pr, br;
  const PayoffFunctional payoff = io::read_payoff(v.object("payoff"), pr);
  const BsParams bs = io::read_bs(v.object("bs"), br);
  const std::vector<int> ns = v.integers("ns", std::vector<int>{16, 32, 64, 128, 256, 512, 1024, 4096});
  const int fit = static_cast<int>(v.integer("fit_max_n", 64));
  v.finish();
  for (int n : ns) {
    if (n < 1) throw ConfigError("config: key 'ns' entries must be positive");
  }
  resolved["payoff"] = pr;
  resolved["bs"] = br;
  resolved["ns"] = ns;
  resolved["fit_max_n"] = fit;

  const std::vector<PriceEntry> table = price_sequence(payoff, bs, ns);
  const ConvergenceReport rep = convergence_report(table, fit);
  io::Csv csv(resolved, {"n", "value", "error", "envelope", "status"});
  json rows = json::array();
  for (const PriceEntry& e : table) {
    csv.cell(e.n).cell(e.value);
    double err = std::numeric_limits<double>::quiet_NaN();
    double env = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < rep.ns.size(); ++i) {
      if (rep.ns[i] == e.n) {
        err = rep.errors[i];
        env = rep.envelope[i];
      }
    }
    csv.cell(err).cell(env).cell(e.ok ? (e.n == rep.n_ref ? std::string("reference") : std::string("ok"))
                                      : "error: " + e.error);
    csv.end_row();
    rows.push_back({{"n", e.n}, {"value", io::number(e.value)}, {"error", io::number(err)}, {"envelope", io::number(env)},
                    {"ok", e.ok}, {"message", e.error}});
  }
  const fs::path dir = io::output_dir(c.out);
  emit(dir, "converge.csv", csv.str());
  json report;
  report["config"] = resolved;
  report["n_ref"] = rep.n_ref;
  report["reference"] = io::number(rep.reference);
  report["fitted_c"] = io::number(rep.fitted_c);
  report["envelope_respected"] = rep.envelope_respected;
  report["violations"] = rep.violations;
  report["entries"] = rows;
  report["table"] = "converge.csv";
  emit(dir, "converge.json", io::dump(report));
  std::cout << "reference " << acceptance::num(rep.reference) << " C_hat " << acceptance::num(rep.fitted_c)
            << " envelope " << (rep.envelope_respected ? "respected" : "violated") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_embed_mc(const Common& c) {
  json cfg = load(c);
  ConfigView v(cfg, "");
  json resolved = provenance("embed-mc", c);
  json pr, br;
  const PayoffFunctional payoff = io::read_payoff(v.object("payoff"), pr);
  const BsParams bs = io::read_bs(v.object("bs"), br);
  const int n = static_cast<int>(v.integer("n", 64));
  const long long paths = v.integer("paths", 100000);
  const int fine = static_cast<int>(v.integer("fine_steps", 100));
  const bool grid_check = v.boolean("grid_check", true);
  const std::string table_file = v.string("table", "");
  const long long first_paths = v.integer("first_increment_paths", 0);
  std::optional<double> delta_hat;
  if (v.has("delta_hat")) delta_hat = v.number("delta_hat");
  std::uint64_t seed;
  if (c.seed) {
    seed = *c.seed;
    v.has("seed") ? (void)v.seed("seed") : (void)0;
  } else {
    if (!v.has("seed")) throw ConfigError("config: missing key 'seed' (required by embed-mc; or pass --seed)");
    seed = v.seed("seed");
  }
  v.finish();
  if (n < 1) throw ConfigError("config: key 'n' must be positive");
  if (paths < 10000) throw ConfigError("config: key 'paths' must be at least 10000");
  if (fine < 1) throw ConfigError("config: key 'fine_steps' must be positive");
  resolved["payoff"] = pr;
  resolved["bs"] = br;
  resolved["n"] = n;
  resolved["paths"] = paths;
  resolved["fine_steps"] = fine;
  resolved["grid_check"] = grid_check;
  resolved["table"] = table_file;
  resolved["first_increment_paths"] = first_paths;
  resolved["delta_hat"] = delta_hat ? json(*delta_hat) : json(nullptr);
  resolved["seed"] = seed;

  const fs::path dir = io::output_dir(c.out);
  StrategyTable table;
  if (!table_file.empty()) {
    std::ifstream in(table_file);
    if (!in) throw ConfigError("config: key 'table': cannot open '" + table_file + "'");
    table = read_strategy_table(in);
    if (table.n != n || table.payoff_id != payoff.id) {
      throw ConfigError("config: key 'table': table is for payoff '" + table.payoff_id + "' with n = " +
                        std::to_string(table.n));
    }
  } else {
    try {
      table = build_strategy_table(payoff, bs, n);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: instance rejected: ") + e.what());
    }
    std::ostringstream os;
    write_strategy_table(os, table);
    emit(dir, "strategy_table.txt", os.str());
  }

  McOptions mo;
  mo.paths = static_cast<std::size_t>(paths);
  mo.seed = seed;
  mo.fine_steps = fine;
  mo.grid_check = grid_check;
  const McResult r = embed_mc(payoff, table, mo);

  auto stat = [](const McStat& s) { return json{{"mean", io::number(s.mean)}, {"se", io::number(s.se)}}; };
  json report;
  report["config"] = resolved;
  report["lattice_value"] = io::number(r.lattice_value);
  report["value"] = stat(r.value);
  report["value_gap"] = io::number(std::abs(r.value.mean - r.lattice_value));
  report["shortfall"] = stat(r.shortfall);
  if (grid_check) {
    report["value_half_step"] = stat(r.value_fine);
    report["shortfall_half_step"] = stat(r.shortfall_fine);
    report["shortfall_change"] = stat(r.shortfall_diff);
  }
  report["seller_stop_rate"] = io::number(r.seller_stop_rate);
  report["buyer_stop_rate"] = io::number(r.buyer_stop_rate);
  if (delta_hat) {
    report["transport_within_bound"] = std::abs(r.value.mean - r.lattice_value) <= *delta_hat + 3.0 * r.value.se;
    report["shortfall_within_bound"] = r.shortfall.mean <= *delta_hat + 3.0 * r.shortfall.se;
  }
  if (first_paths > 0) {
    const SignFrequency f = first_increment_frequency(bs, n, fine, static_cast<std::size_t>(first_paths), seed);
    report["first_increment"] = {{"paths", f.paths},
                                 {"frequency", io::number(f.frequency)},
                                 {"expected", io::number(f.expected)},
                                 {"sigma", io::number(f.sigma)},
                                 {"flagged", f.flagged}};
  }
  io::Csv csv(resolved, {"quantity", "mean", "se"});
  csv.cell(std::string("value")).cell(r.value.mean).cell(r.value.se).end_row();
  csv.cell(std::string("shortfall")).cell(r.shortfall.mean).cell(r.shortfall.se).end_row();
  if (grid_check) {
    csv.cell(std::string("value_half_step")).cell(r.value_fine.mean).cell(r.value_fine.se).end_row();
    csv.cell(std::string("shortfall_half_step")).cell(r.shortfall_fine.mean).cell(r.shortfall_fine.se).end_row();
  }
  emit(dir, "embed_mc.csv", csv.str());
  emit(dir, "embed_mc.json", io::dump(report));
  std::cout << "V_n " << acceptance::num(r.lattice_value) << " estimate " << acceptance::num(r.value.mean) << " se "
            << acceptance::num(r.value.se) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_txcost(const Common& c) {
  json cfg = load(c);
  ConfigView v(cfg, "");
  json resolved = provenance("txcost", c);
  json ir;
  io::TxInstance inst;
  if (v.has("instance_file")) {
    const std::string file = v.string("instance_file");
    const json sub = io::load_json(file);
    inst = io::read_tx_instance(ConfigView(sub, "instance_file"), ir);
    resolved["instance_file"] = file;
  } else {
    inst = io::read_tx_instance(v.object("instance"), ir);
  }
  resolved["instance"] = ir;
  const long long dual = v.integer("dual_samples", 0);
  const bool minimality = v.boolean("minimality_check", false);
  const double grid_step = v.number("grid_step", 1.0 / 16.0);
  const double grid_range = v.number("grid_range", 3.0);
  std::optional<std::uint64_t> seed = c.seed;
  if (v.has("seed")) {
    const std::uint64_t s = v.seed("seed");
    if (!seed) seed = s;
  }
  v.finish();
  if (dual < 0) throw ConfigError("config: key 'dual_samples' must be nonnegative");
  if (dual > 0 && !seed) throw ConfigError("config: missing key 'seed' (required when dual_samples > 0)");
  if (minimality && inst.market.tree.depth() > 3) {
    throw ConfigError("config: key 'minimality_check' needs depth <= 3");
  }
  if (minimality && !(grid_step > 0.0 && grid_range >= grid_step)) {
    throw ConfigError("config: keys 'grid_step'/'grid_range' must be positive with range >= step");
  }
  resolved["dual_samples"] = dual;
  resolved["minimality_check"] = minimality;
  resolved["grid_step"] = grid_step;
  resolved["grid_range"] = grid_range;
  resolved["seed"] = seed ? json(*seed) : json(nullptr);

  const FrictionMarket& m = inst.market;
  const PayoffVec& p = inst.payoff;
  TxSideTables sa, sb;
  try {
    sa = seller_price(m, p);
    sb = buyer_price(m, p);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("config: instance rejected: ") + e.what());
  }
  const TxSuperhedge hs = seller_superhedge(m, p, sa);
  const TxSuperhedge hb = buyer_superhedge(m, p, sb);
  const SuperhedgeCheck cs = verify_superhedge(true, m, p, hs.stop, hs.portfolio);
  const SuperhedgeCheck cb = verify_superhedge(false, m, p, hb.stop, hb.portfolio);
  const double scale = p.scale(m);
  const EventTree& tree = m.tree;

  io::Csv csv(resolved, {"node", "prefix", "level", "bid", "ask", "seller_stop", "seller_cash", "seller_shares",
                         "buyer_stop", "buyer_cash", "buyer_shares"});
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    csv.cell(i).cell(io::prefix_string(tree, i)).cell(tree.level(i)).cell(m.bid[i]).cell(m.ask[i]);
    csv.cell(int(hs.stop.stops_at(tree, i))).cell(hs.portfolio.cash[i]).cell(hs.portfolio.shares[i]);
    csv.cell(int(hb.stop.stops_at(tree, i))).cell(hb.portfolio.cash[i]).cell(hb.portfolio.shares[i]).end_row();
  }
  const fs::path dir = io::output_dir(c.out);
  emit(dir, "txcost_strategies.csv", csv.str());

  json report;
  report["config"] = resolved;
  report["ask_price"] = io::number(sa.price);
  report["bid_price"] = io::number(sb.price);
  auto check = [&](const SuperhedgeCheck& k) {
    return json{{"worst_violation", io::number(k.worst_violation)},
                {"worst_self_financing", io::number(k.worst_self_financing)},
                {"pass", k.worst_violation <= 1e-9 * scale && k.worst_self_financing <= 1e-9 * scale}};
  };
  report["seller_superhedge"] = check(cs);
  report["buyer_superhedge"] = check(cb);
  if (minimality) {
    std::vector<double> grid;
    const auto half = static_cast<long long>(std::floor(grid_range / grid_step + 1e-9));
    for (long long k = -half; k <= half; ++k) grid.push_back(static_cast<double>(k) * grid_step);
    const double need = oracle::grid_superhedge_capital(m, p, grid);
    report["minimality"] = {{"grid_capital", io::number(need)},
                            {"reduced_capital", io::number(sa.price - 1e-3 * scale)},
                            {"reduced_fails", need > sa.price - 1e-3 * scale}};
  }
  if (dual > 0) {
    std::mt19937_64 rng(splitmix64(*seed));
    long long accepted = 0, attempts = 0, breaches = 0;
    double worst = 0.0;
    while (accepted < dual && attempts < 50 * dual) {
      ++attempts;
      RandomizedStoppingTime chi;
      ApproxMartingale pm;
      if (!sample_approx_martingale(m, rng, chi, pm)) continue;
      ++accepted;
      const double up = dual_objective(m, p, hs.stop, true, chi, pm) - sa.price;
      const double dn = sb.price - dual_objective(m, p, hb.stop, false, chi, pm);
      const double b = std::max(up, dn) / scale;
      worst = std::max(worst, b);
      if (b > 1e-9) ++breaches;
    }
    report["dual"] = {{"samples", accepted}, {"attempts", attempts}, {"breaches", breaches},
                      {"worst_over_scale", io::number(worst)}};
  }
  report["table"] = "txcost_strategies.csv";
  emit(dir, "txcost.json", io::dump(report));
  std::cout << "ask " << acceptance::num(sa.price) << " bid " << acceptance::num(sb.price) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_selftest(const Common& c) {
  acceptance::SuiteOptions opt;
  json cfg = load(c);
  ConfigView v(cfg, "");
  if (v.has("seed")) opt.seed = v.seed("seed");
  opt.quick = v.boolean("quick", false);
  v.finish();
  if (c.seed) opt.seed = *c.seed;
  opt.quick = opt.quick || c.quick;
  opt.log = &std::cerr;
  json resolved = provenance("selftest", c);
  resolved["seed"] = opt.seed;
  resolved["quick"] = opt.quick;

  const acceptance::SuiteReport rep = acceptance::run_suite(opt);
  const std::string text = rep.text();
  json report;
  report["config"] = resolved;
  json rows = json::array();
  for (const auto& r : rep.results) {
    rows.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
  }
  report["criteria"] = rows;
  report["pass"] = rep.all_pass();
  const fs::path dir = io::output_dir(c.out);
  emit(dir, "selftest_report.txt", "# config " + resolved.dump() + "\n" + text);
  emit(dir, "selftest.json", io::dump(report));
  std::cout << text;
  return rep.all_pass() ? 0 : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gameopt: game option pricing, hedging and verification"};
  app.require_subcommand(1);
  Common common;

  auto add = [&](const std::string& name, const std::string& about, bool needs_config) {
    CLI::App* sub = app.add_subcommand(name, about);
    auto* opt = sub->add_option("-c,--config", common.config, "JSON configuration file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", common.out, "output directory (default: $GAMEOPT_OUT_DIR or .)");
    sub->add_option("-s,--seed", common.seed, "64-bit seed (overrides the config)");
    return sub;
  };
  CLI::App* price = add("price", "price a game option on a binomial tree and extract the hedge", true);
  CLI::App* swing = add("swing", "price and verify a swing game option", true);
  CLI::App* shortfall = add("shortfall", "shortfall risk over a sweep of initial capitals", true);
  CLI::App* converge = add("converge", "binomial price sequence and the fitted error envelope", true);
  CLI::App* embed = add("embed-mc", "Monte Carlo of transported stopping times and hedges", true);
  CLI::App* txcost = add("txcost", "ask and bid prices under a bid/ask spread with superhedges", true);
  CLI::App* selftest = add("selftest", "run the acceptance suite", false);
  selftest->add_flag("--quick", common.quick, "reduced sizes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (price->parsed()) return run_price(common);
    if (swing->parsed()) return run_swing(common);
    if (shortfall->parsed()) return run_shortfall(common);
    if (converge->parsed()) return run_converge(common);
    if (embed->parsed()) return run_embed_mc(common);
    if (txcost->parsed()) return run_txcost(common);
    if (selftest->parsed()) return run_selftest(common);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitRejected;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRejected;
  }
  return 0;
}
