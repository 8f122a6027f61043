#pragma once

// Configuration ingestion and report emission for the command-line tool.
//
// Configs are JSON objects. Every key a reader does not consume is an
// error, so typos surface instead of silently falling back to defaults.
// Numbers in reports carry 12 significant digits.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bs_bridge.hpp"
#include "game_option.hpp"
#include "market_lattice.hpp"
#include "payoff.hpp"
#include "txcost.hpp"

namespace gameopt::io {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double round12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

/// JSON value for a report number; non-finite values become null.
inline json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

inline json numbers(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

/// Read-only view of one JSON object that remembers which keys were read.
class ConfigView {
public:
  ConfigView(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config: '" + label() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_->contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number()) throw ConfigError("config: key '" + full(key) + "' must be a number");
    return v->get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number_integer()) throw ConfigError("config: key '" + full(key) + "' must be an integer");
    return v->get<long long>();
  }

  std::uint64_t seed(const std::string& key) {
    const json* v = find(key, false);
    if (!v->is_number_unsigned() && !v->is_number_integer()) {
      throw ConfigError("config: key '" + full(key) + "' must be a non-negative integer");
    }
    if (v->is_number_integer() && v->get<long long>() < 0) {
      throw ConfigError("config: key '" + full(key) + "' must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_boolean()) throw ConfigError("config: key '" + full(key) + "' must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string()) throw ConfigError("config: key '" + full(key) + "' must be a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key, false);
    if (!v->is_array()) throw ConfigError("config: key '" + full(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        throw ConfigError("config: key '" + full(key) + "[" + std::to_string(i) + "]' must be a number");
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::optional<std::vector<int>> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_array()) throw ConfigError("config: key '" + full(key) + "' must be an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_integer()) {
        throw ConfigError("config: key '" + full(key) + "[" + std::to_string(i) + "]' must be an integer");
      }
      out.push_back((*v)[i].get<int>());
    }
    return out;
  }

  ConfigView object(const std::string& key) {
    const json* v = find(key, false);
    return ConfigView(*v, full(key));
  }

  std::vector<ConfigView> objects(const std::string& key) {
    const json* v = find(key, false);
    if (!v->is_array()) throw ConfigError("config: key '" + full(key) + "' must be an array of objects");
    std::vector<ConfigView> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.emplace_back((*v)[i], full(key) + "[" + std::to_string(i) + "]");
    return out;
  }

  /// Rejects keys nobody read.
  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("config: unknown key '" + full(it.key()) + "'");
    }
  }

  const std::string& path() const { return path_; }

private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key, bool optional) {
    used_.insert(key);
    if (!j_->contains(key)) {
      if (optional) return nullptr;
      throw ConfigError("config: missing key '" + full(key) + "'");
    }
    return &(*j_)[key];
  }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

inline json load_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open '" + file + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + file + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Domain readers. Each also returns the resolved values for provenance.

inline CrrParams read_crr(ConfigView v, json& resolved) {
  CrrParams c;
  c.s0 = v.number("s0");
  c.up = v.number("up");
  c.down = v.number("down");
  c.rate = v.number("rate", 0.0);
  c.steps = static_cast<int>(v.integer("steps"));
  v.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: '" + v.path() + "': " + e.what());
  }
  resolved = {{"s0", c.s0}, {"up", c.up}, {"down", c.down}, {"rate", c.rate}, {"steps", c.steps}};
  return c;
}

inline BsParams read_bs(ConfigView v, json& resolved) {
  BsParams b;
  b.z = v.number("z");
  b.rate = v.number("rate", 0.0);
  b.volatility = v.number("volatility");
  b.maturity = v.number("maturity", 1.0);
  v.finish();
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: '" + v.path() + "': " + e.what());
  }
  resolved = {{"z", b.z}, {"rate", b.rate}, {"volatility", b.volatility}, {"maturity", b.maturity}};
  return b;
}

/// Payoff types: constant, put, call, russian, asian (eps = 0 untruncated),
/// barrier (wrapping another payoff). Averages use the identity integrand.
inline PayoffFunctional read_payoff(ConfigView v, json& resolved) {
  const std::string type = v.string("type");
  PayoffFunctional p;
  resolved = {{"type", type}};
  try {
    if (type == "constant") {
      const double value = v.number("value"), pen = v.number("penalty", 0.0);
      p = payoffs::constant(value, pen);
      resolved["value"] = value;
      resolved["penalty"] = pen;
    } else if (type == "put" || type == "call") {
      const double k = v.number("strike"), pen = v.number("penalty", 0.0);
      p = type == "put" ? payoffs::vanilla_put(k, pen) : payoffs::vanilla_call(k, pen);
      resolved["strike"] = k;
      resolved["penalty"] = pen;
    } else if (type == "russian") {
      const double m = v.number("floor"), rate = v.number("penalty_rate");
      p = payoffs::russian(m, rate);
      resolved["floor"] = m;
      resolved["penalty_rate"] = rate;
    } else if (type == "asian") {
      const double k = v.number("strike"), eps = v.number("eps", 0.0), pen = v.number("penalty", 0.0);
      const bool put = v.boolean("put", false);
      p = payoffs::asian([](double s) { return s; }, k, eps, put, pen);
      resolved["strike"] = k;
      resolved["eps"] = eps;
      resolved["put"] = put;
      resolved["penalty"] = pen;
    } else if (type == "barrier") {
      const double lo = v.number("low"), hi = v.number("high");
      json inner_resolved;
      PayoffFunctional inner = read_payoff(v.object("inner"), inner_resolved);
      p = payoffs::barrier_knockout(lo, hi, std::move(inner));
      resolved["low"] = lo;
      resolved["high"] = hi;
      resolved["inner"] = inner_resolved;
    } else {
      throw ConfigError("config: key '" + (v.path().empty() ? std::string("type") : v.path() + ".type") +
                        "' has unknown payoff type '" + type + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: '" + v.path() + "': " + e.what());
  }
  v.finish();
  return p;
}

/// Per-node arrays in depth-first order (the root first, then the whole
/// up-subtree, then the down-subtree).
inline AdaptedProcess read_nodes(ConfigView& v, const std::string& key, std::size_t size) {
  std::vector<double> xs = v.numbers(key);
  if (xs.size() != size) {
    throw ConfigError("config: key '" + (v.path().empty() ? key : v.path() + "." + key) + "' has " +
                      std::to_string(xs.size()) + " entries, expected " + std::to_string(size));
  }
  return AdaptedProcess(std::move(xs));
}

inline std::size_t tree_size(int depth) { return (std::size_t{2} << depth) - 1; }

/// Friction instance: depth plus per-node bid, ask and packages.
struct TxInstance {
  FrictionMarket market;
  PayoffVec payoff;
};

inline TxInstance read_tx_instance(ConfigView v, json& resolved) {
  const long long depth = v.integer("depth");
  if (depth < 0 || depth > 16) throw ConfigError("config: key 'depth' must lie in [0, 16]");
  const double prob = v.number("prob_up", 0.5);
  if (!(prob > 0.0 && prob < 1.0)) throw ConfigError("config: key 'prob_up' must lie in (0, 1)");
  const std::size_t size = tree_size(static_cast<int>(depth));
  TxInstance t;
  t.market.tree = EventTree(static_cast<int>(depth), prob);
  t.market.bid = read_nodes(v, "bid", size);
  t.market.ask = read_nodes(v, "ask", size);
  t.payoff.x_cash = read_nodes(v, "x_cash", size);
  t.payoff.x_shares = read_nodes(v, "x_shares", size);
  t.payoff.y_cash = read_nodes(v, "y_cash", size);
  t.payoff.y_shares = read_nodes(v, "y_shares", size);
  v.finish();
  try {
    t.market.validate();
    t.payoff.validate(t.market);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: instance rejected: ") + e.what());
  }
  resolved = {{"depth", depth},
              {"prob_up", prob},
              {"bid", t.market.bid.values()},
              {"ask", t.market.ask.values()},
              {"x_cash", t.payoff.x_cash.values()},
              {"x_shares", t.payoff.x_shares.values()},
              {"y_cash", t.payoff.y_cash.values()},
              {"y_shares", t.payoff.y_shares.values()}};
  return t;
}

// ---------------------------------------------------------------------------
// Output.

/// --out wins, then GAMEOPT_OUT_DIR, then the working directory.
inline std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GAMEOPT_OUT_DIR"); env && *env) return env;
  return ".";
}

/// Writes through a sibling temporary and renames it into place.
inline void write_atomic(const std::filesystem::path& file, const std::string& content) {
  std::filesystem::create_directories(file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path());
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, file);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// CSV text with a leading comment line carrying the resolved config.
class Csv {
public:
  Csv(const json& config, const std::vector<std::string>& header) {
    os_ << "# config " << config.dump() << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }

  Csv& cell(double x) {
    sep();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    os_ << buf;
    return *this;
  }
  Csv& cell(long long x) {
    sep();
    os_ << x;
    return *this;
  }
  Csv& cell(int x) { return cell(static_cast<long long>(x)); }
  Csv& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
  Csv& cell(const std::string& s) {
    sep();
    os_ << s;
    return *this;
  }
  void end_row() {
    os_ << '\n';
    first_ = true;
  }
  std::string str() const { return os_.str(); }

private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }
  std::ostringstream os_;
  bool first_ = true;
};

/// "+-+" style rendering of a node's sign prefix ("root" for the root).
inline std::string prefix_string(const EventTree& tree, NodeIndex node) {
  const SignPath signs = tree.prefix_of(node);
  if (signs.empty()) return "root";
  std::string s;
  for (int x : signs) s += x > 0 ? '+' : '-';
  return s;
}

}  // namespace gameopt::io
