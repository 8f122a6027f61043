#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gameopt/io.hpp"

using namespace gameopt;
using io::ConfigError;
using io::ConfigView;
using io::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gameopt_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Exit status of `gameopt <args>`, output discarded.
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + GAMEOPT_CLI + "\" " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string config(const std::string& name) { return std::string(GAMEOPT_CONFIGS) + "/" + name; }

template <class F>
std::string config_error(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  const json j = json::parse(R"({"a": 1.5, "b": "x", "inner": {"c": 2}, "extra": 0})");
  {
    ConfigView v(j, "");
    CHECK(v.number("a") == 1.5);
    CHECK(config_error([&] { v.number("missing"); }).find("'missing'") != std::string::npos);
    CHECK(config_error([&] { v.number("b"); }).find("'b'") != std::string::npos);
    CHECK(v.number("absent", 4.0) == 4.0);
  }
  {
    ConfigView v(j, "");
    v.number("a");
    v.string("b");
    ConfigView inner = v.object("inner");
    CHECK(config_error([&] { inner.number("d"); }).find("'inner.d'") != std::string::npos);
    CHECK(config_error([&] { v.finish(); }).find("'extra'") != std::string::npos);
  }
  CHECK_THROWS_AS(ConfigView(json::array(), ""), ConfigError);
}

TEST_CASE("market readers validate") {
  json resolved;
  const json good = json::parse(R"({"s0": 100, "up": 0.1, "down": -0.1, "rate": 0.01, "steps": 3})");
  const CrrParams c = io::read_crr(ConfigView(good, "market"), resolved);
  CHECK(c.steps == 3);
  CHECK(resolved["rate"] == 0.01);
  const json arb = json::parse(R"({"s0": 100, "up": 0.1, "down": 0.05, "rate": 0.01, "steps": 3})");
  CHECK_THROWS_AS(io::read_crr(ConfigView(arb, "market"), resolved), ConfigError);
  const json typo = json::parse(R"({"s0": 100, "up": 0.1, "down": -0.1, "stesp": 3, "steps": 3})");
  CHECK(config_error([&] { io::read_crr(ConfigView(typo, "market"), resolved); }).find("market.stesp") !=
        std::string::npos);
  const json bad_payoff = json::parse(R"({"type": "lookback"})");
  CHECK(config_error([&] { io::read_payoff(ConfigView(bad_payoff, "payoff"), resolved); }).find("payoff.type") !=
        std::string::npos);
}

TEST_CASE("report numbers carry twelve significant digits") {
  CHECK(io::round12(1.0 / 3.0) == 0.333333333333);
  CHECK(io::number(std::nan("")).is_null());
}

TEST_CASE("output directory precedence") {
  CHECK(io::output_dir("given") == fs::path("given"));
  ::setenv("GAMEOPT_OUT_DIR", "from_env", 1);
  CHECK(io::output_dir("") == fs::path("from_env"));
  ::unsetenv("GAMEOPT_OUT_DIR");
  CHECK(io::output_dir("") == fs::path("."));
}

TEST_CASE("cli rejects bad invocations") {
  const fs::path out = scratch("reject");
  CHECK(run_cli("embed-mc -c \"" + config("embed_mc_noseed.json") + "\" -o \"" + out.string() + "\"") == 2);
  CHECK(run_cli("price -c \"" + config("bad_unknown_key.json") + "\" -o \"" + out.string() + "\"") == 2);
  CHECK(run_cli("price -c \"" + (out / "nope.json").string() + "\"") != 0);
  CHECK(run_cli("frobnicate") != 0);
  CHECK_FALSE(fs::exists(out / "price.json"));
}

TEST_CASE("cli runs are reproducible and embed their config") {
  struct Case {
    std::string sub, cfg, csv, report;
  };
  const Case cases[] = {
      {"price", "price_put.json", "price_hedge.csv", "price.json"},
      {"swing", "swing.json", "swing_layers.csv", "swing.json"},
      {"shortfall", "shortfall.json", "shortfall.csv", "shortfall.json"},
      {"txcost", "txcost.json", "txcost_strategies.csv", "txcost.json"},
      {"embed-mc", "embed_mc.json", "embed_mc.csv", "embed_mc.json"},
  };
  for (const Case& k : cases) {
    INFO(k.sub);
    const fs::path a = scratch(k.sub + "_a"), b = scratch(k.sub + "_b");
    REQUIRE(run_cli(k.sub + " -c \"" + config(k.cfg) + "\" -o \"" + a.string() + "\"") == 0);
    REQUIRE(run_cli(k.sub + " -c \"" + config(k.cfg) + "\" -o \"" + b.string() + "\"") == 0);
    REQUIRE(fs::exists(a / k.csv));
    CHECK(slurp(a / k.csv) == slurp(b / k.csv));
    CHECK(slurp(a / k.report) == slurp(b / k.report));
    const json rep = json::parse(slurp(a / k.report));
    REQUIRE(rep.contains("config"));
    CHECK(rep["config"]["subcommand"] == k.sub);
  }
}

TEST_CASE("seed flag overrides the config seed") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  REQUIRE(run_cli("embed-mc -c \"" + config("embed_mc.json") + "\" -s 5 -o \"" + a.string() + "\"") == 0);
  REQUIRE(run_cli("embed-mc -c \"" + config("embed_mc.json") + "\" -o \"" + b.string() + "\"") == 0);
  CHECK(slurp(a / "embed_mc.csv") != slurp(b / "embed_mc.csv"));
}
