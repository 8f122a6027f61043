#include <catch_amalgamated.hpp>

#include <vector>

#include "gameopt/dynkin.hpp"
#include "gameopt/verification/random_instances.hpp"

using namespace gameopt;
using Catch::Matchers::WithinAbs;

namespace {

// One step, p = 1/2, X_0 given, Y_0 = 0, terminal payoff 3 (up) and 0 (down).
DynkinInstance hand_instance(double x0) {
  EventTree tree(1, 0.5);
  AdaptedProcess x(std::vector<double>{x0, 3.0, 0.0});
  AdaptedProcess y(std::vector<double>{0.0, 3.0, 0.0});
  return make_game(std::move(tree), std::move(x), std::move(y));
}

DynkinInstance constant_instance(int depth, double c) {
  EventTree tree(depth, 0.4);
  const std::size_t n = tree.size();
  return make_game(std::move(tree), AdaptedProcess(n, c), AdaptedProcess(n, c));
}

}  // namespace

TEST_CASE("backward induction on hand instances") {
  CHECK(solve_dp(hand_instance(2.0))[0] == 1.5);
  CHECK(solve_dp(hand_instance(1.0))[0] == 1.0);
  const AdaptedProcess v = solve_dp(constant_instance(3, 2.5));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == 2.5);
}

TEST_CASE("solve_dp rejects malformed instances") {
  DynkinInstance bad = hand_instance(2.0);
  bad.upper[0] = -1.0;  // X < Y
  CHECK_THROWS_AS(solve_dp(bad), std::invalid_argument);
  DynkinInstance term = hand_instance(2.0);
  term.upper[1] = 4.0;  // X != Y at the horizon
  CHECK_THROWS_AS(solve_dp(term), std::invalid_argument);
  DynkinInstance tie = hand_instance(2.0);
  tie.tie[0] = 5.0;  // Z > X
  CHECK_THROWS_AS(solve_dp(tie), std::invalid_argument);
}

TEST_CASE("enumeration counts of pure stopping times") {
  CHECK(enumerate_stopping_times(0).size() == 1);
  CHECK(enumerate_stopping_times(1).size() == 2);
  CHECK(enumerate_stopping_times(2).size() == 5);
  CHECK(enumerate_stopping_times(3).size() == 26);
  CHECK(enumerate_stopping_times(4).size() == 677);
  CHECK_THROWS_AS(enumerate_stopping_times(5), std::invalid_argument);
}

TEST_CASE("brute force values on hand instances") {
  const auto h = brute_force_values(hand_instance(2.0));
  CHECK(h.upper == 1.5);
  CHECK(h.lower == 1.5);
  const auto c = brute_force_values(constant_instance(3, 4.0));
  CHECK(c.upper == 4.0);
  CHECK(c.lower == 4.0);
  CHECK_THROWS_AS(brute_force_values(constant_instance(5, 1.0)), std::invalid_argument);
}

TEST_CASE("hitting times on the hand instance") {
  const DynkinInstance inst = hand_instance(2.0);
  const StoppingPair t = epsilon_optimal_times(solve_dp(inst), inst);
  for (NodeIndex leaf : inst.tree.leaves()) {
    CHECK(t.seller.time_on(inst.tree, leaf) == 1);
    CHECK(t.buyer.time_on(inst.tree, leaf) == 1);
  }
  const auto rep = verify_saddle(inst, t.seller, t.buyer);
  CHECK(rep.worst_violation == 0.0);
  CHECK(rep.value == 1.5);

  // Buyer stopping at 0 gets Y_0 = 0 against the seller's optimal 1.5.
  const auto bad = verify_saddle(inst, t.seller, PureStoppingTime::at_time(inst.tree, 0));
  CHECK_THAT(bad.worst_violation, WithinAbs(1.5, 1e-15));
}

TEST_CASE("X = Y stops both players at once") {
  const DynkinInstance inst = constant_instance(3, 1.0);
  const StoppingPair t = epsilon_optimal_times(solve_dp(inst), inst);
  CHECK(t.seller.flag(0));
  CHECK(t.buyer.flag(0));
  CHECK(verify_saddle(inst, t.seller, t.buyer).worst_violation == 0.0);
}

TEST_CASE("large epsilon stops the seller at once") {
  gen::Rng rng(11);
  const DynkinInstance inst = gen::dynkin_instance(rng, 3);
  double span = 0.0;
  for (NodeIndex i = 0; i < inst.tree.size(); ++i) span = std::max(span, inst.upper[i] - inst.lower[i]);
  const StoppingPair t = epsilon_optimal_times(solve_dp(inst), inst, span);
  CHECK(t.seller.flag(0));
}

TEST_CASE("dp matches enumeration and hitting times form a saddle on random games") {
  gen::Rng rng(2024);
  for (int i = 0; i < 40; ++i) {
    const DynkinInstance inst = gen::dynkin_instance(rng, 1 + i % 4);
    const AdaptedProcess v = solve_dp(inst);
    const auto bf = brute_force_values(inst);
    const double tol = 1e-12 * inst.scale();
    CHECK_THAT(bf.upper, WithinAbs(v[0], tol));
    CHECK_THAT(bf.lower, WithinAbs(v[0], tol));
    const StoppingPair t = epsilon_optimal_times(v, inst);
    const auto rep = verify_saddle(inst, t.seller, t.buyer);
    CHECK(rep.worst_violation <= 1e-10 * inst.scale());
    CHECK_THAT(expected_payoff(inst, t.seller, t.buyer), WithinAbs(rep.value, tol));
    for (NodeIndex k = 0; k < inst.tree.size(); ++k) {
      CHECK(inst.lower[k] <= v[k]);
      CHECK(v[k] <= inst.upper[k]);
    }
  }
}

TEST_CASE("value is monotone in both payoffs") {
  gen::Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const DynkinInstance inst = gen::dynkin_instance(rng, 4);
    const double v0 = solve_dp(inst)[0];
    DynkinInstance up_x = inst;
    DynkinInstance up_y = inst;
    for (NodeIndex k = 0; k < inst.tree.size(); ++k) {
      const double bump = gen::uniform(rng, 0.0, 1.0);
      up_x.upper[k] += bump;
      up_y.lower[k] += bump;
      up_y.tie[k] += bump;
      if (inst.tree.is_terminal(k)) {
        up_x.lower[k] += bump;
        up_x.tie[k] += bump;
        up_y.upper[k] += bump;
      } else {
        up_y.upper[k] = std::max(up_y.upper[k], up_y.lower[k]);
      }
    }
    CHECK(solve_dp(up_x)[0] >= v0);
    CHECK(solve_dp(up_y)[0] >= v0);
  }
}
