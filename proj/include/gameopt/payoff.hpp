#pragma once

// Path-dependent holder payoffs F and cancellation penalties Delta.
//
// A payoff reads the price path through a small running summary (PathState)
// that is advanced one observation at a time, so the same functional can be
// evaluated on lattice nodes and on fine Monte Carlo grids. Integrals are
// left-endpoint Riemann sums: advancing by dt adds integrand(current) * dt
// before the price moves.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace gameopt {

struct PathState {
  double time = 0.0;  // years (or steps for plain CRR trees)
  int step = 0;
  double price = 0.0;
  double initial = 0.0;
  double running_max = 0.0;
  double running_min = 0.0;
  double holder_integral = 0.0;
  double penalty_integral = 0.0;
  bool exited = false;  // barrier knocked out at or before this observation
};

enum class PayoffStructure {
  generic,  // reads the whole path
  markov,   // depends on (time, current price) only
  russian,  // max(m, running max) holder with penalty proportional to price
};

struct Barrier {
  double low = 0.0;
  double high = std::numeric_limits<double>::infinity();
};

class PayoffFunctional {
public:
  using Reader = std::function<double(const PathState&)>;
  using Integrand = std::function<double(double)>;

  std::string id;
  Reader holder;   // F
  Reader penalty;  // Delta
  Integrand holder_integrand;   // optional, accumulated into holder_integral
  Integrand penalty_integrand;  // optional, accumulated into penalty_integral
  double lipschitz = 1.0;       // declared L >= 1
  PayoffStructure structure = PayoffStructure::generic;
  std::optional<Barrier> barrier;
  // Extra parameters that fast paths need.
  double strike = 0.0;
  double floor_level = 0.0;   // Russian m
  double penalty_rate = 0.0;  // Russian delta or constant put/call penalty
  bool is_put = false;

  PathState start(double price) const {
    PathState st;
    st.price = st.initial = st.running_max = st.running_min = price;
    st.exited = knocked_out(price);
    return st;
  }

  PathState advance(PathState st, double next_price, double dt) const {
    if (holder_integrand) st.holder_integral += holder_integrand(st.price) * dt;
    if (penalty_integrand) st.penalty_integral += penalty_integrand(st.price) * dt;
    st.time += dt;
    st.step += 1;
    st.price = next_price;
    st.running_max = std::max(st.running_max, next_price);
    st.running_min = std::min(st.running_min, next_price);
    st.exited = st.exited || knocked_out(next_price);
    return st;
  }

  double holder_value(const PathState& st) const {
    if (barrier && st.exited) return 0.0;
    return holder(st);
  }

  double penalty_value(const PathState& st) const {
    if (barrier && st.exited) return 0.0;
    return penalty(st);
  }

  double seller_value(const PathState& st) const { return holder_value(st) + penalty_value(st); }

private:
  bool knocked_out(double price) const {
    return barrier && (price <= barrier->low || price >= barrier->high);
  }
};

namespace payoffs {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
}

inline PayoffFunctional constant(double c, double penalty = 0.0) {
  if (c < 0.0 || penalty < 0.0) throw std::invalid_argument("constant payoff must be nonnegative");
  PayoffFunctional p;
  p.id = "constant";
  p.holder = [c](const PathState&) { return c; };
  p.penalty = [penalty](const PathState&) { return penalty; };
  p.structure = PayoffStructure::markov;
  p.penalty_rate = penalty;
  return p;
}

/// (K - S)^+ with constant cancellation penalty delta.
inline PayoffFunctional vanilla_put(double strike, double delta) {
  require_positive(strike, "put strike");
  if (delta < 0.0) throw std::invalid_argument("put penalty must be nonnegative");
  PayoffFunctional p;
  p.id = "put";
  p.holder = [strike](const PathState& s) { return std::max(strike - s.price, 0.0); };
  p.penalty = [delta](const PathState&) { return delta; };
  p.structure = PayoffStructure::markov;
  p.strike = strike;
  p.penalty_rate = delta;
  p.is_put = true;
  return p;
}

inline PayoffFunctional vanilla_call(double strike, double delta) {
  require_positive(strike, "call strike");
  if (delta < 0.0) throw std::invalid_argument("call penalty must be nonnegative");
  PayoffFunctional p;
  p.id = "call";
  p.holder = [strike](const PathState& s) { return std::max(s.price - strike, 0.0); };
  p.penalty = [delta](const PathState&) { return delta; };
  p.structure = PayoffStructure::markov;
  p.strike = strike;
  p.penalty_rate = delta;
  return p;
}

/// (int_0^t f(S_u) du - strike)^+ with penalty int_0^t g(S_u) du.
/// `bound` is the common Lipschitz/growth constant of f and g.
inline PayoffFunctional integral_call(std::function<double(double)> f, double strike,
                                      std::function<double(double)> g = nullptr, double bound = 1.0) {
  if (strike < 0.0) throw std::invalid_argument("integral strike must be nonnegative");
  PayoffFunctional p;
  p.id = "integral_call";
  p.holder_integrand = std::move(f);
  p.penalty_integrand = std::move(g);
  p.holder = [strike](const PathState& s) { return std::max(s.holder_integral - strike, 0.0); };
  p.penalty = [](const PathState& s) { return std::max(s.penalty_integral, 0.0); };
  p.lipschitz = std::max(1.0, bound);
  p.strike = strike;
  return p;
}

inline PayoffFunctional integral_put(std::function<double(double)> f, double strike,
                                     std::function<double(double)> g = nullptr, double bound = 1.0) {
  require_positive(strike, "integral put strike");
  PayoffFunctional p = integral_call(std::move(f), 0.0, std::move(g), bound);
  p.id = "integral_put";
  p.holder = [strike](const PathState& s) { return std::max(strike - s.holder_integral, 0.0); };
  p.strike = strike;
  p.is_put = true;
  return p;
}

/// F_t = max(m, sup_{u<=t} S_u), Delta_t = delta * S_t.
inline PayoffFunctional russian(double m, double delta) {
  require_positive(m, "Russian floor");
  if (delta < 0.0) throw std::invalid_argument("Russian penalty rate must be nonnegative");
  PayoffFunctional p;
  p.id = "russian";
  p.holder = [m](const PathState& s) { return std::max(m, s.running_max); };
  p.penalty = [delta](const PathState& s) { return delta * s.price; };
  p.lipschitz = 1.0 + delta;
  p.structure = PayoffStructure::russian;
  p.floor_level = m;
  p.penalty_rate = delta;
  return p;
}

/// Both payoffs vanish from the first observation outside (low, high) on.
inline PayoffFunctional barrier_knockout(double low, double high, PayoffFunctional inner) {
  if (low < 0.0 || !(low < high)) throw std::invalid_argument("barrier needs 0 <= low < high");
  PayoffFunctional p = std::move(inner);
  p.id = "barrier_" + p.id;
  p.barrier = Barrier{low, high};
  p.structure = PayoffStructure::generic;
  return p;
}

/// ((1 / max(t, eps)) int_0^t f(S_u) du - strike)^+ (call) or the put mirror,
/// with constant penalty delta. eps = 0 gives the untruncated average, taken
/// as f(S_0) at t = 0.
inline PayoffFunctional asian(std::function<double(double)> f, double strike, double eps, bool put,
                              double delta = 0.0, double bound = 1.0) {
  require_positive(strike, "Asian strike");
  if (eps < 0.0) throw std::invalid_argument("Asian truncation must be nonnegative");
  PayoffFunctional p;
  p.id = eps > 0.0 ? "asian_truncated" : "asian_untruncated";
  auto avg = [f, eps](const PathState& s) {
    if (eps > 0.0) return s.holder_integral / std::max(s.time, eps);
    return s.time > 0.0 ? s.holder_integral / s.time : f(s.initial);
  };
  if (put) {
    p.holder = [avg, strike](const PathState& s) { return std::max(strike - avg(s), 0.0); };
  } else {
    p.holder = [avg, strike](const PathState& s) { return std::max(avg(s) - strike, 0.0); };
  }
  p.holder_integrand = std::move(f);
  p.penalty = [delta](const PathState&) { return delta; };
  // The truncated average moves by at most 2*bound/eps per unit time; the
  // untruncated one has no finite temporal constant and declares just `bound`.
  p.lipschitz = eps > 0.0 ? std::max({1.0, bound, 2.0 * bound / eps}) : std::max(1.0, bound);
  p.strike = strike;
  p.penalty_rate = delta;
  p.is_put = put;
  return p;
}

inline PayoffFunctional asian_truncated(std::function<double(double)> f, double strike, double eps,
                                        bool put = false, double delta = 0.0, double bound = 1.0) {
  if (!(eps > 0.0)) throw std::invalid_argument("truncated Asian needs eps > 0");
  return asian(std::move(f), strike, eps, put, delta, bound);
}

}  // namespace payoffs

}  // namespace gameopt
