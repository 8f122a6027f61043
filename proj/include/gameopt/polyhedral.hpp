#pragma once

// Continuous piecewise-linear functions R -> R together with the bottom
// element (identically -infinity). Closed under pointwise min and max and
// under the epigraph sum with the two-slope kernel h_[d,c](y) = c y^- - d y^+.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gameopt {

class PiecewiseLinear {
public:
  /// The zero function.
  PiecewiseLinear() : knots_{0.0}, values_{0.0} {}

  static PiecewiseLinear bottom() {
    PiecewiseLinear f;
    f.bottom_ = true;
    f.knots_.clear();
    f.values_.clear();
    return f;
  }

  static PiecewiseLinear constant(double c) { return affine(0.0, c); }

  /// a*y + b
  static PiecewiseLinear affine(double slope, double intercept) {
    PiecewiseLinear f;
    f.values_ = {intercept};
    f.left_slope_ = f.right_slope_ = slope;
    return f;
  }

  /// Interpolates (x_i, v_i) with the given slopes outside [x_1, x_m].
  static PiecewiseLinear from_knots(std::vector<double> xs, std::vector<double> vs, double left_slope,
                                    double right_slope) {
    if (xs.empty() || xs.size() != vs.size()) {
      throw std::invalid_argument("PiecewiseLinear: need matching, nonempty knot and value arrays");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(vs[i])) throw std::invalid_argument("PiecewiseLinear: non-finite knot");
      if (i > 0 && !(xs[i] > xs[i - 1])) throw std::invalid_argument("PiecewiseLinear: knots must increase strictly");
    }
    if (!std::isfinite(left_slope) || !std::isfinite(right_slope)) {
      throw std::invalid_argument("PiecewiseLinear: non-finite slope");
    }
    PiecewiseLinear f;
    f.knots_ = std::move(xs);
    f.values_ = std::move(vs);
    f.left_slope_ = left_slope;
    f.right_slope_ = right_slope;
    f.canonicalize();
    return f;
  }

  bool is_bottom() const { return bottom_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double left_slope() const { return left_slope_; }
  double right_slope() const { return right_slope_; }
  std::size_t segments() const {
    if (bottom_) return 0;
    if (knots_.size() == 1 && left_slope_ == right_slope_) return 1;  // a single line keeps one anchor knot
    return knots_.size() + 1;
  }

  double operator()(double y) const {
    if (bottom_) return -std::numeric_limits<double>::infinity();
    if (y <= knots_.front()) return values_.front() + left_slope_ * (y - knots_.front());
    if (y >= knots_.back()) return values_.back() + right_slope_ * (y - knots_.back());
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    const double x0 = knots_[i - 1], x1 = knots_[i];
    const double t = (y - x0) / (x1 - x0);
    return values_[i - 1] + t * (values_[i] - values_[i - 1]);
  }

  /// Slope of the segment just right of y.
  double slope_right_of(double y) const {
    if (bottom_) return 0.0;
    if (y >= knots_.back()) return right_slope_;
    if (y < knots_.front()) return left_slope_;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    return (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
  }

  /// Largest |value| at the knots, a natural magnitude for tolerances.
  double magnitude() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Drops knots where adjacent slopes agree and merges near-coincident
  /// knots. Idempotent.
  void canonicalize() {
    if (bottom_ || knots_.size() <= 1) return;
    std::vector<double> xs, vs;
    xs.reserve(knots_.size());
    vs.reserve(knots_.size());
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (!xs.empty() && knots_[i] - xs.back() <= kKnotMerge * std::max(1.0, std::abs(knots_[i]))) {
        continue;  // keep the first of a cluster
      }
      xs.push_back(knots_[i]);
      vs.push_back(values_[i]);
    }
    std::vector<double> kx, kv;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double sl = i == 0 ? left_slope_ : (vs[i] - vs[i - 1]) / (xs[i] - xs[i - 1]);
      const double sr = i + 1 == xs.size() ? right_slope_ : (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]);
      if (std::abs(sl - sr) <= kSlopeMerge * std::max(1.0, std::max(std::abs(sl), std::abs(sr)))) continue;
      kx.push_back(xs[i]);
      kv.push_back(vs[i]);
    }
    if (kx.empty()) {
      kx.push_back(xs.front());
      kv.push_back(vs.front());
      // Single line: the right slope wins, both should agree anyway.
      left_slope_ = right_slope_;
    }
    knots_ = std::move(kx);
    values_ = std::move(kv);
  }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    if (bottom_) {
      os << "bottom\n";
      return os.str();
    }
    os << "x,value\n";
    for (std::size_t i = 0; i < knots_.size(); ++i) os << knots_[i] << ',' << values_[i] << '\n';
    os << "left_slope," << left_slope_ << "\nright_slope," << right_slope_ << '\n';
    return os.str();
  }

  static constexpr double kSlopeMerge = 1e-12;
  static constexpr double kKnotMerge = 1e-12;

private:
  bool bottom_ = false;
  std::vector<double> knots_;
  std::vector<double> values_;
  double left_slope_ = 0.0;
  double right_slope_ = 0.0;
};

/// h_[d,c](y) = c y^- - d y^+ ; slopes -c left of 0 and -d right of 0.
inline PiecewiseLinear h_kernel(double d, double c) {
  if (c < d) throw std::invalid_argument("h_kernel: need c >= d");
  return PiecewiseLinear::from_knots({0.0}, {0.0}, -c, -d);
}

inline double h_value(double d, double c, double y) { return y < 0.0 ? -c * y : -d * y; }

namespace detail {

/// Pointwise min (take_min) or max of two non-bottom functions.
inline PiecewiseLinear combine(const PiecewiseLinear& f, const PiecewiseLinear& g, bool take_min) {
  std::vector<double> pts;
  pts.reserve(f.knots().size() + g.knots().size() + 4);
  pts.insert(pts.end(), f.knots().begin(), f.knots().end());
  pts.insert(pts.end(), g.knots().begin(), g.knots().end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  auto diff = [&](double y) { return f(y) - g(y); };
  std::vector<double> all = pts;
  // Crossings strictly inside consecutive points.
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double d0 = diff(pts[i]), d1 = diff(pts[i + 1]);
    if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) {
      const double t = d0 / (d0 - d1);
      all.push_back(pts[i] + t * (pts[i + 1] - pts[i]));
    }
  }
  // Crossings in the unbounded tails.
  const double dl = diff(pts.front());
  const double sl = f.left_slope() - g.left_slope();
  if (sl != 0.0) {
    const double y = pts.front() - dl / sl;
    if (y < pts.front()) all.push_back(y);
  }
  const double dr = diff(pts.back());
  const double sr = f.right_slope() - g.right_slope();
  if (sr != 0.0) {
    const double y = pts.back() - dr / sr;
    if (y > pts.back()) all.push_back(y);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> vals(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    vals[i] = take_min ? std::min(f(all[i]), g(all[i])) : std::max(f(all[i]), g(all[i]));
  }
  // Tails: past the last crossing one function is below the other throughout.
  double left, right;
  {
    const double lf = f.left_slope(), lg = g.left_slope();
    const double y0 = all.front();
    bool f_lower;  // lower as y -> -inf
    if (lf != lg) f_lower = lf > lg;
    else f_lower = f(y0) <= g(y0);
    left = (f_lower == take_min) ? lf : lg;
  }
  {
    const double rf = f.right_slope(), rg = g.right_slope();
    const double y1 = all.back();
    bool f_lower;  // lower as y -> +inf
    if (rf != rg) f_lower = rf < rg;
    else f_lower = f(y1) <= g(y1);
    right = (f_lower == take_min) ? rf : rg;
  }
  // Strictly increasing knots are required; unique() above removed exact
  // duplicates and crossings lie strictly between their neighbours.
  return PiecewiseLinear::from_knots(std::move(all), std::move(vals), left, right);
}

}  // namespace detail

inline PiecewiseLinear pointwise_min(const PiecewiseLinear& f, const PiecewiseLinear& g) {
  if (f.is_bottom() || g.is_bottom()) return PiecewiseLinear::bottom();
  return detail::combine(f, g, true);
}

inline PiecewiseLinear pointwise_max(const PiecewiseLinear& f, const PiecewiseLinear& g) {
  if (f.is_bottom()) return g;
  if (g.is_bottom()) return f;
  return detail::combine(f, g, false);
}

/// True when inf_u h_[d,c](u) + f(y - u) is -infinity for every y.
inline bool gr_is_bottom(const PiecewiseLinear& f, double d, double c) {
  if (f.is_bottom()) return true;
  return f.left_slope() > -d || f.right_slope() < -c;
}

/// The function whose epigraph is epi(h_[d,c]) + epi(f), i.e. the infimal
/// convolution y -> inf_u h_[d,c](u) + f(y - u).
///
/// When finite, the infimum over u of a piecewise-linear function is attained
/// at a kink: u = 0 (value f(y)) or y - u = x_i (value f(x_i) + h(y - x_i)).
/// So the result is the lower envelope of f and the kernel translated to
/// every knot of f.
inline PiecewiseLinear gr_transform(const PiecewiseLinear& f, double d, double c) {
  if (c < d) throw std::invalid_argument("gr_transform: need c >= d");
  if (gr_is_bottom(f, d, c)) return PiecewiseLinear::bottom();
  PiecewiseLinear out = f;
  for (std::size_t i = 0; i < f.knots().size(); ++i) {
    const double xi = f.knots()[i];
    const PiecewiseLinear cone = PiecewiseLinear::from_knots({xi}, {f.values()[i]}, -c, -d);
    out = pointwise_min(out, cone);
  }
  return out;
}

/// (x, y) in epi(f) means x >= f(y); bottom contains the whole plane.
inline bool epi_member(double x, double y, const PiecewiseLinear& f, double slack_scale = 0.0) {
  if (f.is_bottom()) return true;
  const double fy = f(y);
  const double scale = slack_scale > 0.0 ? slack_scale : std::max({1.0, std::abs(fy), std::abs(x)});
  return x >= fy - 1e-9 * scale;
}

/// Structural comparison of canonical forms.
inline bool approx_equal(const PiecewiseLinear& f, const PiecewiseLinear& g, double tol = 1e-9) {
  if (f.is_bottom() || g.is_bottom()) return f.is_bottom() && g.is_bottom();
  if (f.knots().size() != g.knots().size()) return false;
  auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b))); };
  if (!close(f.left_slope(), g.left_slope()) || !close(f.right_slope(), g.right_slope())) return false;
  for (std::size_t i = 0; i < f.knots().size(); ++i) {
    if (!close(f.knots()[i], g.knots()[i]) || !close(f.values()[i], g.values()[i])) return false;
  }
  return true;
}

}  // namespace gameopt
