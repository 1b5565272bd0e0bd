// Special functions and one-dimensional quadrature.
//
// Incomplete gamma/beta evaluations are delegated to Boost.Math; this header
// layers the point-mass conventions used throughout the library on top of
// them (shape 0 == degenerate distribution) and provides the adaptive
// integrators used by the closed-form CDFs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "dsplim/errors.hpp"

namespace dsplim::specfun {

namespace detail {
// Double arithmetic throughout; Boost would otherwise promote to long double.
using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

inline void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

inline double clamp_unit(double p) { return std::clamp(p, 0.0, 1.0); }
}  // namespace detail

/// Natural log of the Gamma function for x > 0.
inline double log_gamma(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "log_gamma: argument must be positive and finite");
  return boost::math::lgamma(x, detail::Policy());
}

/// Regularized lower incomplete gamma P(shape, x/scale). shape == 0 is a
/// point mass at 0, so the CDF is 1 everywhere on x >= 0.
inline double gamma_cdf(double shape, double scale, double x) {
  detail::require(shape >= 0.0 && scale > 0.0 && x >= 0.0, "gamma_cdf: shape >= 0, scale > 0, x >= 0 required");
  if (shape == 0.0 || std::isinf(x)) return 1.0;
  if (x == 0.0) return 0.0;
  return detail::clamp_unit(boost::math::gamma_p(shape, x / scale, detail::Policy()));
}

/// Upper tail 1 - gamma_cdf, computed without cancellation.
inline double gamma_sf(double shape, double scale, double x) {
  detail::require(shape >= 0.0 && scale > 0.0 && x >= 0.0, "gamma_sf: shape >= 0, scale > 0, x >= 0 required");
  if (shape == 0.0 || std::isinf(x)) return 0.0;
  if (x == 0.0) return 1.0;
  return detail::clamp_unit(boost::math::gamma_q(shape, x / scale, detail::Policy()));
}

namespace detail {
inline void check_beta_args(double x, double a, double b) {
  require(x >= 0.0 && x <= 1.0, "beta: x must lie in [0, 1]");
  require(a >= 0.0 && b >= 0.0 && (a > 0.0 || b > 0.0), "beta: shapes must be >= 0 and not both 0");
  require(std::isfinite(a) && std::isfinite(b), "beta: shapes must be finite");
}
}  // namespace detail

/// Beta(a, b) density. a == 0 (b == 0) is a point mass at 0 (at 1): the
/// density is 0 off the atom and +inf on it.
inline double beta_pdf(double x, double a, double b) {
  detail::check_beta_args(x, a, b);
  if (a == 0.0) return x == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  if (b == 0.0) return x == 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return boost::math::ibeta_derivative(a, b, x, detail::Policy());
}

/// Regularized incomplete beta I_x(a, b) with the point-mass conventions of
/// beta_pdf: a == 0 gives 1 on [0, 1]; b == 0 gives 0 on [0, 1) and 1 at 1.
inline double beta_cdf(double x, double a, double b) {
  detail::check_beta_args(x, a, b);
  if (a == 0.0) return 1.0;
  if (b == 0.0) return x == 1.0 ? 1.0 : 0.0;
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return detail::clamp_unit(boost::math::ibeta(a, b, x, detail::Policy()));
}

/// 1 - beta_cdf(x, a, b) without cancellation.
inline double beta_sf(double x, double a, double b) {
  detail::check_beta_args(x, a, b);
  if (a == 0.0) return 0.0;
  if (b == 0.0) return x == 1.0 ? 0.0 : 1.0;
  if (x == 0.0) return 1.0;
  if (x == 1.0) return 0.0;
  return detail::clamp_unit(boost::math::ibetac(a, b, x, detail::Policy()));
}

/// Beta density with the normalizer hoisted out; for integrands that
/// evaluate the same (a, b) many times. Requires a, b > 0.
class BetaDensity {
 public:
  BetaDensity(double a, double b) : a_(a), b_(b) {
    detail::require(a > 0.0 && b > 0.0, "BetaDensity: shapes must be positive");
    log_norm_ = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  }

  double operator()(double x) const {
    if (x <= 0.0) return a_ < 1.0 ? std::numeric_limits<double>::infinity() : (a_ == 1.0 ? std::exp(log_norm_) : 0.0);
    if (x >= 1.0) return b_ < 1.0 ? std::numeric_limits<double>::infinity() : (b_ == 1.0 ? std::exp(log_norm_) : 0.0);
    return std::exp(log_norm_ + (a_ - 1.0) * std::log(x) + (b_ - 1.0) * std::log1p(-x));
  }

  double mean() const { return a_ / (a_ + b_); }
  double sd() const {
    const double s = a_ + b_;
    return std::sqrt(a_ * b_ / (s * s * (s + 1.0)));
  }

 private:
  double a_;
  double b_;
  double log_norm_ = 0.0;
};

// ---------------------------------------------------------------------------
// Quadrature

enum class QuadratureRule {
  adaptive_simpson,
  gauss_kronrod,  // G7/K15 pairs, globally adaptive
  rectangle,      // fixed midpoint rule, no error control
};

struct QuadratureConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_subdivisions = 1 << 16;
  QuadratureRule rule = QuadratureRule::adaptive_simpson;
  int rectangle_points = 100;

  void validate() const {
    detail::require(rel_tol > 0.0, "QuadratureConfig: rel_tol must be positive");
    detail::require(abs_tol > 0.0, "QuadratureConfig: abs_tol must be positive");
    detail::require(max_subdivisions >= 1, "QuadratureConfig: max_subdivisions must be >= 1");
    detail::require(rectangle_points >= 1, "QuadratureConfig: rectangle_points must be >= 1");
  }
};

namespace detail {

struct Segment {
  double lo, hi;
  double estimate;
  double error;
  // Cached samples reused when the segment is split (Simpson only).
  double f_lo, f_mid, f_hi, f_q1, f_q3;
};

struct ByError {
  bool operator()(const Segment& a, const Segment& b) const {
    if (a.error != b.error) return a.error < b.error;
    return a.lo > b.lo;  // deterministic tie-break
  }
};

template <class F>
Segment simpson_segment(F& f, double lo, double hi, double f_lo, double f_mid, double f_hi) {
  const double mid = 0.5 * (lo + hi);
  const double h = hi - lo;
  const double f_q1 = f(0.5 * (lo + mid));
  const double f_q3 = f(0.5 * (mid + hi));
  const double coarse = h / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
  const double fine = h / 12.0 * (f_lo + 4.0 * f_q1 + 2.0 * f_mid + 4.0 * f_q3 + f_hi);
  // Richardson-corrected value; error is the usual |fine - coarse| / 15.
  return {lo, hi, fine + (fine - coarse) / 15.0, std::abs(fine - coarse) / 15.0, f_lo, f_mid, f_hi, f_q1, f_q3};
}

// Kronrod 15-point nodes/weights with the embedded 7-point Gauss weights.
inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
Segment kronrod_segment(F& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double pair = f(c - dx) + f(c + dx);
    rk += kWgk[j] * pair;
    if (j % 2 == 1) rg += kWg[j / 2] * pair;
  }
  return {lo, hi, rk * h, std::abs((rk - rg) * h), 0, 0, 0, 0, 0};
}

template <class F>
double adaptive(F& f, std::span<const double> knots, const QuadratureConfig& cfg) {
  const bool simpson = cfg.rule == QuadratureRule::adaptive_simpson;
  std::priority_queue<Segment, std::vector<Segment>, ByError> heap;
  auto make = [&](double lo, double hi) {
    if (simpson) return simpson_segment(f, lo, hi, f(lo), f(0.5 * (lo + hi)), f(hi));
    return kronrod_segment(f, lo, hi);
  };
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i + 1] > knots[i]) heap.push(make(knots[i], knots[i + 1]));
  }
  if (heap.empty()) return 0.0;

  auto totals = [&heap] {
    // Summation order must not depend on heap layout details beyond the
    // (deterministic) push/pop sequence, so copy and sort by position.
    std::vector<Segment> all;
    all.reserve(heap.size());
    auto copy = heap;
    while (!copy.empty()) {
      all.push_back(copy.top());
      copy.pop();
    }
    std::sort(all.begin(), all.end(), [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    double est = 0.0, err = 0.0;
    for (const auto& s : all) {
      est += s.estimate;
      err += s.error;
    }
    return std::pair{est, err};
  };

  double est = 0.0, err = 0.0;
  {
    auto copy = heap;
    while (!copy.empty()) {
      est += copy.top().estimate;
      err += copy.top().error;
      copy.pop();
    }
  }
  int splits = static_cast<int>(heap.size());
  while (err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(est))) {
    if (splits >= cfg.max_subdivisions) {
      throw QuadratureError("integrate: no convergence within " + std::to_string(cfg.max_subdivisions) +
                            " subdivisions (error estimate " + std::to_string(err) + ")");
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    Segment left, right;
    if (simpson) {
      left = simpson_segment(f, worst.lo, mid, worst.f_lo, worst.f_q1, worst.f_mid);
      right = simpson_segment(f, mid, worst.hi, worst.f_mid, worst.f_q3, worst.f_hi);
    } else {
      left = kronrod_segment(f, worst.lo, mid);
      right = kronrod_segment(f, mid, worst.hi);
    }
    est += left.estimate + right.estimate - worst.estimate;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
    // Running sums drift; re-anchor occasionally.
    if (splits % 64 == 0) std::tie(est, err) = totals();
  }
  return totals().first;
}

}  // namespace detail

/// Integral of f over the concatenation of [knots[i], knots[i+1]]. Knots
/// must be nondecreasing; interior knots seed the initial partition, which
/// lets callers place features (peaks, steps) on segment boundaries.
template <class F>
double integrate(F&& f, std::span<const double> knots, const QuadratureConfig& cfg = {}) {
  cfg.validate();
  detail::require(knots.size() >= 2, "integrate: need at least two knots");
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    detail::require(knots[i] <= knots[i + 1], "integrate: knots must be nondecreasing");
    detail::require(std::isfinite(knots[i]) && std::isfinite(knots[i + 1]), "integrate: knots must be finite");
  }
  if (cfg.rule == QuadratureRule::rectangle) {
    const double lo = knots.front();
    const double hi = knots.back();
    const double h = (hi - lo) / cfg.rectangle_points;
    double sum = 0.0;
    for (int i = 0; i < cfg.rectangle_points; ++i) sum += f(lo + (i + 0.5) * h);
    return sum * h;
  }
  return detail::adaptive(f, knots, cfg);
}

template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureConfig& cfg = {}) {
  detail::require(lo <= hi, "integrate: lo must not exceed hi");
  if (lo == hi) return 0.0;
  if (cfg.rule == QuadratureRule::adaptive_simpson) {
    // A 16-panel start keeps narrow peaks from slipping between samples.
    std::vector<double> knots(17);
    for (int i = 0; i <= 16; ++i) knots[i] = lo + (hi - lo) * i / 16.0;
    knots.back() = hi;
    return integrate(f, std::span<const double>(knots), cfg);
  }
  const double knots[2] = {lo, hi};
  return integrate(f, std::span<const double>(knots), cfg);
}

// ---------------------------------------------------------------------------
// Exceedance probability of a scaled gamma over a sum of two scaled gammas.

/// Quadrature settings used by gamma_exceedance unless overridden.
inline QuadratureConfig exceedance_quadrature() {
  QuadratureConfig cfg;
  cfg.rule = QuadratureRule::gauss_kronrod;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-17;
  cfg.max_subdivisions = 4096;
  return cfg;
}

/// P(sa*A > sb*B + sc*C) for independent unit-scale A ~ Gamma(a),
/// B ~ Gamma(b), C ~ Gamma(c), with shape 0 meaning a point mass at 0.
///
/// With g = C/(A+C) ~ Beta(c, a) and alpha = sa/(sa+sc), the event needs
/// g < alpha, and given g the sum A+C ~ Gamma(a+c) is independent of g:
///
///   P = int_0^alpha I_w(b, a+c) dBeta(g; c, a),  w = k/(1+k),
///   k = (sa/sb)(1 - g/alpha).
///
/// Degenerate shapes reduce to single incomplete-beta values.
inline double gamma_exceedance(double a, double sa, double b, double sb, double c, double sc,
                               const QuadratureConfig& cfg = exceedance_quadrature()) {
  detail::require(a >= 0.0 && b >= 0.0 && c >= 0.0, "gamma_exceedance: shapes must be >= 0");
  detail::require(sa > 0.0 && sb > 0.0 && sc >= 0.0, "gamma_exceedance: scales must be positive (sc >= 0)");
  if (a == 0.0) return 0.0;
  const bool no_c = c == 0.0 || sc == 0.0;
  if (b == 0.0 && no_c) return 1.0;
  if (no_c) return beta_cdf(sa / (sa + sb), b, a);
  if (std::isinf(sc)) return 0.0;
  const double alpha = sa / (sa + sc);
  if (b == 0.0) return beta_cdf(alpha, c, a);
  if (alpha <= 0.0) return 0.0;

  const BetaDensity density(c, a);
  const double ratio = sa / sb;
  auto integrand = [&](double g) {
    const double k = ratio * (1.0 - g / alpha);
    if (k <= 0.0) return 0.0;
    const double w = k / (1.0 + k);
    const double d = density(g);
    if (d == 0.0 || !std::isfinite(d)) return 0.0;
    return beta_cdf(w, b, a + c) * d;
  };

  // Seed the partition with the bulk of the Beta(c, a) weight and with the
  // step of the inner incomplete beta, which is narrow when sa/sb is large.
  std::vector<double> knots{0.0, alpha};
  const double m = density.mean();
  const double sd = density.sd();
  for (double z : {-10.0, -3.0, 0.0, 3.0, 10.0}) knots.push_back(m + z * sd);
  const BetaDensity inner(b, a + c);
  for (double z : {-6.0, 0.0, 6.0}) {
    const double w = inner.mean() + z * inner.sd();
    if (w <= 0.0 || w >= 1.0) continue;
    knots.push_back(alpha * (1.0 - w / (1.0 - w) / ratio));
  }
  for (auto& k : knots) k = std::clamp(k, 0.0, alpha);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  if (knots.size() < 2) return 0.0;
  return detail::clamp_unit(integrate(integrand, std::span<const double>(knots), cfg));
}

}  // namespace dsplim::specfun
