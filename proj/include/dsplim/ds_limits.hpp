// Dempster-Shafer upper limits for the three-Poisson counting model
//
//   n ~ Pois(eps*s + b),  y ~ Pois(t*b),  z ~ Pois(u*eps)
//
// Each channel bounds s by a random interval (S_l, S_u). The CDFs of the two
// endpoints, conditioned on S_u >= 0, come from the Poisson DSM intervals of
// the three rates:
//
//   F_l(x) = 1 - P(N_l > Y_u/t + x Z_u/u) / P(N_u >= Y_l/t)
//   F_u(x) = 1 - P(N_u > Y_l/t + x Z_l/u) / P(N_u >= Y_l/t)
//
// with N_l ~ Gamma(n), N_u ~ Gamma(n+1), and likewise for Y and Z. Every
// probability here is a specfun::gamma_exceedance value. The plausibility
// transform multiplies the channel commonalities r = F_l - F_u and
// normalizes the product into a density for s.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsplim/errors.hpp"
#include "dsplim/specfun.hpp"

namespace dsplim::ds {

struct ChannelObservation {
  std::uint64_t n = 0;  // main count
  std::uint64_t y = 0;  // background subsidiary count
  std::uint64_t z = 0;  // efficiency subsidiary count
  double t = 1.0;       // background scale
  double u = 1.0;       // efficiency scale

  void validate() const {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("ChannelObservation: t must be positive and finite");
    if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("ChannelObservation: u must be positive and finite");
  }

  friend bool operator==(const ChannelObservation&, const ChannelObservation&) = default;
};

struct Dataset {
  std::vector<ChannelObservation> channels;
  std::string label;

  void validate() const {
    if (channels.empty()) throw DomainError("Dataset: at least one channel required");
    for (const auto& ch : channels) ch.validate();
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct GridConfig {
  int points = 512;
  double tail_eps = 1e-8;
  double hard_cap = 1e12;
  specfun::QuadratureConfig quadrature = specfun::exceedance_quadrature();

  void validate() const {
    if (points < 16) throw DomainError("GridConfig: points must be >= 16");
    if (!(tail_eps > 0.0 && tail_eps < 1e-3)) throw DomainError("GridConfig: tail_eps must lie in (0, 1e-3)");
    if (!(hard_cap > 0.0)) throw DomainError("GridConfig: hard_cap must be positive");
    quadrature.validate();
  }
};

struct ChannelCurves {
  std::vector<double> xs;
  std::vector<double> f_lower;
  std::vector<double> f_upper;
  std::vector<double> r;
  bool improper = false;      // z == 0: F_upper is identically 0
  double tail_exponent = 0;   // r(x) ~ x^-tail_exponent for large x (== z)
};

struct PlausibilityDensity {
  std::vector<double> xs;
  std::vector<double> pdf;
  std::vector<double> cdf;
  double normalization = 0;   // integral of the unnormalized product
  double tail_exponent = 0;   // power-law decay of pdf beyond xs.back()
};

namespace detail {

inline constexpr double kClampSlack = 1e-9;

/// P(N_u >= Y_l/t): the probability that the channel's interval reaches s >= 0.
inline double conditioning_mass(const ChannelObservation& ch) {
  return specfun::beta_cdf(ch.t / (ch.t + 1.0), static_cast<double>(ch.y), static_cast<double>(ch.n) + 1.0);
}

/// P(N_l > Y_u/t + x Z_u/u), unnormalized.
inline double lower_exceedance(const ChannelObservation& ch, double x, const specfun::QuadratureConfig& q) {
  return specfun::gamma_exceedance(static_cast<double>(ch.n), 1.0, static_cast<double>(ch.y) + 1.0, 1.0 / ch.t,
                                   static_cast<double>(ch.z) + 1.0, x / ch.u, q);
}

/// P(N_u > Y_l/t + x Z_l/u), unnormalized.
inline double upper_exceedance(const ChannelObservation& ch, double x, const specfun::QuadratureConfig& q) {
  return specfun::gamma_exceedance(static_cast<double>(ch.n) + 1.0, 1.0, static_cast<double>(ch.y), 1.0 / ch.t,
                                   static_cast<double>(ch.z), x / ch.u, q);
}

inline double finish_probability(double p, const char* what) {
  if (std::isnan(p) || p < -kClampSlack || p > 1.0 + kClampSlack) {
    throw NumericalError(std::string(what) + ": value " + std::to_string(p) + " outside [0, 1]");
  }
  return std::clamp(p, 0.0, 1.0);
}

inline void check_x(double x) {
  if (!(x >= 0.0)) throw DomainError("channel CDF: x must be >= 0");
}

/// Survival functions 1 - F_l and 1 - F_u, plus r = F_l - F_u, at one x.
struct KnotValues {
  double lower_sf;
  double upper_sf;
  double r;
};

inline KnotValues knot_values(const ChannelObservation& ch, double x, double norm, const specfun::QuadratureConfig& q) {
  const double ql = ch.n == 0 ? 0.0 : lower_exceedance(ch, x, q) / norm;
  const double qu = ch.z == 0 ? 1.0 : upper_exceedance(ch, x, q) / norm;
  finish_probability(ql, "lower survival");
  finish_probability(qu, "upper survival");
  // S_u >= S_l, so the upper survival dominates; keep rounding from
  // inverting that near x = 0.
  const double lower_sf = std::clamp(ql, 0.0, 1.0);
  return {lower_sf, std::clamp(qu, lower_sf, 1.0), std::max(0.0, qu - ql)};
}

/// Integral over [a, b] of the interpolant through (a, fa), (b, fb): a
/// power law when both values are positive and a > 0 (exact on the
/// algebraic tails of the plausibility), otherwise a straight line. On
/// short cells the two agree to second order.
inline double cell_integral(double a, double b, double fa, double fb) {
  if (b <= a) return 0.0;
  if (a <= 0.0 || fa <= 0.0 || fb <= 0.0 || b < a * 1.0001) return 0.5 * (fa + fb) * (b - a);
  const double log_ratio = std::log(b / a);
  const double k = std::log(fb / fa) / log_ratio;  // f ~ x^k on the cell
  if (std::abs(k + 1.0) < 1e-9) return a * fa * log_ratio;
  return (b * fb - a * fa) / (k + 1.0);
}

inline double cell_sum(std::span<const double> xs, std::span<const double> ys) {
  double acc = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) acc += cell_integral(xs[i - 1], xs[i], ys[i - 1], ys[i]);
  return acc;
}

inline double total_tail_exponent(std::span<const ChannelObservation> channels) {
  double p = 0.0;
  for (const auto& ch : channels) p += static_cast<double>(ch.z);
  return p;
}

}  // namespace detail

/// Normalized CDF of the lower endpoint S_l.
inline double channel_cdf_lower(const ChannelObservation& ch, double x,
                                const specfun::QuadratureConfig& q = specfun::exceedance_quadrature()) {
  ch.validate();
  detail::check_x(x);
  if (ch.n == 0) return 1.0;  // N_l == 0 pins S_l at 0
  const double norm = detail::conditioning_mass(ch);
  return detail::finish_probability(1.0 - detail::lower_exceedance(ch, x, q) / norm, "channel_cdf_lower");
}

/// Normalized CDF of the upper endpoint S_u; identically 0 when z == 0.
inline double channel_cdf_upper(const ChannelObservation& ch, double x,
                                const specfun::QuadratureConfig& q = specfun::exceedance_quadrature()) {
  ch.validate();
  detail::check_x(x);
  if (ch.z == 0) return 0.0;
  const double norm = detail::conditioning_mass(ch);
  return detail::finish_probability(1.0 - detail::upper_exceedance(ch, x, q) / norm, "channel_cdf_upper");
}

/// Commonality of the singleton {x}: F_l(x) - F_u(x).
inline double channel_commonality(const ChannelObservation& ch, double x,
                                  const specfun::QuadratureConfig& q = specfun::exceedance_quadrature()) {
  ch.validate();
  detail::check_x(x);
  return detail::knot_values(ch, x, detail::conditioning_mass(ch), q).r;
}

/// Curves evaluated on caller-supplied knots (ascending, nonnegative).
inline ChannelCurves channel_curves(const ChannelObservation& ch, std::span<const double> xs,
                                    const specfun::QuadratureConfig& q = specfun::exceedance_quadrature()) {
  ch.validate();
  ChannelCurves out;
  out.improper = ch.z == 0;
  out.tail_exponent = static_cast<double>(ch.z);
  out.xs.assign(xs.begin(), xs.end());
  out.f_lower.reserve(xs.size());
  out.f_upper.reserve(xs.size());
  out.r.reserve(xs.size());
  const double norm = detail::conditioning_mass(ch);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    detail::check_x(xs[i]);
    if (i > 0 && xs[i] < xs[i - 1]) throw DomainError("channel_curves: knots must be ascending");
    const auto v = detail::knot_values(ch, xs[i], norm, q);
    out.f_lower.push_back(1.0 - v.lower_sf);
    out.f_upper.push_back(1.0 - v.upper_sf);
    out.r.push_back(v.r);
  }
  // Quadrature noise can leave ~1e-12 wiggles; the CDFs are monotone.
  for (std::size_t i = 1; i < out.xs.size(); ++i) {
    out.f_lower[i] = std::max(out.f_lower[i], out.f_lower[i - 1]);
    out.f_upper[i] = std::max(out.f_upper[i], out.f_upper[i - 1]);
  }
  return out;
}

/// Shared knot grid for a set of channels.
///
/// x_max doubles until every channel's lower endpoint has settled
/// (F_l >= 1 - tail_eps), every proper channel's upper endpoint has too
/// (F_u >= 1 - tail_eps), and, when the product of commonalities is
/// integrable, the power-law tail mass beyond x_max is below tail_eps of
/// the mass seen so far. Half the knots are linear over the bulk of the
/// mass, half log-spaced out to x_max.
inline std::vector<double> make_grid(std::span<const ChannelObservation> channels, const GridConfig& grid) {
  grid.validate();
  if (channels.empty()) throw DomainError("make_grid: no channels");
  const double p = detail::total_tail_exponent(channels);
  const bool integrable = p > 1.0;
  std::vector<double> norms;
  for (const auto& ch : channels) {
    ch.validate();
    norms.push_back(detail::conditioning_mass(ch));
  }

  // Product of commonalities at x, and the largest endpoint survival that
  // still has to settle.
  struct Probe {
    double prod;
    double unsettled;
  };
  auto probe = [&](double x) {
    Probe out{1.0, 0.0};
    for (std::size_t i = 0; i < channels.size(); ++i) {
      const auto v = detail::knot_values(channels[i], x, norms[i], grid.quadrature);
      out.prod *= v.r;
      out.unsettled = std::max(out.unsettled, v.lower_sf);
      if (channels[i].z > 0) out.unsettled = std::max(out.unsettled, v.upper_sf);
    }
    return out;
  };

  // Doubling probe from 2^-10. Cumulative mass along the probe sequence is
  // only a placement guide for the knots.
  constexpr double kStart = 1.0 / 1024.0;
  std::vector<double> px{0.0};
  std::vector<double> cum{0.0};
  double prev_prod = probe(0.0).prod;
  double x_max = 0.0;
  double first_half_settled = 0.0;  // first probe with both CDFs >= 0.99
  for (double x = kStart;; x *= 2.0) {
    if (x > grid.hard_cap) {
      if (integrable) throw UnboundedLimit("plausibility does not decay below tail_eps before hard_cap");
      x_max = px.back();
      break;
    }
    const Probe pr = probe(x);
    cum.push_back(cum.back() + detail::cell_integral(px.back(), x, prev_prod, pr.prod));
    px.push_back(x);
    prev_prod = pr.prod;
    if (first_half_settled == 0.0 && pr.unsettled <= 1e-2) first_half_settled = x;
    const double tail = integrable ? pr.prod * x / (p - 1.0) : 0.0;
    if (pr.unsettled <= grid.tail_eps && tail <= grid.tail_eps * cum.back()) {
      x_max = x;
      break;
    }
  }

  // Linear knots cover the bulk, (0, x_body]; log knots run from x_lo, the
  // last probe holding under 1e-4 of the mass, to x_max.
  double x_body = first_half_settled > 0.0 ? first_half_settled : x_max;
  double x_lo = kStart;
  const double total = cum.back();
  if (integrable && total > 0.0) {
    for (std::size_t j = 1; j < px.size(); ++j) {
      if (cum[j] <= 1e-4 * total) x_lo = px[j];
      if (cum[j] >= (1.0 - 1e-3) * total) {
        x_body = std::min(x_body, px[j]);
        break;
      }
    }
  }
  x_body = std::min(x_body, x_max);
  x_lo = std::min(x_lo, x_body / 8.0);

  const int n_lin = (grid.points - 1) / 2;
  const int n_log = grid.points - 1 - n_lin;
  std::vector<double> xs;
  xs.reserve(grid.points);
  xs.push_back(0.0);
  for (int i = 1; i <= n_lin; ++i) xs.push_back(x_body * i / n_lin);
  const double span = std::log(x_max / x_lo);
  for (int j = 0; j < n_log; ++j) xs.push_back(x_lo * std::exp(span * j / (n_log - 1)));
  xs.back() = x_max;
  std::sort(xs.begin(), xs.end());
  // Drop near-coincident knots from the two families.
  std::vector<double> out;
  out.reserve(xs.size());
  for (double v : xs) {
    if (out.empty() || v - out.back() > 1e-12 * std::max(1.0, v)) out.push_back(v);
  }
  return out;
}

/// Curves on a per-channel grid.
inline ChannelCurves channel_curves(const ChannelObservation& ch, const GridConfig& grid = {}) {
  const auto xs = make_grid(std::span<const ChannelObservation>(&ch, 1), grid);
  return channel_curves(ch, xs, grid.quadrature);
}

namespace detail {

/// r of one channel at x; interpolates between knots and extends the last
/// knot with its power-law tail.
inline double curve_value(const ChannelCurves& c, double x) {
  const auto& xs = c.xs;
  if (x <= xs.front()) return c.r.front();
  if (x >= xs.back()) {
    if (c.improper || c.tail_exponent == 0.0) return c.r.back();
    return c.r.back() * std::pow(xs.back() / x, c.tail_exponent);
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return c.r[i - 1] + w * (c.r[i] - c.r[i - 1]);
}

}  // namespace detail

/// Plausibility transform: density proportional to the product of the
/// channel commonalities, normalized by cell integration (see
/// detail::cell_integral) plus the power-law tail beyond the last knot.
inline PlausibilityDensity combine_channels(std::span<const ChannelCurves> curves, const GridConfig& grid = {}) {
  grid.validate();
  if (curves.empty()) throw DomainError("combine_channels: no channels");
  double p = 0.0;
  for (const auto& c : curves) {
    if (c.xs.empty() || c.xs.size() != c.r.size()) throw DomainError("combine_channels: malformed curves");
    p += c.tail_exponent;
  }
  if (p <= 1.0) {
    throw UnboundedLimit("product of commonalities decays no faster than 1/x; the upper limit is infinite");
  }

  PlausibilityDensity d;
  d.tail_exponent = p;
  const bool shared = std::all_of(curves.begin(), curves.end(), [&](const ChannelCurves& c) { return c.xs == curves[0].xs; });
  if (shared) {
    d.xs = curves[0].xs;
  } else {
    for (const auto& c : curves) d.xs.insert(d.xs.end(), c.xs.begin(), c.xs.end());
    std::sort(d.xs.begin(), d.xs.end());
    d.xs.erase(std::unique(d.xs.begin(), d.xs.end()), d.xs.end());
  }

  // Multiply in a fixed channel-independent order (ascending by value at
  // each knot) so permuting channels cannot change rounding.
  std::vector<double> factors(curves.size());
  d.pdf.resize(d.xs.size());
  for (std::size_t k = 0; k < d.xs.size(); ++k) {
    for (std::size_t i = 0; i < curves.size(); ++i) factors[i] = shared ? curves[i].r[k] : detail::curve_value(curves[i], d.xs[k]);
    std::sort(factors.begin(), factors.end());
    double prod = 1.0;
    for (double f : factors) prod *= f;
    d.pdf[k] = prod;
  }

  const double body = detail::cell_sum(d.xs, d.pdf);
  const double tail = d.pdf.back() * d.xs.back() / (p - 1.0);
  d.normalization = body + tail;
  if (!(d.normalization > 0.0) || !std::isfinite(d.normalization)) {
    throw NumericalError("combine_channels: plausibility product has no mass on the grid");
  }
  d.cdf.resize(d.xs.size());
  d.cdf[0] = 0.0;
  double acc = 0.0;
  for (std::size_t k = 1; k < d.xs.size(); ++k) {
    acc += detail::cell_integral(d.xs[k - 1], d.xs[k], d.pdf[k - 1], d.pdf[k]);
    d.cdf[k] = std::min(1.0, acc / d.normalization);
  }
  for (auto& v : d.pdf) v /= d.normalization;
  return d;
}

/// Smallest s with F_S(s) = q, linearly interpolated between knots.
inline double upper_limit(const PlausibilityDensity& d, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("upper_limit: q must lie in (0, 1)");
  if (d.xs.empty()) throw DomainError("upper_limit: empty density");
  if (d.cdf.front() >= q) return d.xs.front();
  const auto it = std::lower_bound(d.cdf.begin(), d.cdf.end(), q);
  if (it == d.cdf.end()) {
    // Beyond the last knot the density follows x^-p; invert its tail.
    const double rest = 1.0 - d.cdf.back();
    if (d.tail_exponent <= 1.0 || rest <= 0.0) return d.xs.back();
    return d.xs.back() * std::pow(rest / (1.0 - q), 1.0 / (d.tail_exponent - 1.0));
  }
  const std::size_t i = static_cast<std::size_t>(it - d.cdf.begin());
  if (d.cdf[i] == q) return d.xs[i];
  const double w = (q - d.cdf[i - 1]) / (d.cdf[i] - d.cdf[i - 1]);
  return d.xs[i - 1] + w * (d.xs[i] - d.xs[i - 1]);
}

/// Plausibility density of s for a dataset, on one shared grid.
inline PlausibilityDensity ds_density(const Dataset& data, const GridConfig& grid = {}) {
  data.validate();
  grid.validate();
  if (detail::total_tail_exponent(data.channels) <= 1.0) {
    throw UnboundedLimit("efficiency counts sum to <= 1; the plausibility of s does not decay");
  }
  const auto xs = make_grid(data.channels, grid);
  std::vector<ChannelCurves> curves;
  curves.reserve(data.channels.size());
  for (const auto& ch : data.channels) curves.push_back(channel_curves(ch, xs, grid.quadrature));
  return combine_channels(curves, grid);
}

/// DS upper limits at each requested level.
inline std::vector<double> ds_upper_limits(const Dataset& data, std::span<const double> qs, const GridConfig& grid = {}) {
  const auto d = ds_density(data, grid);
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(upper_limit(d, q));
  return out;
}

}  // namespace dsplim::ds
