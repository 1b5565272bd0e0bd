// Bayesian comparator: independent conjugate gamma posteriors on
// L_n = eps*s + b, on b and on eps, combined through
//
//   S = (L_n - B) / E  conditioned on  L_n >= B.
//
// The posterior CDF is a ratio of gamma_exceedance values:
//
//   F_S(x) = 1 - P(L_n > B + x E) / P(L_n >= B).

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "dsplim/ds_limits.hpp"
#include "dsplim/errors.hpp"
#include "dsplim/specfun.hpp"

namespace dsplim::bayes {

using ds::ChannelObservation;

/// Gamma prior shapes on (eps*s + b, t*b, u*eps).
struct PriorConfig {
  double a_n = 1.0;
  double a_b = 1.0;
  double a_e = 1.0;
  std::string name = "B1";

  void validate() const {
    if (!(a_n > 0.0 && a_b > 0.0 && a_e > 0.0)) throw DomainError("PriorConfig: shapes must be positive");
  }

  static PriorConfig b1() { return {1.0, 1.0, 1.0, "B1"}; }
  static PriorConfig b2() { return {2.0, 2.0, 2.0, "B2"}; }
  static PriorConfig upper() { return {2.0, 1.0, 1.0, "upper"}; }
  static PriorConfig lower() { return {1.0, 2.0, 2.0, "lower"}; }

  /// Preset by name: B1, B2, upper, lower.
  static PriorConfig preset(std::string_view name) {
    if (name == "B1") return b1();
    if (name == "B2") return b2();
    if (name == "upper") return upper();
    if (name == "lower") return lower();
    throw DomainError("unknown prior preset '" + std::string(name) + "'");
  }
};

struct GammaLaw {
  double shape;
  double scale;
};

struct GammaPosteriors {
  GammaLaw ln;  // eps*s + b
  GammaLaw lb;  // b
  GammaLaw le;  // eps
};

/// How the gamma prior on each rate is updated by its count.
enum class Parameterization {
  /// Unit scale on L_n, 1/t on b, 1/u on eps (the literal comparator).
  literal,
  /// Proper Poisson-gamma update of a unit-scale prior: every scale halves.
  /// S is a ratio, so the limits are identical to `literal`.
  textbook,
};

inline GammaPosteriors conjugate_posteriors(const ChannelObservation& ch, const PriorConfig& prior,
                                            Parameterization param = Parameterization::literal) {
  ch.validate();
  prior.validate();
  const double f = param == Parameterization::textbook ? 0.5 : 1.0;
  return {{static_cast<double>(ch.n) + prior.a_n, f},
          {static_cast<double>(ch.y) + prior.a_b, f / ch.t},
          {static_cast<double>(ch.z) + prior.a_e, f / ch.u}};
}

/// Posterior CDF of S at x >= 0.
inline double bayes_posterior_cdf(const GammaPosteriors& post, double x,
                                  const specfun::QuadratureConfig& q = specfun::exceedance_quadrature()) {
  if (!(x >= 0.0)) throw DomainError("bayes_posterior_cdf: x must be >= 0");
  if (!(post.ln.shape > 0 && post.lb.shape > 0 && post.le.shape > 0 && post.ln.scale > 0 && post.lb.scale > 0 &&
        post.le.scale > 0)) {
    throw DomainError("bayes_posterior_cdf: shapes and scales must be positive");
  }
  const double norm = specfun::beta_cdf(post.ln.scale / (post.ln.scale + post.lb.scale), post.lb.shape, post.ln.shape);
  if (!(norm > 0.0)) throw NumericalError("bayes_posterior_cdf: P(L_n >= B) underflows");
  const double exceed =
      specfun::gamma_exceedance(post.ln.shape, post.ln.scale, post.lb.shape, post.lb.scale, post.le.shape,
                                x * post.le.scale, q);
  return ds::detail::finish_probability(1.0 - exceed / norm, "bayes_posterior_cdf");
}

namespace detail {

/// Root of cdf(x) = q on x >= 0 for a nondecreasing cdf with cdf(0) < q.
/// Brackets by doubling, then TOMS 748 to the requested relative width.
template <class Cdf>
double invert_cdf(Cdf&& cdf, double q, double guess, double rel_tol = 1e-8) {
  double lo = 0.0;
  double f_lo = cdf(0.0) - q;
  if (f_lo >= 0.0) return 0.0;
  double hi = std::max(guess, 1e-6);
  double f_hi = cdf(hi) - q;
  while (f_hi < 0.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    if (hi > 1e15) throw NumericalError("invert_cdf: could not bracket the quantile");
    f_hi = cdf(hi) - q;
  }
  if (f_hi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  auto tol = [rel_tol](double a, double b) { return std::abs(b - a) <= rel_tol * std::min(std::abs(a), std::abs(b)); };
  const auto [a, b] = boost::math::tools::toms748_solve([&](double x) { return cdf(x) - q; }, lo, hi, f_lo, f_hi,
                                                        tol, max_iter);
  return 0.5 * (a + b);
}

}  // namespace detail

/// Upper limits at each level q for one channel.
inline std::vector<double> bayes_upper_limits(const ChannelObservation& ch, const PriorConfig& prior,
                                              std::span<const double> qs,
                                              Parameterization param = Parameterization::literal) {
  const auto post = conjugate_posteriors(ch, prior, param);
  // Posterior mean of (L_n - B)/E, ignoring truncation, as a bracket seed.
  const double guess =
      std::max(1.0, (post.ln.shape * post.ln.scale) / (post.le.shape * post.le.scale));
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("bayes_upper_limit: q must lie in (0, 1)");
    out.push_back(detail::invert_cdf([&](double x) { return bayes_posterior_cdf(post, x); }, q,
                                     out.empty() ? guess : out.back()));
  }
  return out;
}

inline double bayes_upper_limit(const ChannelObservation& ch, const PriorConfig& prior, double q,
                                Parameterization param = Parameterization::literal) {
  const double qs[1] = {q};
  return bayes_upper_limits(ch, prior, qs, param).front();
}

}  // namespace dsplim::bayes
