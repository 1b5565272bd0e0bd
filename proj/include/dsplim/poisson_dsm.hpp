// Poisson DSM: an observed count k from a Poisson with mean rate/scale
// bounds the rate by the random interval (V_k, V_{k+1}), the k-th and
// (k+1)-th arrivals of a Poisson process with exponential gaps of mean
// `scale`.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "dsplim/errors.hpp"
#include "dsplim/sampling.hpp"
#include "dsplim/specfun.hpp"

namespace dsplim::dsm {

/// Law of the random interval (V_k, V_{k+1}) for an observed count k.
/// scale is 1 for a plain Poisson count and 1/t for a Pois(t * rate) count.
struct ARandomIntervalLaw {
  std::uint64_t count = 0;
  double scale = 1.0;

  ARandomIntervalLaw() = default;
  ARandomIntervalLaw(std::uint64_t k, double s) : count(k), scale(s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("ARandomIntervalLaw: scale must be positive and finite");
  }
};

/// P(V_k <= lo, V_{k+1} >= hi) = (lo/scale)^k exp(-hi/scale) / k!.
inline double commonality(const ARandomIntervalLaw& law, double lo, double hi) {
  if (!(lo >= 0.0)) throw DomainError("commonality: lo must be >= 0");
  if (!(hi >= lo)) throw DomainError("commonality: hi must be >= lo");
  const double k = static_cast<double>(law.count);
  if (std::isinf(hi)) return 0.0;
  if (law.count == 0) return std::exp(-hi / law.scale);
  if (lo == 0.0) return 0.0;
  const double log_c = k * std::log(lo / law.scale) - specfun::log_gamma(k + 1.0) - hi / law.scale;
  return std::clamp(std::exp(log_c), 0.0, 1.0);
}

/// Plausibility of {lambda}: F_{V_k}(lambda) - F_{V_{k+1}}(lambda), which is
/// the commonality of the degenerate interval (lambda, lambda).
inline double singleton_plausibility(const ARandomIntervalLaw& law, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("singleton_plausibility: lambda must be >= 0");
  return commonality(law, lambda, lambda);
}

struct Interval {
  double lo;
  double hi;
};

/// One draw of (V_k, V_{k+1}): lo ~ Gamma(k, scale), hi = lo + Expo(scale).
inline Interval sample_interval(const ARandomIntervalLaw& law, sampling::RngHandle& rng) {
  const double lo = sampling::sample_gamma(rng, static_cast<double>(law.count), law.scale);
  return {lo, lo + sampling::sample_exponential(rng, law.scale)};
}

}  // namespace dsplim::dsm
