// Seed-splittable random variates for Monte Carlo oracles and the
// evaluation harness.
//
// A handle is identified by (seed, stream_id). Work items derive their
// stream id from what they are (task kind, dataset index, channel index),
// never from scheduling order, so results do not depend on thread count.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "dsplim/errors.hpp"

namespace dsplim::sampling {

inline constexpr std::uint64_t kDefaultSeed = 20090201;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable stream id for a (kind, index, sub-index) work item.
constexpr std::uint64_t stream_id(std::string_view kind, std::uint64_t index = 0, std::uint64_t sub = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the kind tag
  for (char ch : kind) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(h ^ mix64(index)) ^ mix64(sub + 0x632be59bd9b4e019ULL));
}

class RngHandle {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RngHandle(std::uint64_t seed = kDefaultSeed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

  RngHandle(const RngHandle&) = delete;
  RngHandle& operator=(const RngHandle&) = delete;
  RngHandle(RngHandle&&) noexcept = default;
  RngHandle& operator=(RngHandle&&) noexcept = default;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// A fresh, independent handle for a sub-task of this one.
  RngHandle split(std::uint64_t child) const { return RngHandle(seed_, mix64(stream_ ^ mix64(child + 1))); }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

inline double sample_uniform(RngHandle& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double sample_exponential(RngHandle& rng, double scale) {
  if (!(scale > 0.0)) throw DomainError("sample_exponential: scale must be positive");
  return std::exponential_distribution<double>(1.0 / scale)(rng);
}

/// Gamma(shape, scale); shape 0 is the point mass at 0.
inline double sample_gamma(RngHandle& rng, double shape, double scale) {
  if (!(shape >= 0.0) || !(scale > 0.0)) throw DomainError("sample_gamma: shape >= 0 and scale > 0 required");
  if (shape == 0.0) return 0.0;
  return std::gamma_distribution<double>(shape, scale)(rng);
}

inline std::uint64_t sample_poisson(RngHandle& rng, double rate) {
  if (!(rate >= 0.0)) throw DomainError("sample_poisson: rate must be >= 0");
  if (rate == 0.0) return 0;
  return static_cast<std::uint64_t>(std::poisson_distribution<long long>(rate)(rng));
}

}  // namespace dsplim::sampling
