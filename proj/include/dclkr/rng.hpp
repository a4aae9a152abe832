#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace dclkr {

/// Counter-based, splittable generator. The n-th draw of a stream is a pure
/// function of (key, n), and split() derives child keys without consuming
/// draws, so any sampling schedule reproduces given the root seed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  /// Independent child stream identified by `stream`.
  Rng split(std::uint64_t stream) const { return Rng(key_, stream); }
  Rng split(std::initializer_list<std::uint64_t> path) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  /// Gamma(shape, 1), shape > 0.
  double gamma(double shape);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t parent_key, std::uint64_t stream)
      : key_(mix(parent_key ^ mix(stream + 0xbb67ae8584caa73bULL))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dclkr
