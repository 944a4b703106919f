#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace speechmark {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a tag string into a seed, so independent streams can be derived
/// from one experiment seed.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ULL ^ mix64(seed);
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return mix64(h);
}

/// Counter-based pseudorandom stream: word(i) depends only on (key, i), so a
/// given key reproduces the identical stream on every run and platform. All
/// floating outputs are derived from the integers with exact arithmetic.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t word(std::uint64_t i) const {
    return mix64(key_ + (i + 1) * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t next() { return word(counter_++); }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [-1, 1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Deterministic Fisher-Yates. std::shuffle is implementation-defined, which
/// would break cross-platform reproducibility of fold assignments.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace speechmark
