#pragma once

#include <cstdint>
#include <string_view>

// Counter-based random streams. Every random draw in the simulator is a pure
// function of (stream key, counter), so results do not depend on call order
// or on how work is partitioned.

namespace mpim::rng {

/// splitmix64 finalizer; bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combine a key with one more word.
constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ mix64(word + 0x632be59bd9b4e019ULL));
}

/// FNV-1a over a tag, used to name substreams.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derive an independent seed for a named purpose from a master seed.
/// This is the documented split function: split(master, tag) =
/// mix64(master ^ mix64(fnv1a(tag) + c)).
constexpr std::uint64_t split(std::uint64_t master, std::string_view tag) noexcept {
  return combine(master, tag_hash(tag));
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double uniform(std::uint64_t key, std::uint64_t counter) noexcept;

/// Standard normal draw (Box-Muller on two derived uniforms).
double normal(std::uint64_t key, std::uint64_t counter) noexcept;

/// Sequential generator over a counter-based stream.
class Stream {
public:
  explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  double uniform() noexcept { return rng::uniform(key_, counter_++); }
  double normal() noexcept { return rng::normal(key_, counter_++); }
  std::uint64_t next_u64() noexcept { return combine(key_, counter_++); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mpim::rng
