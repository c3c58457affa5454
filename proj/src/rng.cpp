#include "mpim/rng.hpp"

#include <cmath>
#include <numbers>

namespace mpim::rng {

double uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return to_unit(combine(key, counter));
}

double normal(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t h = combine(key, counter);
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - to_unit(h);
  const double u2 = to_unit(mix64(h ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Stream::below(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection.
  while (true) {
    const std::uint64_t x = next_u64();
    const __uint128_t m = static_cast<__uint128_t>(x) * n;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
  }
}

}  // namespace mpim::rng
