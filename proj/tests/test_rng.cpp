#include <doctest.h>

#include <cmath>
#include <set>

#include "mpim/rng.hpp"

using namespace mpim;

TEST_CASE("counter-based draws are pure functions of key and counter") {
  CHECK(rng::uniform(7, 3) == rng::uniform(7, 3));
  CHECK(rng::normal(7, 3) == rng::normal(7, 3));
  CHECK(rng::uniform(7, 3) != rng::uniform(8, 3));
  CHECK(rng::split(1, "a") != rng::split(1, "b"));
  CHECK(rng::split(1, "a") != rng::split(2, "a"));
}

TEST_CASE("uniform and normal moments") {
  constexpr int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng::uniform(42, i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng::normal(42, i);
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Stream::below stays in range and hits every value") {
  rng::Stream s(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = s.below(7);
    REQUIRE(x < 7);
    seen.insert(x);
  }
  CHECK(seen.size() == 7);
}
