#include "doctest.h"

#include <cmath>
#include <set>

#include "storm/rng.hpp"

using namespace storm;

TEST_CASE("hash64 is deterministic and order-sensitive") {
  CHECK(hash64({1, 2, 3}) == hash64({1, 2, 3}));
  CHECK(hash64({1, 2, 3}) != hash64({3, 2, 1}));
  CHECK(hash64({0}) != hash64({0, 0}));

  // no collisions over a small replica grid
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s)
    for (std::uint64_t p = 0; p < 16; ++p)
      for (std::uint64_t r = 0; r < 64; ++r) seen.insert(hash64({s, p, r}));
  CHECK(seen.size() == 8u * 16u * 64u);
}

TEST_CASE("streams with the same key replay identically") {
  RngStream a(42), b(42), c(43);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.gaussian();
    same = same && (x == b.gaussian());
    diff = diff || (x != c.gaussian());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("gaussian moments") {
  RngStream rng(7);
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s1 += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  s1 /= n;
  s2 /= n;
  s4 /= n;
  CHECK(std::abs(s1) < 3.0 / std::sqrt(double(n)));          // mean 0
  CHECK(std::abs(s2 - 1.0) < 3.0 * std::sqrt(2.0 / n));      // variance 1
  CHECK(std::abs(s4 - 3.0) < 3.0 * std::sqrt(96.0 / n));     // kurtosis 3
}

TEST_CASE("uniform stays in [0,1)") {
  RngStream rng(11);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}
