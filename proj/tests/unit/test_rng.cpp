#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dactor/rng.hpp"

using dactor::Rng;

TEST_CASE("key 0 reproduces the published SplitMix64 sequence for seed 0") {
  Rng rng(0);
  CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next_u64() == 0x06C45D188009454FULL);
  CHECK(rng.counter() == 3);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(dactor::fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(dactor::fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("named streams are reproducible and distinct") {
  Rng a = Rng::stream(7, "env");
  Rng b = Rng::stream(7, "env");
  Rng c = Rng::stream(7, "init");
  Rng d = Rng::stream(8, "env");
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
  }
  CHECK(a == b);
}

TEST_CASE("uniform stays in [0, 1) and has the right mean") {
  Rng rng(11);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
  const double x = rng.uniform(-2.0, 3.0);
  CHECK(x >= -2.0);
  CHECK(x < 3.0);
}

TEST_CASE("uniform_index is bounded and roughly flat") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.uniform_index(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(rng.uniform_index(1) == 0);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("normal deviates have zero mean and unit variance") {
  Rng rng(5);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  Rng r2(5);
  CHECK(r2.normal(3.0, 0.0) == 3.0);
}
