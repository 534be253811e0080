#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "mvreplay/rng.hpp"

using mvreplay::Rng;

TEST_SUITE_BEGIN("rng");

TEST_CASE("fixed seed reproduces the sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams with different tags are distinct") {
  Rng a = Rng::substream(7, "reservoir");
  Rng b = Rng::substream(7, "retrieval");
  Rng c = Rng::substream(7, "reservoir", 1);
  int equal_ab = 0, equal_ac = 0;
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u64();
    if (va == b.next_u64()) ++equal_ab;
    if (va == c.next_u64()) ++equal_ac;
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("uniform stays in [0,1) with sane mean") {
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int covers the range without bias at small n") {
  Rng rng(11);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) counts[rng.uniform_int(5)] += 1;
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);  // ~4.5 sigma
}

TEST_CASE("normal has near-standard moments") {
  Rng rng(5);
  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_SUITE_END();
