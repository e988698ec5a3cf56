#include <doctest.h>

#include <cmath>
#include <set>

#include "milab/rng.hpp"

using namespace milab::rng;

TEST_CASE("philox: deterministic and key/stream sensitive") {
  Stream a(1234, 7), b(1234, 7);
  for (int i = 0; i < 256; ++i) CHECK(a.next_u32() == b.next_u32());

  Stream c(1234, 8), d(1235, 7);
  int same_c = 0, same_d = 0;
  Stream a2(1234, 7);
  for (int i = 0; i < 256; ++i) {
    const std::uint32_t ref = a2.next_u32();
    if (c.next_u32() == ref) ++same_c;
    if (d.next_u32() == ref) ++same_d;
  }
  CHECK(same_c < 8);
  CHECK(same_d < 8);
}

TEST_CASE("philox: counter addressability (seek == fresh stream at block)") {
  Stream a(99, 3);
  for (int i = 0; i < 777; ++i) a.next_gaussian();
  const std::uint64_t block = a.block();
  Stream b(99, 3, block);
  Stream c(99, 3);
  c.seek(block);
  for (int i = 0; i < 32; ++i) {
    const std::uint64_t want = b.next_u64();
    CHECK(c.next_u64() == want);
  }
}

TEST_CASE("uniform and gaussian moments") {
  Stream s(5, 11);
  const int n = 200000;
  long double su = 0.0L, sg = 0.0L, sg2 = 0.0L, sg4 = 0.0L;
  for (int i = 0; i < n; ++i) {
    su += s.next_double();
    const double g = s.next_gaussian();
    sg += g;
    sg2 += static_cast<long double>(g) * g;
    sg4 += static_cast<long double>(g) * g * g * g;
  }
  CHECK(std::abs(static_cast<double>(su / n) - 0.5) <= 3.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(static_cast<double>(sg / n)) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(static_cast<double>(sg2 / n) - 1.0) <=
        3.0 * std::sqrt(2.0 / static_cast<double>(n)));
  // Kurtosis of a standard normal.
  CHECK(std::abs(static_cast<double>(sg4 / n) - 3.0) <= 0.1);
}

TEST_CASE("signs are balanced and in {-1, +1}") {
  Stream s(17, 2);
  int pos = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = s.next_sign();
    CHECK((v == 1.0 || v == -1.0));
    if (v > 0) ++pos;
  }
  CHECK(std::abs(pos - n / 2) <= 3 * std::sqrt(n) / 2);
}
