#include <doctest.h>

#include <set>

#include "psps/common.hpp"
#include "psps/rng.hpp"

using namespace psps;

TEST_CASE("bitset basics") {
  Bitset b(70);
  CHECK(b.none());
  b.set(0, true);
  b.set(69, true);
  CHECK(b.count() == 2);
  CHECK(b.get(69));
  CHECK_FALSE(b.get(68));
  Bitset full(70, true);
  CHECK(full.all());
  CHECK(b.subset_of(full));
  CHECK_FALSE(full.subset_of(b));
  CHECK((b & full) == b);
}

TEST_CASE("bitset equality ignores nothing") {
  Bitset a(8), b(8);
  a.set(3, true);
  CHECK(a != b);
  b.set(3, true);
  CHECK(a == b);
  CHECK(a.hash() == b.hash());
}

TEST_CASE("keyed rng streams are independent and reproducible") {
  Rng a(42, {1, 7});
  Rng a2(42, {1, 7});
  Rng b(42, {1, 8});
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same = same && x == a2.next_u64();
    diff = diff || x != b.next_u64();
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("rng uniform lies in [0,1) and normal has sane moments") {
  Rng r(7, {});
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = r.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("parallel_for output is schedule-independent") {
  std::vector<int> a(1000), b(1000);
  parallel_for(1000, 1, [&](std::size_t i) { a[i] = static_cast<int>(i * i % 97); });
  parallel_for(1000, 4, [&](std::size_t i) { b[i] = static_cast<int>(i * i % 97); });
  CHECK(a == b);
}
