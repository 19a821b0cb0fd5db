#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ist/gen.hpp"
#include "ist/oracle.hpp"
#include "ist/tree.hpp"

using itree = ist::tree<std::int64_t>;
using ist::splitmix64;

TEST_CASE("insert/erase/contains basics") {
  itree t;
  CHECK(!t.contains(5));
  CHECK(t.insert(5));
  CHECK(t.size() == 1);
  CHECK(t.contains(5));
  CHECK(!t.insert(5));  // live duplicate
  CHECK(t.size() == 1);

  CHECK(!t.erase(7));  // absent
  CHECK(t.erase(5));
  CHECK(!t.contains(5));
  CHECK(t.size() == 0);
  CHECK(!t.erase(5));  // already gone

  // Tombstone resurrection counts as a fresh insert.
  for (std::int64_t k = 0; k < 40; ++k) t.insert(k * 10);
  CHECK(t.erase(100));
  CHECK(!t.contains(100));
  CHECK(t.insert(100));
  CHECK(t.contains(100));
}

TEST_CASE("contains leaves counters untouched, no-op updates count") {
  itree t;
  std::vector<std::int64_t> keys(100);
  std::iota(keys.begin(), keys.end(), 0);
  t.assign(keys);
  REQUIRE(t.root() != nullptr);
  CHECK(t.root()->c_ops == 0);

  for (int i = 0; i < 10; ++i) t.contains(i);
  CHECK(t.root()->c_ops == 0);  // reads never age the structure

  auto before = t.flatten();
  CHECK(!t.insert(50));  // duplicate: no-op, still a routed update
  CHECK(t.root()->c_ops == 1);
  CHECK(!t.erase(1'000'000));  // absent, outside bounds
  CHECK(t.root()->c_ops == 2);
  CHECK(t.flatten() == before);
}

TEST_CASE("random single-op script matches the sorted-set oracle") {
  itree t;
  ist::oracle<std::int64_t> oracle;
  const std::size_t ops = 100'000;
  for (std::uint64_t i = 0; i < ops; ++i) {
    const auto key =
        static_cast<std::int64_t>(splitmix64(5, i) % 30'000);  // dense: dups + tombstones
    switch (splitmix64(6, i) % 4) {
      case 0:
      case 1:
        CHECK(t.insert(key) == oracle.insert(key));
        break;
      case 2:
        CHECK(t.erase(key) == oracle.erase(key));
        break;
      default:
        CHECK(t.contains(key) == oracle.contains(key));
        break;
    }
  }
  CHECK(t.flatten() == oracle.sorted_contents());
  CHECK(t.size() == oracle.size());
  auto err = t.validate();
  if (err) FAIL(*err);
}

TEST_CASE("out-of-range insert rebuilds the root with fresh bounds") {
  itree t;
  for (std::int64_t k = 100; k < 200; ++k) t.insert(k);
  REQUIRE(t.root() != nullptr);
  CHECK(t.root()->lo == 100.0);

  CHECK(t.insert(5));
  CHECK(t.root()->lo == 5.0);
  CHECK(t.root()->c_ops == 0);  // fresh rebuild
  CHECK(t.contains(5));
  CHECK(t.insert(1'000));
  CHECK(t.root()->hi == 1000.0);
  CHECK(t.size() == 102);
  auto err = t.validate();
  if (err) FAIL(*err);
}

TEST_CASE("sorted adversarial insertions keep depth logarithmic") {
  const std::int64_t n = 20'000;
  itree t;
  for (std::int64_t k = 0; k < n; ++k) t.insert(k);
  CHECK(t.size() == static_cast<std::size_t>(n));
  const double bound = 2.0 * std::log2(static_cast<double>(n)) + 2.0;
  CHECK(static_cast<double>(t.depth()) <= bound);
  auto err = t.validate();
  if (err) FAIL(*err);

  std::vector<std::int64_t> want(n);
  std::iota(want.begin(), want.end(), 0);
  CHECK(t.flatten() == want);
}

TEST_CASE("delete-heavy workload leaves a consistent tombstoned tree") {
  itree t;
  ist::oracle<std::int64_t> oracle;
  for (std::int64_t k = 0; k < 5'000; ++k) {
    t.insert(k);
    oracle.insert(k);
  }
  for (std::uint64_t i = 0; i < 4'000; ++i) {
    const auto key = static_cast<std::int64_t>(splitmix64(99, i) % 5'000);
    CHECK(t.erase(key) == oracle.erase(key));
  }
  CHECK(t.flatten() == oracle.sorted_contents());
  auto err = t.validate();
  if (err) FAIL(*err);
}

TEST_CASE("slack threshold config exercises in-place leaf growth") {
  ist::config cfg;
  cfg.rebuild_ratio = 1.0;
  cfg.leaf_cutoff = 3;
  itree t(cfg);
  std::vector<std::int64_t> keys{10, 20, 30};
  t.assign(keys);
  REQUIRE(t.root() != nullptr);
  REQUIRE(t.root()->leaf());

  CHECK(t.insert(15));  // c=1 < 3: grows the leaf in place
  CHECK(t.root()->leaf());
  CHECK(t.insert(25));  // c=2 < 3
  CHECK(t.root()->leaf());
  CHECK(t.insert(12));  // c=3 >= 3: rebuilds into an internal node
  CHECK(!t.root()->leaf());
  CHECK(t.flatten() == std::vector<std::int64_t>{10, 12, 15, 20, 25, 30});
  auto err = t.validate();
  if (err) FAIL(*err);
}

TEST_CASE("config validation rejects out-of-range parameters") {
  ist::config bad_alpha;
  bad_alpha.alpha = 1.0;
  CHECK_THROWS_AS(itree{bad_alpha}, std::invalid_argument);

  ist::config bad_ratio;
  bad_ratio.rebuild_ratio = 0.0;
  CHECK_THROWS_AS(itree{bad_ratio}, std::invalid_argument);

  ist::config bad_cutoff;
  bad_cutoff.leaf_cutoff = 0;
  CHECK_THROWS_AS(itree{bad_cutoff}, std::invalid_argument);
}

TEST_CASE("alpha above one half produces denser ID tables that still verify") {
  ist::config cfg;
  cfg.alpha = 0.75;
  itree t(cfg);
  std::vector<std::int64_t> keys(30'000);
  std::iota(keys.begin(), keys.end(), -15'000);
  t.assign(keys);
  CHECK(t.flatten() == keys);
  auto err = t.validate();
  if (err) FAIL(*err);
  // m = floor(n^0.75) at the root
  const auto want_m = static_cast<std::size_t>(
      std::pow(static_cast<double>(keys.size()), 0.75) + 1e-9);
  CHECK(t.root()->id.size() == want_m);
}
