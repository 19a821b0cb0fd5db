#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "ist/gen.hpp"
#include "ist/oracle.hpp"
#include "ist/prepare.hpp"
#include "ist/tree.hpp"

using itree = ist::tree<std::int64_t>;
using ist::op_kind;
using ist::raw_op;
using ist::splitmix64;
using raw_vec = std::vector<raw_op<std::int64_t>>;

namespace {

raw_vec random_script(std::uint64_t seed, std::size_t n, std::int64_t range) {
  raw_vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = static_cast<std::int64_t>(
        splitmix64(seed, i) % static_cast<std::uint64_t>(range));
    op_kind kind;
    switch (splitmix64(seed ^ 0xabcd, i) % 4) {
      case 0:
      case 1:
        kind = op_kind::insert;
        break;
      case 2:
        kind = op_kind::erase;
        break;
      default:
        kind = op_kind::contains;
        break;
    }
    out[i] = {key, kind};
  }
  return out;
}

ist::batch_result run_batch(itree& t, const raw_vec& raw) {
  return t.execute_batch(ist::prepare_batch(raw));
}

}  // namespace

TEST_CASE("prepare_batch: empty input") {
  auto b = ist::prepare_batch(raw_vec{});
  CHECK(b.entries.empty());
  CHECK(b.raw_size == 0);

  itree t;
  t.insert(1);
  auto before = t.dump();
  CHECK(t.execute_batch(b).empty());
  CHECK(t.dump() == before);
}

TEST_CASE("prepare_batch: last update wins, replay outcomes preserved") {
  raw_vec raw{{5, op_kind::insert}, {5, op_kind::erase}};
  auto b = ist::prepare_batch(raw);
  REQUIRE(b.entries.size() == 1);
  CHECK(b.entries[0].kind == op_kind::erase);

  // Key absent beforehand: insert -> true, erase -> true (it saw the insert).
  itree t;
  CHECK(run_batch(t, raw) == ist::batch_result{1, 1});
  CHECK(t.empty());

  // Key present beforehand: insert -> false, erase -> true.
  itree t2;
  t2.insert(5);
  CHECK(run_batch(t2, raw) == ist::batch_result{0, 1});
  CHECK(t2.empty());
}

TEST_CASE("prepare_batch: contains sees earlier same-batch updates") {
  raw_vec raw{{5, op_kind::contains},
              {5, op_kind::insert},
              {5, op_kind::contains},
              {5, op_kind::erase},
              {5, op_kind::contains}};
  itree t;
  CHECK(run_batch(t, raw) == ist::batch_result{0, 1, 1, 1, 0});

  itree t2;
  t2.insert(5);
  CHECK(run_batch(t2, raw) == ist::batch_result{1, 0, 1, 1, 0});
}

TEST_CASE("pure insert batch into an empty tree builds the ideal tree") {
  std::vector<std::int64_t> keys(1'000);
  std::iota(keys.begin(), keys.end(), 7);
  raw_vec raw;
  for (auto k : keys) raw.push_back({k, op_kind::insert});

  itree via_batch;
  auto res = run_batch(via_batch, raw);
  CHECK(std::all_of(res.begin(), res.end(), [](auto v) { return v == 1; }));

  itree via_assign;
  via_assign.assign(keys);
  CHECK(via_batch.dump() == via_assign.dump());
  CHECK(via_batch.flatten() == keys);
}

TEST_CASE("batch with out-of-range inserts widens the root bounds") {
  itree t;
  for (std::int64_t k = 1'000; k < 1'200; ++k) t.insert(k);
  raw_vec raw{{5, op_kind::insert}, {9'999, op_kind::insert}};
  auto res = run_batch(t, raw);
  CHECK(res == ist::batch_result{1, 1});
  REQUIRE(t.root() != nullptr);
  CHECK(t.root()->lo == 5.0);
  CHECK(t.root()->hi == 9999.0);
  CHECK(t.contains(5));
  CHECK(t.contains(9'999));
  auto err = t.validate();
  if (err) FAIL(*err);
}

TEST_CASE("contains-only batch never mutates the tree") {
  itree t;
  for (std::int64_t k = 0; k < 10'000; k += 2) t.insert(k);
  const auto before = t.dump();
  raw_vec raw;
  for (std::uint64_t i = 0; i < 5'000; ++i)
    raw.push_back({static_cast<std::int64_t>(splitmix64(3, i) % 10'000),
                   op_kind::contains});
  auto res = run_batch(t, raw);
  for (std::size_t i = 0; i < raw.size(); ++i)
    REQUIRE((res[i] != 0) == (raw[i].key % 2 == 0));
  CHECK(t.dump() == before);
}

TEST_CASE("random batches match the oracle, including final contents") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    itree t;
    ist::oracle<std::int64_t> oracle;
    const std::int64_t range = 1 + static_cast<std::int64_t>(
        splitmix64(seed, 0) % 3'000);  // small ranges: heavy key collisions
    for (int round = 0; round < 4; ++round) {
      const std::size_t n = splitmix64(seed, 10 + round) % 2'000;
      auto raw = random_script(seed * 100 + round, n, range);
      auto got = run_batch(t, raw);
      auto want = oracle.apply(raw);
      REQUIRE(got == want);
    }
    REQUIRE(t.flatten() == oracle.sorted_contents());
    auto err = t.validate();
    if (err) FAIL(*err);
  }
}

TEST_CASE("mixed single ops and batches against the oracle") {
  itree t;
  ist::oracle<std::int64_t> oracle;
  for (std::uint64_t step = 0; step < 40; ++step) {
    if (step % 3 == 2) {
      auto raw = random_script(step + 500, 300, 800);
      REQUIRE(run_batch(t, raw) == oracle.apply(raw));
    } else {
      for (std::uint64_t i = 0; i < 200; ++i) {
        const auto key =
            static_cast<std::int64_t>(splitmix64(step, i) % 800);
        switch (splitmix64(step ^ 0x77, i) % 3) {
          case 0:
            REQUIRE(t.insert(key) == oracle.insert(key));
            break;
          case 1:
            REQUIRE(t.erase(key) == oracle.erase(key));
            break;
          default:
            REQUIRE(t.contains(key) == oracle.contains(key));
            break;
        }
      }
    }
  }
  CHECK(t.flatten() == oracle.sorted_contents());
}

TEST_CASE("execute_batch is deterministic across worker counts") {
  auto workload = [&](int threads) {
    return ist::par::run_with_threads(threads, [&] {
      itree t;
      auto fill = random_script(424242, 20'000, 40'000);
      for (auto& op : fill) op.kind = op_kind::insert;
      auto fill_res = run_batch(t, fill);
      auto ops = random_script(91, 10'000, 40'000);
      auto res = run_batch(t, ops);
      return std::tuple{fill_res, res, t.dump()};
    });
  };
  auto one = workload(1);
  auto two = workload(2);
  auto all = workload(ist::par::max_threads());
  CHECK(one == two);
  CHECK(one == all);
}
