#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "doctest.h"
#include "ist/gen.hpp"
#include "ist/parallel.hpp"
#include "ist/prim.hpp"

using ist::splitmix64;
namespace prim = ist::prim;

namespace {

// Sequential references the parallel primitives must match bit for bit.

std::pair<std::vector<std::int64_t>, std::int64_t> scan_ref(
    const std::vector<std::int64_t>& xs) {
  std::vector<std::int64_t> out(xs.size());
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = sum;
    sum += xs[i];
  }
  return {out, sum};
}

template <class Pred>
std::vector<std::int64_t> filter_ref(const std::vector<std::int64_t>& xs,
                                     Pred keep) {
  std::vector<std::int64_t> out;
  for (auto x : xs)
    if (keep(x)) out.push_back(x);
  return out;
}

std::vector<std::size_t> rank_ref(const std::vector<std::int64_t>& a,
                                  const std::vector<std::int64_t>& b) {
  std::vector<std::size_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t k = 0;
    while (k < b.size() && b[k] < a[i]) ++k;  // smallest k with a[i] <= b[k]
    out[i] = k;
  }
  return out;
}

std::vector<std::int64_t> merge_ref(const std::vector<std::int64_t>& a,
                                    const std::vector<std::int64_t>& b) {
  std::vector<std::int64_t> out;
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::int64_t> random_vec(std::uint64_t seed, std::size_t n,
                                     std::int64_t range) {
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<std::int64_t>(splitmix64(seed, i) %
                                       static_cast<std::uint64_t>(range));
  return out;
}

std::vector<std::int64_t> random_sorted(std::uint64_t seed, std::size_t n,
                                        std::int64_t range) {
  auto out = random_vec(seed, n, range);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("scan_exclusive basics") {
  auto [empty, zero] = prim::scan_exclusive(std::span<const std::int64_t>{});
  CHECK(empty.empty());
  CHECK(zero == 0);

  std::vector<std::int64_t> xs{1, 2, 3};
  auto [out, total] = prim::scan_exclusive(std::span<const std::int64_t>(xs));
  CHECK(out == std::vector<std::int64_t>{0, 1, 3});
  CHECK(total == 6);
}

TEST_CASE("scan_exclusive matches sequential fold") {
  auto xs = random_vec(1, 10'000, 1'000'000);
  auto [want, want_total] = scan_ref(xs);
  for (std::size_t grain : {1ul, 7ul, 256ul, 2048ul, 100'000ul}) {
    auto [got, got_total] =
        prim::scan_exclusive(std::span<const std::int64_t>(xs), grain);
    CHECK(got == want);
    CHECK(got_total == want_total);
  }
}

TEST_CASE("filter basics and oracle") {
  std::vector<std::int64_t> xs{1, 2, 3, 4};
  auto even = [](std::int64_t x) { return x % 2 == 0; };
  CHECK(prim::filter(std::span<const std::int64_t>(xs), even) ==
        std::vector<std::int64_t>{2, 4});
  CHECK(prim::filter(std::span<const std::int64_t>(xs),
                     [](std::int64_t) { return true; }) == xs);

  auto big = random_vec(2, 9'999, 1'000);
  auto keep = [](std::int64_t x) { return x % 3 == 1; };
  CHECK(prim::filter(std::span<const std::int64_t>(big), keep, 64) ==
        filter_ref(big, keep));
}

TEST_CASE("rank basics") {
  std::vector<std::int64_t> b{1, 3, 4, 7};
  std::vector<std::int64_t> a{2, 5};
  CHECK(prim::rank(std::span<const std::int64_t>(a),
                   std::span<const std::int64_t>(b)) ==
        std::vector<std::size_t>{1, 3});

  std::vector<std::int64_t> a2{0, 9};
  CHECK(prim::rank(std::span<const std::int64_t>(a2),
                   std::span<const std::int64_t>(b)) ==
        std::vector<std::size_t>{0, 4});

  CHECK(prim::rank(std::span<const std::int64_t>{},
                   std::span<const std::int64_t>(b))
            .empty());
}

TEST_CASE("rank matches linear-scan oracle on duplicate-heavy input") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t na = splitmix64(seed, 100) % 3000;
    const std::size_t nb = splitmix64(seed, 101) % 3000;
    auto a = random_sorted(seed * 2 + 1, na, 50);  // small range: many dups
    auto b = random_sorted(seed * 2 + 2, nb, 50);
    auto got = prim::rank(std::span<const std::int64_t>(a),
                          std::span<const std::int64_t>(b), 64);
    CHECK(got == rank_ref(a, b));
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("merge basics, oracle, stability") {
  std::vector<std::int64_t> a{1, 3}, b{2, 4};
  CHECK(prim::merge(std::span<const std::int64_t>(a),
                    std::span<const std::int64_t>(b)) ==
        std::vector<std::int64_t>{1, 2, 3, 4});
  CHECK(prim::merge(std::span<const std::int64_t>{},
                    std::span<const std::int64_t>(b)) == b);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto x = random_sorted(seed + 50, splitmix64(seed, 7) % 5000, 200);
    auto y = random_sorted(seed + 90, splitmix64(seed, 8) % 5000, 200);
    auto got = prim::merge(std::span<const std::int64_t>(x),
                           std::span<const std::int64_t>(y), std::less<>{}, 128);
    CHECK(got.size() == x.size() + y.size());
    CHECK(got == merge_ref(x, y));
  }

  // Ties: a's elements precede b's. Tag values by source, compare on key only.
  using tagged = std::pair<std::int64_t, int>;
  std::vector<tagged> ta{{5, 0}, {5, 0}}, tb{{5, 1}, {6, 1}};
  auto key_less = [](const tagged& u, const tagged& v) {
    return u.first < v.first;
  };
  auto got = prim::merge(std::span<const tagged>(ta),
                         std::span<const tagged>(tb), key_less);
  CHECK(got == std::vector<tagged>{{5, 0}, {5, 0}, {5, 1}, {6, 1}});
}

TEST_CASE("parallel_for covers each index exactly once") {
  prim::parallel_for(0, 0, [](std::size_t) { CHECK(false); });

  const std::size_t n = 100'000;
  std::vector<std::int64_t> out(n, -1);
  prim::parallel_for(0, n, [&](std::size_t i) {
    out[i] = static_cast<std::int64_t>(i);
  });
  for (std::size_t i = 0; i < n; ++i) REQUIRE(out[i] == static_cast<std::int64_t>(i));

  // grain = n (fully sequential) agrees with grain = 1
  std::vector<std::int64_t> a(513), b(513);
  prim::parallel_for(0, a.size(), [&](std::size_t i) { a[i] = 3 * static_cast<std::int64_t>(i); }, a.size());
  prim::parallel_for(0, b.size(), [&](std::size_t i) { b[i] = 3 * static_cast<std::int64_t>(i); }, 1);
  CHECK(a == b);
}

TEST_CASE("primitives are schedule deterministic") {
  auto xs = random_vec(77, 30'000, 1000);
  auto sorted_xs = xs;
  std::sort(sorted_xs.begin(), sorted_xs.end());
  auto probe = random_sorted(78, 5'000, 1000);

  auto run_all = [&] {
    auto [sc, tot] = prim::scan_exclusive(std::span<const std::int64_t>(xs));
    auto fl = prim::filter(std::span<const std::int64_t>(xs),
                           [](std::int64_t x) { return x & 1; });
    auto rk = prim::rank(std::span<const std::int64_t>(probe),
                         std::span<const std::int64_t>(sorted_xs));
    auto mg = prim::merge(std::span<const std::int64_t>(probe),
                          std::span<const std::int64_t>(sorted_xs));
    return std::tuple{sc, tot, fl, rk, mg};
  };
  auto seq = ist::par::run_with_threads(1, run_all);
  auto par = ist::par::run_with_threads(ist::par::max_threads(), run_all);
  CHECK(seq == par);
}

TEST_CASE("parallel_sort sorts with a total-order comparator") {
  auto xs = random_vec(123, 50'000, 500);  // heavy duplicates
  std::vector<std::pair<std::int64_t, std::size_t>> keyed(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) keyed[i] = {xs[i], i};
  auto want = keyed;
  std::sort(want.begin(), want.end());
  prim::parallel_sort(keyed, [](const auto& u, const auto& v) {
    return u.first < v.first || (u.first == v.first && u.second < v.second);
  });
  CHECK(keyed == want);
}
