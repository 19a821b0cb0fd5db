#include "ist/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <tuple>
#include <vector>

#include "ist/gen.hpp"
#include "ist/oracle.hpp"
#include "ist/parallel.hpp"
#include "ist/prepare.hpp"
#include "ist/prim.hpp"
#include "ist/tree.hpp"

namespace ist {

// Debug hook used by the selftest corruption path and by tests.
struct test_access {
  template <class Tree>
  static void corrupt_live_size(Tree& t) {
    if (t.root_) t.root_->s_live += 1;
  }
};

}  // namespace ist

namespace ist::selftest {

namespace {

using itree = tree<std::int64_t>;
using raw_vec = std::vector<raw_op<std::int64_t>>;

std::vector<std::int64_t> distinct_sorted(std::uint64_t seed, std::size_t n,
                                          std::int64_t range) {
  std::vector<std::int64_t> out;
  out.reserve(n + n / 4);
  std::uint64_t i = 0;
  while (out.size() < n) {
    const std::size_t need = n - out.size();
    for (std::size_t j = 0; j < need + need / 8 + 8; ++j)
      out.push_back(static_cast<std::int64_t>(
          splitmix64(seed, i++) % static_cast<std::uint64_t>(range)));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  out.resize(n);
  return out;
}

raw_vec random_script(std::uint64_t seed, std::size_t n, std::int64_t range) {
  raw_vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = static_cast<std::int64_t>(
        splitmix64(seed, i) % static_cast<std::uint64_t>(range));
    op_kind kind;
    switch (splitmix64(seed ^ 0x9d2c5680, i) % 4) {
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

result prim_oracles(scale sc) {
  const std::size_t instances = sc == scale::full ? 1000 : 80;
  const std::size_t max_n = sc == scale::full ? 10'000 : 4'000;
  for (std::uint64_t s = 0; s < instances; ++s) {
    const std::size_t n = splitmix64(s, 0) % max_n;
    const std::size_t m = splitmix64(s, 1) % max_n;
    std::vector<std::int64_t> a(n), b(m);
    for (std::size_t i = 0; i < n; ++i)
      a[i] = static_cast<std::int64_t>(splitmix64(s, 10 + i) % 5000);
    for (std::size_t i = 0; i < m; ++i)
      b[i] = static_cast<std::int64_t>(splitmix64(s ^ 0xf00d, i) % 5000);

    auto [scan_got, total] =
        prim::scan_exclusive(std::span<const std::int64_t>(a), 97);
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (scan_got[i] != sum) return {"prim-oracles", false, "scan mismatch"};
      sum += a[i];
    }
    if (total != sum) return {"prim-oracles", false, "scan total mismatch"};

    auto keep = [](std::int64_t x) { return x % 5 < 2; };
    auto fgot = prim::filter(std::span<const std::int64_t>(a), keep, 97);
    std::vector<std::int64_t> fwant;
    for (auto x : a)
      if (keep(x)) fwant.push_back(x);
    if (fgot != fwant) return {"prim-oracles", false, "filter mismatch"};

    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    auto rgot = prim::rank(std::span<const std::int64_t>(a),
                           std::span<const std::int64_t>(b), 97);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = 0;
      while (k < m && b[k] < a[i]) ++k;
      if (rgot[i] != k) return {"prim-oracles", false, "rank mismatch"};
    }

    auto mgot = prim::merge(std::span<const std::int64_t>(a),
                            std::span<const std::int64_t>(b), std::less<>{}, 97);
    std::vector<std::int64_t> mwant;
    std::merge(a.begin(), a.end(), b.begin(), b.end(),
               std::back_inserter(mwant));
    if (mgot != mwant) return {"prim-oracles", false, "merge mismatch"};
  }
  return {"prim-oracles", true, {}};
}

result build_roundtrip(scale sc) {
  std::vector<std::size_t> sizes{16, 1'000, 10'000};
  if (sc == scale::full) {
    sizes.push_back(100'000);
    sizes.push_back(1'000'000);
  }
  for (std::size_t n : sizes) {
    auto keys = distinct_sorted(n, n, static_cast<std::int64_t>(n) * 20);
    itree t;
    t.assign(keys);
    if (t.flatten() != keys)
      return {"build-roundtrip", false, "flatten != keys at n=" + std::to_string(n)};
    if (auto err = t.validate())
      return {"build-roundtrip", false, *err + " at n=" + std::to_string(n)};
    const double bound =
        std::ceil(std::log2(std::log2(static_cast<double>(n)))) + 2.0;
    if (static_cast<double>(t.depth()) > bound)
      return {"build-roundtrip", false, "depth above loglog bound at n=" + std::to_string(n)};
  }
  return {"build-roundtrip", true, {}};
}

result single_op_oracle(scale sc) {
  const std::size_t ops = sc == scale::full ? 200'000 : 20'000;
  itree t;
  oracle<std::int64_t> o;
  const auto range = static_cast<std::int64_t>(ops / 3 + 1);
  for (std::uint64_t i = 0; i < ops; ++i) {
    const auto key = static_cast<std::int64_t>(
        splitmix64(17, i) % static_cast<std::uint64_t>(range));
    bool got = false, want = false;
    switch (splitmix64(18, i) % 4) {
      case 0:
      case 1:
        got = t.insert(key);
        want = o.insert(key);
        break;
      case 2:
        got = t.erase(key);
        want = o.erase(key);
        break;
      default:
        got = t.contains(key);
        want = o.contains(key);
        break;
    }
    if (got != want)
      return {"single-op-oracle", false, "op " + std::to_string(i) + " disagrees"};
  }
  if (t.flatten() != o.sorted_contents())
    return {"single-op-oracle", false, "final contents disagree"};
  if (auto err = t.validate()) return {"single-op-oracle", false, *err};
  return {"single-op-oracle", true, {}};
}

result batch_oracle(scale sc) {
  const std::uint64_t scripts = sc == scale::full ? 100 : 15;
  const std::size_t max_ops = sc == scale::full ? 5'000 : 1'500;
  for (std::uint64_t s = 1; s <= scripts; ++s) {
    itree t;
    oracle<std::int64_t> o;
    const std::int64_t range =
        1 + static_cast<std::int64_t>(splitmix64(s, 0) % 4'000);
    for (int round = 0; round < 4; ++round) {
      auto raw = random_script(s * 1000 + static_cast<std::uint64_t>(round),
                               splitmix64(s, 5 + round) % max_ops, range);
      auto got = t.execute_batch(prepare_batch(raw));
      auto want = o.apply(raw);
      if (got != want)
        return {"batch-oracle", false, "script " + std::to_string(s) + " disagrees"};
    }
    if (t.flatten() != o.sorted_contents())
      return {"batch-oracle", false, "script " + std::to_string(s) + " contents disagree"};
    if (auto err = t.validate()) return {"batch-oracle", false, *err};
  }
  return {"batch-oracle", true, {}};
}

result determinism(scale sc) {
  const std::size_t fill = sc == scale::full ? 1'000'000 : 20'000;
  const std::size_t ops = sc == scale::full ? 100'000 : 10'000;
  auto workload = [&](int threads) {
    return par::run_with_threads(threads, [&] {
      itree t;
      dist_spec d{dist_kind::uniform, 1, static_cast<std::int64_t>(2 * fill), 0.0};
      auto fill_keys = gen_keys(d, fill, 4242);
      raw_vec fops(fill_keys.size());
      for (std::size_t i = 0; i < fill_keys.size(); ++i)
        fops[i] = {fill_keys[i], op_kind::insert};
      auto r0 = t.execute_batch(prepare_batch(fops));
      auto raw = random_script(31337, ops, static_cast<std::int64_t>(2 * fill));
      auto r1 = t.execute_batch(prepare_batch(raw));
      return std::tuple{r0, r1, t.dump()};
    });
  };
  auto one = workload(1);
  auto all = workload(par::max_threads());
  if (one != all)
    return {"determinism", false, "results differ between 1 thread and max threads"};
  return {"determinism", true, {}};
}

// Million-key prefill through one bulk batch, then a mixed batch, checked
// against sequential replay. Full scale only.
result large_mixed_oracle() {
  const std::size_t fill_n = 1'000'000;
  const std::int64_t range = 2'000'000;
  auto keys = gen_keys({dist_kind::uniform, 1, range, 0.0}, fill_n, 71);
  raw_vec fill(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    fill[i] = {keys[i], op_kind::insert};
  itree t;
  oracle<std::int64_t> o;
  if (t.execute_batch(prepare_batch(fill)) != o.apply(fill))
    return {"large-mixed-oracle", false, "prefill outcomes disagree"};

  auto raw = random_script(72, 100'000, range);
  if (t.execute_batch(prepare_batch(raw)) != o.apply(raw))
    return {"large-mixed-oracle", false, "batch outcomes disagree"};
  if (t.flatten() != o.sorted_contents())
    return {"large-mixed-oracle", false, "final contents disagree"};
  if (auto err = t.validate()) return {"large-mixed-oracle", false, *err};
  return {"large-mixed-oracle", true, {}};
}

result invariant_detector() {
  itree t;
  for (std::int64_t k = 0; k < 2'000; ++k) t.insert(k * 3);
  if (t.validate())
    return {"invariant-detector", false, "sweep flagged a healthy tree"};
  test_access::corrupt_live_size(t);
  if (!t.validate())
    return {"invariant-detector", false, "sweep missed an injected corruption"};
  return {"invariant-detector", true, {}};
}

result corruption_hook() {
  itree t;
  for (std::int64_t k = 0; k < 5'000; ++k) t.insert(k);
  test_access::corrupt_live_size(t);
  if (auto err = t.validate())
    return {"invariant-sweep", false, *err};
  return {"invariant-sweep", true, {}};
}

}  // namespace

std::vector<result> run_suite(scale sc, bool inject_corruption) {
  std::vector<result> out;
  out.push_back(prim_oracles(sc));
  out.push_back(build_roundtrip(sc));
  out.push_back(single_op_oracle(sc));
  out.push_back(batch_oracle(sc));
  out.push_back(determinism(sc));
  if (sc == scale::full) out.push_back(large_mixed_oracle());
  out.push_back(invariant_detector());
  if (inject_corruption) out.push_back(corruption_hook());
  return out;
}

}  // namespace ist::selftest
