#ifndef IST_PRIM_HPP_
#define IST_PRIM_HPP_

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ist/parallel.hpp"

// Parallel sequence primitives: scan, filter, rank, merge, parallel_for.
// Every primitive produces output identical to its sequential reference for
// any worker count; parallel tasks only ever write disjoint output slots.
namespace ist::prim {

// Leaf size at which range recursion stops splitting and runs sequentially.
inline constexpr std::size_t default_grain = 2048;

// --------------------------------------------------------------------------
// parallel_for: binary splitting until the range is <= grain.

namespace detail {

template <class Body>
void parallel_for_rec(std::size_t lo, std::size_t hi, Body& body,
                      std::size_t grain) {
  if (hi - lo <= grain) {
    for (std::size_t i = lo; i < hi; ++i) body(i);
    return;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  par::fork2([&] { parallel_for_rec(lo, mid, body, grain); },
             [&] { parallel_for_rec(mid, hi, body, grain); });
}

}  // namespace detail

template <class Body>
void parallel_for(std::size_t lo, std::size_t hi, Body&& body,
                  std::size_t grain = default_grain) {
  if (lo >= hi) return;
  if (grain < 1) grain = 1;
  detail::parallel_for_rec(lo, hi, body, grain);
}

// --------------------------------------------------------------------------
// scan: exclusive prefix sums. Block-contraction scheme; block boundaries
// depend only on (n, grain), so the result is schedule-independent.

template <class T>
T scan_exclusive_inplace(std::span<T> xs, std::size_t grain = default_grain) {
  const std::size_t n = xs.size();
  if (grain < 1) grain = 1;
  if (n <= grain) {
    T sum{};
    for (std::size_t i = 0; i < n; ++i) {
      T v = xs[i];
      xs[i] = sum;
      sum += v;
    }
    return sum;
  }
  // Block size >= 2 so the contraction always shrinks.
  const std::size_t block = std::max<std::size_t>(2, grain);
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<T> sums(nblocks);
  parallel_for(
      0, nblocks,
      [&](std::size_t b) {
        const std::size_t blo = b * block, bhi = std::min(n, blo + block);
        T s{};
        for (std::size_t i = blo; i < bhi; ++i) s += xs[i];
        sums[b] = s;
      },
      1);
  T total = scan_exclusive_inplace(std::span<T>(sums), grain);
  parallel_for(
      0, nblocks,
      [&](std::size_t b) {
        const std::size_t blo = b * block, bhi = std::min(n, blo + block);
        T sum = sums[b];
        for (std::size_t i = blo; i < bhi; ++i) {
          T v = xs[i];
          xs[i] = sum;
          sum += v;
        }
      },
      1);
  return total;
}

template <class T>
std::pair<std::vector<T>, T> scan_exclusive(std::span<const T> xs,
                                            std::size_t grain = default_grain) {
  std::vector<T> out(xs.begin(), xs.end());
  T total = scan_exclusive_inplace(std::span<T>(out), grain);
  return {std::move(out), total};
}

// --------------------------------------------------------------------------
// filter: stable selection via flags + scan + scatter.

template <class T, class Pred>
std::vector<T> filter(std::span<const T> xs, Pred&& keep,
                      std::size_t grain = default_grain) {
  const std::size_t n = xs.size();
  if (n <= grain) {
    std::vector<T> out;
    for (std::size_t i = 0; i < n; ++i)
      if (keep(xs[i])) out.push_back(xs[i]);
    return out;
  }
  std::vector<std::int64_t> off(n);
  parallel_for(
      0, n, [&](std::size_t i) { off[i] = keep(xs[i]) ? 1 : 0; }, grain);
  const std::int64_t total =
      scan_exclusive_inplace(std::span<std::int64_t>(off), grain);
  std::vector<T> out(static_cast<std::size_t>(total));
  parallel_for(
      0, n,
      [&](std::size_t i) {
        if (keep(xs[i])) out[static_cast<std::size_t>(off[i])] = xs[i];
      },
      grain);
  return out;
}

// --------------------------------------------------------------------------
// rank: for each a[i], its insertion position in sorted b. The lower variant
// returns the smallest k with a[i] <= b[k] (so duplicates in b resolve to the
// leftmost slot); the upper variant returns the smallest k with a[i] < b[k].
// Divide and conquer on a with one binary search per split keeps the work at
// O(|a| + |b|) while the b-subranges at the leaves stay disjoint.

namespace detail {

// First index in [lo, hi) where past(b[idx]) holds; past is monotone.
template <class B, class Past>
std::size_t partition_point(std::span<const B> b, std::size_t lo,
                            std::size_t hi, Past&& past) {
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (past(b[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

// Adv(b_elem, a_elem) == true while b_elem sorts strictly before a_elem's
// target slot. Results written as absolute indices into b.
template <class A, class B, class Adv>
void rank_rec(std::span<const A> a, std::size_t alo, std::size_t ahi,
              std::span<const B> b, std::size_t blo, std::size_t bhi,
              std::size_t* out, Adv& adv, std::size_t grain) {
  const std::size_t na = ahi - alo;
  if (na == 0) return;
  const std::size_t nb = bhi - blo;
  if (na <= grain) {
    if (nb > 32 * na + 64) {
      // Narrow a over a wide b range: per-element binary search is cheaper
      // than walking b.
      for (std::size_t i = alo; i < ahi; ++i)
        out[i] = partition_point(b, blo, bhi,
                                 [&](const B& be) { return !adv(be, a[i]); });
      return;
    }
    std::size_t j = blo;
    for (std::size_t i = alo; i < ahi; ++i) {
      while (j < bhi && adv(b[j], a[i])) ++j;
      out[i] = j;
    }
    return;
  }
  const std::size_t mid = alo + na / 2;
  const std::size_t pos = partition_point(
      b, blo, bhi, [&](const B& be) { return !adv(be, a[mid]); });
  out[mid] = pos;
  par::fork2([&] { rank_rec(a, alo, mid, b, blo, pos, out, adv, grain); },
             [&] { rank_rec(a, mid + 1, ahi, b, pos, bhi, out, adv, grain); });
}

template <class T, class Less>
bool sorted(std::span<const T> xs, Less& lt) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (lt(xs[i], xs[i - 1])) return false;
  return true;
}

}  // namespace detail

// Smallest k with a[i] <= b[k] (sentinels b[-1] = -inf, b[|b|] = +inf).
template <class A, class B, class Less>
std::vector<std::size_t> rank_lower(std::span<const A> a, std::span<const B> b,
                                    Less lt, std::size_t grain = default_grain) {
  assert(detail::sorted(a, lt) && detail::sorted(b, lt));
  std::vector<std::size_t> out(a.size());
  auto adv = [&lt](const B& be, const A& ae) { return lt(be, ae); };
  detail::rank_rec(a, 0, a.size(), b, 0, b.size(), out.data(), adv,
                   std::max<std::size_t>(1, grain / 4));
  return out;
}

// Smallest k with a[i] < b[k].
template <class A, class B, class Less>
std::vector<std::size_t> rank_upper(std::span<const A> a, std::span<const B> b,
                                    Less lt, std::size_t grain = default_grain) {
  assert(detail::sorted(a, lt) && detail::sorted(b, lt));
  std::vector<std::size_t> out(a.size());
  auto adv = [&lt](const B& be, const A& ae) { return !lt(ae, be); };
  detail::rank_rec(a, 0, a.size(), b, 0, b.size(), out.data(), adv,
                   std::max<std::size_t>(1, grain / 4));
  return out;
}

template <class T>
std::vector<std::size_t> rank(std::span<const T> a, std::span<const T> b,
                              std::size_t grain = default_grain) {
  return rank_lower(a, b, std::less<T>{}, grain);
}

// --------------------------------------------------------------------------
// merge: sorted multiset union built from two ranks plus disjoint scatters.
// On ties, a's elements precede b's.

template <class T, class Less = std::less<T>>
void merge_into(std::span<const T> a, std::span<const T> b, std::span<T> out,
                Less lt = {}, std::size_t grain = default_grain) {
  assert(out.size() == a.size() + b.size());
  auto pa = rank_lower(a, b, lt, grain);  // #b strictly below a[i]
  auto pb = rank_upper(b, a, lt, grain);  // #a at or below b[j]
  parallel_for(
      0, a.size(), [&](std::size_t i) { out[i + pa[i]] = a[i]; }, grain);
  parallel_for(
      0, b.size(), [&](std::size_t j) { out[j + pb[j]] = b[j]; }, grain);
}

template <class T, class Less = std::less<T>>
std::vector<T> merge(std::span<const T> a, std::span<const T> b, Less lt = {},
                     std::size_t grain = default_grain) {
  std::vector<T> out(a.size() + b.size());
  merge_into(a, b, std::span<T>(out), lt, grain);
  return out;
}

// --------------------------------------------------------------------------
// parallel_sort: two-buffer merge sort on top of merge_into. The comparator
// must define a total order (break ties explicitly) so that the std::sort
// leaves agree with the merge path for any grain.

namespace detail {

template <class T, class Less>
void sort_rec(std::span<T> src, std::span<T> tmp, bool to_tmp, Less& lt,
              std::size_t grain) {
  const std::size_t n = src.size();
  if (n <= grain) {
    std::sort(src.begin(), src.end(), lt);
    if (to_tmp) std::copy(src.begin(), src.end(), tmp.begin());
    return;
  }
  const std::size_t mid = n / 2;
  par::fork2(
      [&] { sort_rec(src.subspan(0, mid), tmp.subspan(0, mid), !to_tmp, lt, grain); },
      [&] { sort_rec(src.subspan(mid), tmp.subspan(mid), !to_tmp, lt, grain); });
  std::span<T> from = to_tmp ? src : tmp;
  std::span<T> to = to_tmp ? tmp : src;
  merge_into(std::span<const T>(from.subspan(0, mid)),
             std::span<const T>(from.subspan(mid)), to, lt, grain);
}

}  // namespace detail

template <class T, class Less>
void parallel_sort(std::vector<T>& xs, Less lt,
                   std::size_t grain = default_grain) {
  if (xs.size() <= 1) return;
  std::vector<T> tmp(xs.size());
  detail::sort_rec(std::span<T>(xs), std::span<T>(tmp), false, lt, grain);
}

}  // namespace ist::prim

#endif  // IST_PRIM_HPP_
