#ifndef IST_PREPARE_HPP_
#define IST_PREPARE_HPP_

#include <cassert>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ist/batch.hpp"
#include "ist/prim.hpp"

namespace ist {

// Turns a raw operation sequence into an executable batch: sorts by key
// (stable on input order), keeps every contains entry plus the last update
// entry per key, and precomputes each raw op's sequential-replay outcome for
// both possible pre-batch memberships of its key. See batch<K> for how
// execute_batch consumes the table.
template <class K>
batch<K> prepare_batch(std::span<const raw_op<K>> raw,
                       std::size_t grain = prim::default_grain) {
  batch<K> b;
  const std::size_t n = raw.size();
  assert(n < std::numeric_limits<std::uint32_t>::max());
  b.raw_size = n;
  b.out_if_absent.assign(n, 0);
  b.out_if_present.assign(n, 0);
  b.group_of_raw.assign(n, 0);
  if (n == 0) {
    b.update_prefix = {0};
    return b;
  }

  std::vector<batch_entry<K>> sorted(n);
  prim::parallel_for(
      0, n,
      [&](std::size_t i) {
        sorted[i] = {raw[i].key, raw[i].kind, static_cast<std::uint32_t>(i)};
      },
      grain);
  prim::parallel_sort(
      sorted,
      [](const batch_entry<K>& x, const batch_entry<K>& y) {
        return x.key < y.key || (!(y.key < x.key) && x.origin < y.origin);
      },
      grain);

  // Key-group starts.
  std::vector<std::uint32_t> iota(n);
  prim::parallel_for(
      0, n, [&](std::size_t i) { iota[i] = static_cast<std::uint32_t>(i); },
      grain);
  auto starts = prim::filter(
      std::span<const std::uint32_t>(iota),
      [&](std::uint32_t i) {
        return i == 0 || sorted[i].key != sorted[i - 1].key;
      },
      grain);
  const std::size_t groups = starts.size();

  // Per group: replay the chain in input order under both pre-states, retain
  // contains entries plus the last update.
  std::vector<std::uint8_t> retain(n, 0);
  prim::parallel_for(
      0, groups,
      [&](std::size_t g) {
        const std::size_t s = starts[g];
        const std::size_t e = g + 1 < groups ? starts[g + 1] : n;
        bool cur_a = false;  // membership assuming key absent before batch
        bool cur_p = true;   // membership assuming key present before batch
        std::size_t last_update = n;
        for (std::size_t i = s; i < e; ++i) {
          const batch_entry<K>& se = sorted[i];
          b.group_of_raw[se.origin] = static_cast<std::uint32_t>(g);
          bool oa = false, op = false;
          switch (se.kind) {
            case op_kind::contains:
              oa = cur_a;
              op = cur_p;
              retain[i] = 1;
              break;
            case op_kind::insert:
              oa = !cur_a;
              op = !cur_p;
              cur_a = cur_p = true;
              last_update = i;
              break;
            case op_kind::erase:
              oa = cur_a;
              op = cur_p;
              cur_a = cur_p = false;
              last_update = i;
              break;
          }
          b.out_if_absent[se.origin] = oa;
          b.out_if_present[se.origin] = op;
        }
        if (last_update < n) retain[last_update] = 1;
      },
      1);

  auto keep_idx = prim::filter(
      std::span<const std::uint32_t>(iota),
      [&](std::uint32_t i) { return retain[i] != 0; }, grain);
  b.entries.resize(keep_idx.size());
  prim::parallel_for(
      0, keep_idx.size(),
      [&](std::size_t j) { b.entries[j] = sorted[keep_idx[j]]; }, grain);

  // One resolver entry per group: the first retained entry of its run.
  b.resolver_entry.assign(groups, 0);
  prim::parallel_for(
      0, b.entries.size(),
      [&](std::size_t j) {
        if (j == 0 || b.entries[j - 1].key != b.entries[j].key)
          b.resolver_entry[b.group_of_raw[b.entries[j].origin]] =
              static_cast<std::uint32_t>(j);
      },
      grain);

  const std::size_t ne = b.entries.size();
  b.update_prefix.assign(ne + 1, 0);
  prim::parallel_for(
      0, ne,
      [&](std::size_t j) {
        b.update_prefix[j] = is_update(b.entries[j].kind) ? 1 : 0;
      },
      grain);
  const std::uint64_t total_updates = prim::scan_exclusive_inplace(
      std::span<std::uint64_t>(b.update_prefix.data(), ne), grain);
  b.update_prefix[ne] = total_updates;

  for (const auto& e : b.entries) {
    if (e.kind != op_kind::insert) continue;
    if (!b.has_insert) {
      b.has_insert = true;
      b.min_insert_key = b.max_insert_key = e.key;
    } else {
      if (e.key < b.min_insert_key) b.min_insert_key = e.key;
      if (b.max_insert_key < e.key) b.max_insert_key = e.key;
    }
  }
  return b;
}

template <class K>
batch<K> prepare_batch(const std::vector<raw_op<K>>& raw,
                       std::size_t grain = prim::default_grain) {
  return prepare_batch(std::span<const raw_op<K>>(raw), grain);
}

}  // namespace ist

#endif  // IST_PREPARE_HPP_
