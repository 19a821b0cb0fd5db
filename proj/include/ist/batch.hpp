#ifndef IST_BATCH_HPP_
#define IST_BATCH_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ist {

enum class op_kind : std::uint8_t { insert, erase, contains };

inline bool is_update(op_kind k) { return k != op_kind::contains; }

template <class K>
struct raw_op {
  K key;
  op_kind kind;
};

template <class K>
struct batch_entry {
  K key;
  op_kind kind;
  std::uint32_t origin;  // index into the raw operation sequence
};

// One boolean per raw input operation, in input order:
// insert -> newly inserted, erase -> was live, contains -> membership.
using batch_result = std::vector<std::uint8_t>;

// A preprocessed batch (see prepare_batch). Entries are sorted by key and
// carry at most one update entry per key (the last one in raw order). A batch
// behaves as an atomic sequential replay of its raw input: per key the op
// chain is pre-resolved against the unknown pre-batch membership, producing
// one outcome per raw op for either possible pre-state. The tree answers each
// surviving entry against its pre-batch contents; decoding that answer for
// one resolver entry per key selects the right column of the table.
template <class K>
struct batch {
  std::vector<batch_entry<K>> entries;

  // Indexed by raw op.
  std::vector<std::uint8_t> out_if_absent;
  std::vector<std::uint8_t> out_if_present;
  std::vector<std::uint32_t> group_of_raw;

  // Indexed by key group: one surviving entry whose tree answer determines
  // the key's pre-batch membership.
  std::vector<std::uint32_t> resolver_entry;

  // Exclusive prefix counts of update entries (size entries.size() + 1), so
  // the update count of any entry subrange is O(1).
  std::vector<std::uint64_t> update_prefix;

  // Key range covered by surviving insert entries; drives the root-bounds
  // widening decision.
  bool has_insert = false;
  K min_insert_key{};
  K max_insert_key{};

  std::size_t raw_size = 0;

  std::uint64_t updates_in(std::size_t lo, std::size_t hi) const {
    return update_prefix[hi] - update_prefix[lo];
  }
  bool empty() const { return entries.empty(); }
};

}  // namespace ist

#endif  // IST_BATCH_HPP_
