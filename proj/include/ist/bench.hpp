#ifndef IST_BENCH_HPP_
#define IST_BENCH_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ist/gen.hpp"

namespace ist::bench {

struct run_spec {
  std::size_t n = 1'000'000;       // prefill target
  std::size_t batch_size = 100'000;
  std::size_t batches = 1;
  dist_kind dist = dist_kind::uniform_subset;
  std::int64_t range_max = 0;      // 0 -> 2 * n
  double alpha = 0.5;
  int threads = 0;                 // 0 -> hardware max
  std::uint64_t seed = 42;
  int repeats = 3;

  std::int64_t key_range() const {
    return range_max > 0 ? range_max
                         : std::max<std::int64_t>(
                               2, 2 * static_cast<std::int64_t>(n));
  }
};

struct phase_row {
  std::string impl;   // "ist" or "stdset"
  std::string phase;  // "prefill", "prepare", "execute"
  int threads = 1;
  double mean_s = 0.0;
  double stddev_s = 0.0;
  double speedup = 1.0;
};

struct report {
  std::vector<phase_row> rows;
  std::size_t prefill_keys = 0;
  std::uint64_t result_hash = 0;  // digest of all batch outcome booleans
  std::uint64_t tree_hash = 0;    // digest of the final tree dump
};

// Prefills via one bulk batch, then applies `batches` prepared batches of
// insertions; times prepare and execute separately, averaged over `repeats`,
// at 1 thread and at `threads`, plus a sequential std::set baseline.
// Key generation is excluded from all timings.
report run(const run_spec& spec);

void write_csv(std::ostream& os, const run_spec& spec, const report& r);
void write_table(std::ostream& os, const run_spec& spec, const report& r);

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace ist::bench

#endif  // IST_BENCH_HPP_
