#ifndef IST_COUNTERS_HPP_
#define IST_COUNTERS_HPP_

#include <atomic>
#include <cstdint>

// Instrumentation: search node visits plus rebuild count and total rebuilt
// keys. Compile with -DIST_ENABLE_COUNTERS=0 to stub everything out.
#ifndef IST_ENABLE_COUNTERS
#define IST_ENABLE_COUNTERS 1
#endif

namespace ist::stats {

struct snapshot {
  std::int64_t nodes_visited = 0;
  std::int64_t rebuilds = 0;
  std::int64_t rebuilt_keys = 0;
};

#if IST_ENABLE_COUNTERS

namespace detail {
inline std::atomic<std::int64_t> visits{0};
inline std::atomic<std::int64_t> rebuilds{0};
inline std::atomic<std::int64_t> rebuilt_keys{0};
}  // namespace detail

inline void count_visit() {
  detail::visits.fetch_add(1, std::memory_order_relaxed);
}

inline void count_rebuild(std::int64_t keys) {
  detail::rebuilds.fetch_add(1, std::memory_order_relaxed);
  detail::rebuilt_keys.fetch_add(keys, std::memory_order_relaxed);
}

inline void reset() {
  detail::visits.store(0);
  detail::rebuilds.store(0);
  detail::rebuilt_keys.store(0);
}

inline snapshot counters() {
  return {detail::visits.load(), detail::rebuilds.load(),
          detail::rebuilt_keys.load()};
}

#else

inline void count_visit() {}
inline void count_rebuild(std::int64_t) {}
inline void reset() {}
inline snapshot counters() { return {}; }

#endif  // IST_ENABLE_COUNTERS

}  // namespace ist::stats

#endif  // IST_COUNTERS_HPP_
