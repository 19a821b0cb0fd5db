#ifndef IST_PARALLEL_HPP_
#define IST_PARALLEL_HPP_

#include <cstddef>
#include <utility>

#include <tbb/parallel_invoke.h>
#include <tbb/task_arena.h>

// Fork-join substrate. All higher-level primitives express parallelism as
// binary forks joined before return; the scheduling itself is delegated to
// the oneTBB runtime. Worker budget is controlled per call tree through
// run_with_threads, never globally.
namespace ist::par {

template <class F, class G>
inline void fork2(F&& f, G&& g) {
  tbb::parallel_invoke(std::forward<F>(f), std::forward<G>(g));
}

// Runs f inside an arena capped at `threads` workers. Nested forks spawned
// by f stay inside the arena.
template <class F>
inline auto run_with_threads(int threads, F&& f) {
  tbb::task_arena arena(threads < 1 ? 1 : threads);
  return arena.execute(std::forward<F>(f));
}

inline int max_threads() { return tbb::this_task_arena::max_concurrency(); }

}  // namespace ist::par

#endif  // IST_PARALLEL_HPP_
