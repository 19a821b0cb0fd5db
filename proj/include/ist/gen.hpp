#ifndef IST_GEN_HPP_
#define IST_GEN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ist/prim.hpp"

namespace ist {

// splitmix64, accessed counter-style: the i-th output of the stream seeded
// with `seed`. Stateless, so generators parallelize and stay deterministic
// for any worker count.
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + (i + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double splitmix_u01(std::uint64_t seed, std::uint64_t i) {
  return static_cast<double>(splitmix64(seed, i) >> 11) * 0x1.0p-53;
}

enum class dist_kind {
  uniform_subset,  // each value of [lo, hi] kept independently w.p. p; sorted
  uniform,         // n draws with replacement from [lo, hi]
  clustered,       // n keys in short runs of consecutive values (non-smooth)
};

struct dist_spec {
  dist_kind kind = dist_kind::uniform;
  std::int64_t lo = 1;
  std::int64_t hi = 1;
  double p = 0.5;  // uniform_subset only
};

dist_kind parse_dist_kind(const std::string& name);  // throws on bad name

// Deterministic in (spec, n, seed). n is the draw count for uniform and
// clustered and ignored for uniform_subset, whose size is governed by p.
std::vector<std::int64_t> gen_keys(const dist_spec& spec, std::size_t n,
                                   std::uint64_t seed,
                                   std::size_t grain = prim::default_grain);

}  // namespace ist

#endif  // IST_GEN_HPP_
