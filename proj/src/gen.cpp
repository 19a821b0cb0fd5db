#include "ist/gen.hpp"

#include <algorithm>
#include <stdexcept>

namespace ist {

dist_kind parse_dist_kind(const std::string& name) {
  if (name == "uniform-subset") return dist_kind::uniform_subset;
  if (name == "uniform") return dist_kind::uniform;
  if (name == "clustered") return dist_kind::clustered;
  throw std::invalid_argument("unknown distribution: " + name);
}

namespace {

// Sorted random subset of [lo, hi]: two passes (count per chunk, scan, fill)
// keep the output placement independent of the worker count.
std::vector<std::int64_t> gen_subset(const dist_spec& spec, std::uint64_t seed,
                                     std::size_t grain) {
  const auto range =
      static_cast<std::uint64_t>(spec.hi - spec.lo) + 1;
  constexpr std::uint64_t kChunk = 1 << 14;
  const std::uint64_t chunks = (range + kChunk - 1) / kChunk;
  const auto thresh = static_cast<std::uint64_t>(
      spec.p * 18446744073709551616.0 /* 2^64 */);
  auto keep = [&](std::uint64_t off) {
    if (spec.p >= 1.0) return true;
    return splitmix64(seed, off) < thresh;
  };
  std::vector<std::int64_t> counts(chunks);
  prim::parallel_for(
      0, chunks,
      [&](std::size_t c) {
        const std::uint64_t b = c * kChunk;
        const std::uint64_t e = std::min<std::uint64_t>(range, b + kChunk);
        std::int64_t cnt = 0;
        for (std::uint64_t off = b; off < e; ++off) cnt += keep(off);
        counts[c] = cnt;
      },
      1);
  const std::int64_t total =
      prim::scan_exclusive_inplace(std::span<std::int64_t>(counts), grain);
  std::vector<std::int64_t> out(static_cast<std::size_t>(total));
  prim::parallel_for(
      0, chunks,
      [&](std::size_t c) {
        const std::uint64_t b = c * kChunk;
        const std::uint64_t e = std::min<std::uint64_t>(range, b + kChunk);
        auto w = static_cast<std::size_t>(counts[c]);
        for (std::uint64_t off = b; off < e; ++off)
          if (keep(off)) out[w++] = spec.lo + static_cast<std::int64_t>(off);
      },
      1);
  return out;
}

}  // namespace

std::vector<std::int64_t> gen_keys(const dist_spec& spec, std::size_t n,
                                   std::uint64_t seed, std::size_t grain) {
  if (spec.hi < spec.lo)
    throw std::invalid_argument("gen_keys: empty key range");
  if (spec.kind == dist_kind::uniform_subset &&
      !(spec.p >= 0.0 && spec.p <= 1.0))
    throw std::invalid_argument("gen_keys: p must be in [0, 1]");

  switch (spec.kind) {
    case dist_kind::uniform_subset:
      return gen_subset(spec, seed, grain);
    case dist_kind::uniform: {
      const auto range =
          static_cast<std::uint64_t>(spec.hi - spec.lo) + 1;
      std::vector<std::int64_t> out(n);
      prim::parallel_for(
          0, n,
          [&](std::size_t i) {
            out[i] = spec.lo +
                     static_cast<std::int64_t>(splitmix64(seed, i) % range);
          },
          grain);
      return out;
    }
    case dist_kind::clustered: {
      // Runs of consecutive values at random far-apart starts; deliberately
      // non-smooth to stress the interpolation machinery.
      const auto range =
          static_cast<std::uint64_t>(spec.hi - spec.lo) + 1;
      constexpr std::uint64_t kRun = 256;
      const std::uint64_t span = range > kRun ? range - kRun : 1;
      std::vector<std::int64_t> out(n);
      prim::parallel_for(
          0, n,
          [&](std::size_t i) {
            const std::uint64_t cluster = i / kRun;
            const std::uint64_t base =
                splitmix64(seed ^ 0x5bf03635ab1f26c3ULL, cluster) % span;
            const auto v = static_cast<std::int64_t>(base + i % kRun);
            out[i] = spec.lo + std::min<std::int64_t>(
                                   v, static_cast<std::int64_t>(range - 1));
          },
          grain);
      return out;
    }
  }
  return {};
}

}  // namespace ist
