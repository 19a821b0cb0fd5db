#include <sstream>
#include <string>

#include "doctest.h"
#include "ist/bench.hpp"

namespace bench = ist::bench;

namespace {

bench::run_spec tiny_spec() {
  bench::run_spec spec;
  spec.n = 5'000;
  spec.batch_size = 1'000;
  spec.batches = 2;
  spec.repeats = 2;
  spec.seed = 99;
  return spec;
}

}  // namespace

TEST_CASE("empty spec produces a clean zero report") {
  bench::run_spec spec;
  spec.n = 0;
  spec.batch_size = 0;
  spec.batches = 0;
  spec.repeats = 1;
  auto rep = bench::run(spec);
  CHECK(rep.prefill_keys == 0);
  for (const auto& row : rep.rows) {
    CHECK(row.mean_s >= 0.0);
    if (row.threads == 1) CHECK(row.speedup == 1.0);
  }
}

TEST_CASE("same seed twice yields identical results and tree digests") {
  auto a = bench::run(tiny_spec());
  auto b = bench::run(tiny_spec());
  CHECK(a.result_hash == b.result_hash);
  CHECK(a.tree_hash == b.tree_hash);
  CHECK(a.prefill_keys == b.prefill_keys);
}

TEST_CASE("single-thread rows have unit speedup by construction") {
  auto spec = tiny_spec();
  spec.threads = 1;
  auto rep = bench::run(spec);
  for (const auto& row : rep.rows) CHECK(row.speedup == 1.0);
}

TEST_CASE("csv schema is stable") {
  auto spec = tiny_spec();
  auto rep = bench::run(spec);
  std::ostringstream os;
  bench::write_csv(os, spec, rep);
  const std::string text = os.str();
  CHECK(text.rfind(
            "impl,n,batch_size,threads,alpha,seed,phase,mean_s,stddev_s,"
            "speedup\n",
            0) == 0);
  // one line per row plus the header
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');
  CHECK(lines == rep.rows.size() + 1);
  CHECK(text.find("stdset,") != std::string::npos);
}

TEST_CASE("clustered and uniform workloads run end to end") {
  for (auto kind : {ist::dist_kind::uniform, ist::dist_kind::clustered}) {
    auto spec = tiny_spec();
    spec.dist = kind;
    spec.repeats = 1;
    auto rep = bench::run(spec);
    CHECK(rep.prefill_keys == spec.n);
  }
}
