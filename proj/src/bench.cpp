#include "ist/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>

#include "ist/parallel.hpp"
#include "ist/prepare.hpp"
#include "ist/tree.hpp"

namespace ist::bench {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

using steady = std::chrono::steady_clock;

double seconds_since(steady::time_point t0) {
  return std::chrono::duration<double>(steady::now() - t0).count();
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double m =
      std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  var /= static_cast<double>(xs.size());
  return {m, std::sqrt(var)};
}

struct workload {
  std::vector<raw_op<std::int64_t>> prefill_ops;
  std::vector<std::vector<raw_op<std::int64_t>>> batch_ops;
};

workload make_workload(const run_spec& spec) {
  workload w;
  const std::int64_t range = spec.key_range();

  dist_spec prefill_dist;
  prefill_dist.kind = spec.dist;
  prefill_dist.lo = 1;
  prefill_dist.hi = range;
  prefill_dist.p = std::min(
      1.0, static_cast<double>(spec.n) / static_cast<double>(range));
  auto keys = gen_keys(prefill_dist, spec.n, spec.seed);
  w.prefill_ops.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    w.prefill_ops[i] = {keys[i], op_kind::insert};

  // Batch keys are draws, not a subset; a subset prefill pairs with uniform
  // batch draws over the same range.
  dist_spec batch_dist = prefill_dist;
  if (batch_dist.kind == dist_kind::uniform_subset)
    batch_dist.kind = dist_kind::uniform;
  for (std::size_t bi = 0; bi < spec.batches; ++bi) {
    auto bkeys = gen_keys(batch_dist, spec.batch_size, spec.seed + 1000 + bi);
    std::vector<raw_op<std::int64_t>> ops(bkeys.size());
    for (std::size_t i = 0; i < bkeys.size(); ++i)
      ops[i] = {bkeys[i], op_kind::insert};
    w.batch_ops.push_back(std::move(ops));
  }
  return w;
}

struct once_result {
  double prefill = 0.0, prepare = 0.0, execute = 0.0;
  std::uint64_t result_hash = 0, tree_hash = 0;
};

once_result run_once(const run_spec& spec, const workload& w, int threads) {
  return par::run_with_threads(threads, [&] {
    once_result r;
    config cfg;
    cfg.alpha = spec.alpha;
    tree<std::int64_t> t(cfg);
    const char* phase = "prefill";
    try {
      auto t0 = steady::now();
      t.execute_batch(prepare_batch(w.prefill_ops));
      r.prefill = seconds_since(t0);

      std::uint64_t rh = 0xcbf29ce484222325ULL;
      for (const auto& ops : w.batch_ops) {
        phase = "prepare";
        t0 = steady::now();
        auto b = prepare_batch(ops);
        r.prepare += seconds_since(t0);
        phase = "execute";
        t0 = steady::now();
        auto res = t.execute_batch(b);
        r.execute += seconds_since(t0);
        rh = fnv1a64(res.data(), res.size(), rh);
      }
      r.result_hash = rh;
      const auto dump = t.dump();
      r.tree_hash = fnv1a64(dump.data(), dump.size());
      return r;
    } catch (const std::bad_alloc&) {
      throw std::runtime_error(std::string("resource exhaustion during phase ") +
                               phase);
    }
  });
}

struct phase_samples {
  std::vector<double> prefill, prepare, execute;
};

}  // namespace

report run(const run_spec& spec) {
  if (spec.repeats < 1)
    throw std::invalid_argument("run: repeats must be >= 1");
  if (spec.threads < 0)
    throw std::invalid_argument("run: threads must be >= 1");

  const int tmax = spec.threads > 0 ? spec.threads : par::max_threads();
  const workload w = make_workload(spec);

  report rep;
  rep.prefill_keys = w.prefill_ops.size();

  auto collect = [&](int threads) {
    phase_samples s;
    once_result last;
    for (int i = 0; i < spec.repeats; ++i) {
      last = run_once(spec, w, threads);
      s.prefill.push_back(last.prefill);
      s.prepare.push_back(last.prepare);
      s.execute.push_back(last.execute);
    }
    return std::pair{s, last};
  };

  auto [base, base_last] = collect(1);
  phase_samples cur = base;
  once_result cur_last = base_last;
  if (tmax != 1) std::tie(cur, cur_last) = collect(tmax);

  rep.result_hash = cur_last.result_hash;
  rep.tree_hash = cur_last.tree_hash;

  auto emit = [&](const char* phase, const std::vector<double>& b,
                  const std::vector<double>& c) {
    auto [m1, sd1] = mean_std(b);
    rep.rows.push_back({"ist", phase, 1, m1, sd1, 1.0});
    if (tmax != 1) {
      auto [mt, sdt] = mean_std(c);
      rep.rows.push_back({"ist", phase, tmax, mt, sdt,
                          mt > 0.0 ? m1 / mt : 1.0});
    }
  };
  emit("prefill", base.prefill, cur.prefill);
  emit("prepare", base.prepare, cur.prepare);
  emit("execute", base.execute, cur.execute);

  // Sequential sorted-set baseline over the same raw operations.
  std::vector<double> set_prefill, set_execute;
  for (int i = 0; i < spec.repeats; ++i) {
    std::set<std::int64_t> s;
    auto t0 = steady::now();
    for (const auto& op : w.prefill_ops) s.insert(op.key);
    set_prefill.push_back(seconds_since(t0));
    t0 = steady::now();
    for (const auto& ops : w.batch_ops)
      for (const auto& op : ops) s.insert(op.key);
    set_execute.push_back(seconds_since(t0));
  }
  auto [pm, psd] = mean_std(set_prefill);
  rep.rows.push_back({"stdset", "prefill", 1, pm, psd, 1.0});
  auto [em, esd] = mean_std(set_execute);
  rep.rows.push_back({"stdset", "execute", 1, em, esd, 1.0});
  return rep;
}

namespace {

const char* dist_name(dist_kind k) {
  switch (k) {
    case dist_kind::uniform_subset:
      return "uniform-subset";
    case dist_kind::uniform:
      return "uniform";
    case dist_kind::clustered:
      return "clustered";
  }
  return "?";
}

}  // namespace

void write_csv(std::ostream& os, const run_spec& spec, const report& r) {
  os << "impl,n,batch_size,threads,alpha,seed,phase,mean_s,stddev_s,speedup\n";
  os << std::setprecision(9);
  for (const auto& row : r.rows) {
    os << row.impl << ',' << spec.n << ',' << spec.batch_size << ','
       << row.threads << ',' << spec.alpha << ',' << spec.seed << ','
       << row.phase << ',' << row.mean_s << ',' << row.stddev_s << ','
       << row.speedup << '\n';
  }
}

void write_table(std::ostream& os, const run_spec& spec, const report& r) {
  os << "batched IST benchmark: n=" << spec.n
     << " prefill_keys=" << r.prefill_keys
     << " batch_size=" << spec.batch_size << " batches=" << spec.batches
     << " dist=" << dist_name(spec.dist) << " range=[1," << spec.key_range()
     << "]\n";
  os << "  alpha=" << spec.alpha << " seed=" << spec.seed
     << " repeats=" << spec.repeats << "\n";
  os << std::hex << "  result_hash=0x" << r.result_hash << " tree_hash=0x"
     << r.tree_hash << std::dec << "\n\n";
  os << std::left << std::setw(8) << "impl" << std::setw(9) << "phase"
     << std::right << std::setw(8) << "threads" << std::setw(12) << "mean_s"
     << std::setw(12) << "stddev_s" << std::setw(10) << "speedup" << "\n";
  os << std::setprecision(6) << std::fixed;
  for (const auto& row : r.rows) {
    os << std::left << std::setw(8) << row.impl << std::setw(9) << row.phase
       << std::right << std::setw(8) << row.threads << std::setw(12)
       << row.mean_s << std::setw(12) << row.stddev_s << std::setw(10)
       << std::setprecision(2) << row.speedup << std::setprecision(6) << "\n";
  }
  os.unsetf(std::ios::fixed);
}

}  // namespace ist::bench
