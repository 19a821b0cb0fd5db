#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ist/bench.hpp"
#include "ist/selftest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"parallel batched interpolation search tree driver"};
  app.require_subcommand(1);

  ist::bench::run_spec spec;
  std::string dist_name = "uniform-subset";
  std::string format = "table";
  std::string out_path;

  auto* bench = app.add_subcommand("bench", "run the batched-insert benchmark");
  bench->add_option("--n", spec.n, "prefill size target");
  bench->add_option("--batch-size", spec.batch_size, "operations per batch");
  bench->add_option("--batches", spec.batches, "number of batches");
  bench->add_option("--dist", dist_name, "key distribution")
      ->check(CLI::IsMember({"uniform-subset", "uniform", "clustered"}));
  bench->add_option("--range-max", spec.range_max, "largest key (default 2*n)");
  bench->add_option("--alpha", spec.alpha, "ID table exponent in [0.5, 1)");
  auto* threads_opt = bench->add_option(
      "--threads", spec.threads,
      "worker threads (default: all cores; IST_THREADS respected when the "
      "flag is absent)");
  bench->add_option("--seed", spec.seed, "rng seed");
  bench->add_option("--repeats", spec.repeats, "timing repetitions");
  bench->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"table", "csv"}));
  bench->add_option("--out", out_path, "write the report to this file");

  std::string scale_name = "small";
  bool inject = false;
  auto* selftest =
      app.add_subcommand("selftest", "run the correctness property suites");
  selftest->add_option("--scale", scale_name, "suite size")
      ->check(CLI::IsMember({"small", "full"}));
  selftest->add_flag("--inject-corruption", inject,
                     "damage a tree through the debug hook; the sweep must "
                     "then fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) {
      if (threads_opt->count() == 0) {
        if (const char* env = std::getenv("IST_THREADS"))
          spec.threads = std::atoi(env);
      }
      spec.dist = ist::parse_dist_kind(dist_name);
      auto rep = ist::bench::run(spec);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open " + out_path);
        os = &file;
      }
      if (format == "csv")
        ist::bench::write_csv(*os, spec, rep);
      else
        ist::bench::write_table(*os, spec, rep);
      return 0;
    }

    const auto sc = scale_name == "full" ? ist::selftest::scale::full
                                         : ist::selftest::scale::small;
    auto results = ist::selftest::run_suite(sc, inject);
    const ist::selftest::result* first_fail = nullptr;
    for (const auto& r : results) {
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
      if (!r.pass && !r.detail.empty()) std::cout << ": " << r.detail;
      std::cout << "\n";
      if (!r.pass && !first_fail) first_fail = &r;
    }
    if (first_fail) {
      std::cerr << "selftest failed: " << first_fail->name << "\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
