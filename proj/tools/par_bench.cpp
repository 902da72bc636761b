/* par-bench: OpenMP builders against the serial reference. Builds the
 * per-subsystem and monolithic symbolic models both ways, reports best
 * timings, and insists the results are byte-identical. */

#include <chrono>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "impsym/abstraction.hpp"
#include "impsym/model_io.hpp"
#include "impsym/pipeline.hpp"
#include "impsym/serialize.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace impsym;
using clock_type = std::chrono::steady_clock;

template <typename F>
double best_of(int repeats, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    auto t0 = clock_type::now();
    f();
    best = std::min(
        best, std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP symbolic-model construction"};
  std::string config_path;
  int repeats = 3, threads = 0;
  bool skip_mono = false;
  app.add_option("--config", config_path, "problem file (JSON)")->required();
  app.add_option("--repeats", repeats, "timing repetitions");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");
  app.add_flag("--skip-monolithic", skip_mono, "subsystem builders only");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  std::cout << "OpenMP enabled, max threads " << omp_get_max_threads() << "\n";
#else
  std::cout << "built without OpenMP; both columns run serially\n";
#endif

  try {
    model_io::ProblemConfig cfg = model_io::load_problem(config_path);
    pipeline::validate_or_throw(cfg.network);

    bool all_equal = true;
    std::cout << "target            serial s   parallel s   transitions\n";
    for (const auto& sub : cfg.network.subsystems) {
      abstraction::SymbolicModel serial, parallel;
      double ts = best_of(repeats, [&] {
        serial = abstraction::build_symbolic_subsystem_serial(sub, cfg.abstraction);
      });
      double tp = best_of(repeats, [&] {
        parallel = abstraction::build_symbolic_subsystem(sub, cfg.abstraction);
      });
      bool equal = serialize::model_to_bytes(serial) ==
                   serialize::model_to_bytes(parallel);
      all_equal = all_equal && equal;
      std::printf("subsystem %-3d   %10.4f   %10.4f   %11llu%s\n", sub.id, ts,
                  tp, static_cast<unsigned long long>(serial.num_transitions()),
                  equal ? "" : "   MISMATCH");
    }
    if (!skip_mono) {
      abstraction::SymbolicModel serial, parallel;
      double ts = best_of(repeats, [&] {
        serial = abstraction::build_monolithic_serial(cfg.network, cfg.abstraction);
      });
      double tp = best_of(repeats, [&] {
        parallel = abstraction::build_monolithic(cfg.network, cfg.abstraction);
      });
      bool equal = serialize::model_to_bytes(serial) ==
                   serialize::model_to_bytes(parallel);
      all_equal = all_equal && equal;
      std::printf("monolithic      %10.4f   %10.4f   %11llu%s%s\n", ts, tp,
                  static_cast<unsigned long long>(serial.num_transitions()),
                  serial.capped ? " (capped)" : "", equal ? "" : "   MISMATCH");
    }
    if (!all_equal) {
      std::cerr << "serial and parallel builds disagree\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
