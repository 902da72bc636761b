/* impsym: symbolic controller synthesis for networks of impulsive
 * systems. See README.md for the subcommand walkthrough. */

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "impsym/pipeline.hpp"
#include "impsym/serialize.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace impsym;

constexpr int kExitError = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSmallGain = 3;
constexpr int kExitDwell = 4;
constexpr int kExitEmptyWinning = 5;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

/* default initial state: the box centre, snapped to the lattice */
std::vector<Vec> default_x0(const model_io::ProblemConfig& cfg) {
  if (!cfg.simulation.x0.empty()) return cfg.simulation.x0;
  std::vector<Vec> x0;
  for (const auto& sub : cfg.network.subsystems) {
    Vec mid(sub.state_box.dim());
    for (std::size_t a = 0; a < mid.size(); ++a)
      mid[a] = 0.5 * (sub.state_box.lo[a] + sub.state_box.hi[a]);
    abstraction::Quantizer q =
        abstraction::make_quantizer(sub.state_box, cfg.abstraction.eta_x);
    x0.push_back(abstraction::quantize_point(mid, q));
  }
  return x0;
}

int cmd_validate(const model_io::ProblemConfig& cfg) {
  pipeline::validate_or_throw(cfg.network);
  std::cout << "validation ok: " << cfg.network.size() << " subsystems, "
            << cfg.network.edges.size() << " edges\n";
  return 0;
}

int cmd_check_dwell(const model_io::ProblemConfig& cfg) {
  pipeline::validate_or_throw(cfg.network);
  std::ostringstream bad;
  for (const auto& sub : cfg.network.subsystems) {
    auto cert = certificates::derive_affine_certificate(sub);
    auto rep = certificates::check_dwell_time(cert, sub.timing);
    std::cout << "subsystem " << sub.id << ": margins " << rep.margin_at_zmin
              << " (z_min) / " << rep.margin_at_zmax << " (z_max) -> "
              << (rep.holds ? "ok" : "FAIL")
              << (rep.trivially_satisfied ? " (no jump expansion)" : "") << '\n';
    if (!rep.holds) bad << ' ' << sub.id;
  }
  if (bad.tellp() > 0)
    throw pipeline::DwellError("dwell-time condition fails for subsystems:" +
                               bad.str());
  return 0;
}

int cmd_check_gains(const model_io::ProblemConfig& cfg) {
  auto cert = pipeline::certify(cfg);
  const auto& g = cert.gamma;
  std::cout << "gain matrix (row i reads from column j):\n";
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) std::printf(" %8.5f", g.at(i, j));
    std::printf("\n");
  }
  std::cout << "worst cycle product " << cert.small_gain.worst_product
            << " on cycle (";
  for (std::size_t k = 0; k < cert.small_gain.worst_cycle.size(); ++k)
    std::cout << (k ? " " : "") << cert.small_gain.worst_cycle[k];
  std::cout << ")\n";
  if (!cert.small_gain.worst_loop.empty()) {
    std::cout << "worst interconnection cycle product "
              << cert.small_gain.worst_loop_product << " on cycle (";
    for (std::size_t k = 0; k < cert.small_gain.worst_loop.size(); ++k)
      std::cout << (k ? " " : "") << cert.small_gain.worst_loop[k];
    std::cout << ")\n";
  }
  std::cout << "scalings:";
  for (double p : cert.psi.psi) std::cout << ' ' << p;
  std::cout << "\ncomposed parameters: alpha " << cert.composed.alpha_tilde
            << ", sigma " << cert.composed.sigma_tilde << ", rho_u "
            << cert.composed.rho_u_tilde << ", eps " << cert.composed.eps_tilde
            << "\nprecision bound " << cert.precision.eps_hat
            << " at input bound " << cert.precision.input_bound << '\n';
  return 0;
}

int cmd_abstract(const model_io::ProblemConfig& cfg, const std::string& mode,
                 const std::string& out_path) {
  pipeline::validate_or_throw(cfg.network);
  if (mode == "monolithic") {
    auto m = abstraction::build_monolithic(cfg.network, cfg.abstraction);
    if (m.capped) {
      std::cout << "monolithic model capped at "
                << cfg.abstraction.max_transitions << " transitions\n";
      return kExitError;
    }
    std::cout << "monolithic model: " << m.num_states() << " states, "
              << m.num_transitions() << " transitions, "
              << m.blocking_states.size() << " blocking, built in "
              << m.build_seconds << " s\n";
    if (!out_path.empty()) serialize::save_model(m, out_path);
    return 0;
  }
  auto models = pipeline::build_components(cfg);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    if (m.capped) {
      std::cout << "subsystem " << cfg.network.subsystems[i].id
                << " capped at " << cfg.abstraction.max_transitions
                << " transitions\n";
      return kExitError;
    }
    std::cout << "subsystem " << cfg.network.subsystems[i].id << ": "
              << m.num_states() << " states, " << m.num_transitions()
              << " transitions, " << m.blocking_states.size()
              << " blocking, built in " << m.build_seconds << " s\n";
    if (!out_path.empty())
      serialize::save_model(
          m, out_path + std::to_string(cfg.network.subsystems[i].id) + ".isym");
  }
  return 0;
}

int cmd_compose(const model_io::ProblemConfig& cfg) {
  pipeline::validate_or_throw(cfg.network);
  auto models = pipeline::build_components(cfg);
  std::vector<const abstraction::SymbolicModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  auto composed = composition::compose(ptrs, cfg.network, cfg.composition);
  std::cout << "composed model: " << composed.num_states() << " states, "
            << composed.num_inputs() << " input tuples\n";
  try {
    std::cout << "reachable from the counter-zero states: "
              << composed.count_reachable() << '\n';
  } catch (const std::runtime_error&) {
    std::cout << "reachable-state count skipped (model too large)\n";
  }
  return 0;
}

int cmd_synthesize(const model_io::ProblemConfig& cfg,
                   const std::string& out_path) {
  auto cert = pipeline::certify(cfg);
  auto syn = pipeline::synthesize(cfg, cert);
  std::cout << "winning set: " << syn.controller.winning_count << " of "
            << syn.composed.num_states() << " states after "
            << syn.controller.iterations << " sweeps (removed:";
  for (std::uint64_t r : syn.controller.removed_per_iteration)
    std::cout << ' ' << r;
  std::cout << ")\n";
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    serialize::write_controller_csv(syn.composed, syn.controller, out);
    std::cout << "controller written to " << out_path << '\n';
  }
  return 0;
}

int cmd_simulate(const model_io::ProblemConfig& cfg, double horizon, long seed,
                 const std::string& out_path) {
  auto cert = pipeline::certify(cfg);
  auto syn = pipeline::synthesize(cfg, cert);
  if (horizon <= 0.0) horizon = cfg.simulation.horizon;
  if (horizon <= 0.0)
    throw std::runtime_error("no horizon given (flag or problem file)");
  auto run =
      pipeline::simulate_and_monitor(cfg, cert, syn, default_x0(cfg), horizon, seed);
  std::cout << "simulated " << run.trajectory.steps.size() << " steps over "
            << horizon << " s"
            << (run.trajectory.halted_unsafe ? " (halted: " + run.trajectory.note + ")"
                                             : "")
            << '\n';
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    serialize::write_trajectory_csv(run.trajectory, out);
    auto gp = open_out(out_path + ".gp");
    serialize::write_trajectory_gnuplot(run.trajectory, out_path, gp);
    std::cout << "trajectory written to " << out_path << " (+ .gp)\n";
  }
  return run.trajectory.halted_unsafe ? kExitError : 0;
}

int cmd_monitor(const model_io::ProblemConfig& cfg, double horizon, long seed,
                const std::string& out_path) {
  auto cert = pipeline::certify(cfg);
  auto syn = pipeline::synthesize(cfg, cert);
  if (horizon <= 0.0) horizon = cfg.simulation.horizon;
  if (horizon <= 0.0)
    throw std::runtime_error("no horizon given (flag or problem file)");
  auto run =
      pipeline::simulate_and_monitor(cfg, cert, syn, default_x0(cfg), horizon, seed);
  std::cout << "monitored " << run.monitor.rows.size() << " rows: "
            << run.monitor.violations << " violations, max gap "
            << run.monitor.max_violation << " -> "
            << (run.monitor.pass ? "pass" : "FAIL") << '\n';
  if (!run.monitor.note.empty()) std::cout << run.monitor.note << '\n';
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    serialize::write_monitor_csv(run.monitor, out);
    std::cout << "monitor log written to " << out_path << '\n';
  }
  return run.monitor.pass ? 0 : kExitError;
}

int cmd_bench(const model_io::ProblemConfig& base, std::vector<int> sizes,
              int repeats, double eta_x, int dwell, const std::string& out_path) {
  model_io::ProblemConfig cfg = base;
  if (eta_x > 0.0) {
    cfg.abstraction.eta_x = eta_x;
    cfg.abstraction.eta_w = eta_x;
  }
  if (dwell > 0)
    for (auto& sub : cfg.network.subsystems) {
      sub.timing.z_min = std::min(sub.timing.z_min, dwell);
      sub.timing.z_max = dwell;
      sub.timing.explicit_jumps.clear();
    }
  auto records = pipeline::run_benchmark(cfg, sizes, repeats);
  std::string table = pipeline::benchmark_table(records);
  std::cout << table;
  if (!out_path.empty()) open_out(out_path) << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional symbolic controller synthesis for "
               "interconnected impulsive systems"};
  app.require_subcommand(1);

  std::string config_path, out_path, mode = "compositional";
  int threads = 0, repeats = 3, dwell = 1;
  long seed = -1;
  double horizon = 0.0, bench_eta = 2.5;
  std::vector<int> sizes{2, 3, 4, 5};

  app.add_option("--config", config_path, "problem file (JSON)")->required();
  app.add_option("--out", out_path, "output file (meaning depends on the subcommand)");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");
  app.add_option("--seed", seed,
                 "input selection seed; negative picks lexicographically");

  app.add_subcommand("validate", "check the problem file for structural errors");
  app.add_subcommand("check-dwell", "evaluate the dwell-time condition");
  app.add_subcommand("check-gains",
                     "gain matrix, small-gain cycles and scalings");
  auto* sc_abs =
      app.add_subcommand("abstract", "build the symbolic model(s)");
  sc_abs->add_option("--mode", mode, "compositional or monolithic")
      ->check(CLI::IsMember({"compositional", "monolithic"}));
  app.add_subcommand("compose", "interconnect the subsystem models");
  app.add_subcommand("synthesize", "solve the safety game");
  auto* sc_sim = app.add_subcommand("simulate", "closed-loop run");
  sc_sim->add_option("--horizon", horizon, "simulation horizon [s]");
  auto* sc_mon =
      app.add_subcommand("monitor", "closed-loop run plus the relation audit");
  sc_mon->add_option("--horizon", horizon, "simulation horizon [s]");
  auto* sc_bench = app.add_subcommand(
      "bench", "compositional vs monolithic scaling over ring sizes");
  sc_bench->add_option("--sizes", sizes, "ring sizes");
  sc_bench->add_option("--repeats", repeats, "timing repetitions");
  sc_bench->add_option("--eta-x", bench_eta,
                       "state pitch for the benchmark (0 keeps the file's)");
  sc_bench->add_option("--dwell", dwell,
                       "z_max override for the benchmark (0 keeps the file's)");

  /* global options may appear after the subcommand */
  for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
    sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    model_io::ProblemConfig cfg = model_io::load_problem(config_path);
    if (app.got_subcommand("validate")) return cmd_validate(cfg);
    if (app.got_subcommand("check-dwell")) return cmd_check_dwell(cfg);
    if (app.got_subcommand("check-gains")) return cmd_check_gains(cfg);
    if (app.got_subcommand("abstract")) return cmd_abstract(cfg, mode, out_path);
    if (app.got_subcommand("compose")) return cmd_compose(cfg);
    if (app.got_subcommand("synthesize")) return cmd_synthesize(cfg, out_path);
    if (app.got_subcommand("simulate"))
      return cmd_simulate(cfg, horizon, seed, out_path);
    if (app.got_subcommand("monitor"))
      return cmd_monitor(cfg, horizon, seed, out_path);
    if (app.got_subcommand("bench"))
      return cmd_bench(cfg, sizes, repeats, bench_eta, dwell, out_path);
  } catch (const pipeline::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pipeline::SmallGainError& e) {
    std::cerr << "small-gain error: " << e.what() << '\n';
    return kExitSmallGain;
  } catch (const pipeline::DwellError& e) {
    std::cerr << "dwell-time error: " << e.what() << '\n';
    return kExitDwell;
  } catch (const pipeline::EmptyWinningSetError& e) {
    std::cerr << "synthesis error: " << e.what() << '\n';
    return kExitEmptyWinning;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
