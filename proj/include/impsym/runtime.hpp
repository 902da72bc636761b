/*
 * runtime.hpp
 *
 * Closed-loop simulation of the interconnected impulsive network under a
 * synthesized (or arbitrary) input selector, and the runtime monitor
 * that replays a concrete trajectory through the abstract models and
 * checks the local and composed simulation-function inequalities step by
 * step.
 */

#ifndef IMPSYM_RUNTIME_HPP_
#define IMPSYM_RUNTIME_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "impsym/abstraction.hpp"
#include "impsym/certificates.hpp"
#include "impsym/gains.hpp"
#include "impsym/model.hpp"

namespace impsym::runtime {

using model::NetworkModel;

/* One sampling period (flow) or one jump instant (zero duration). For
 * jump steps, x_before holds the left limits and `jumped` marks which
 * subsystems fired. */
struct Step {
  double t = 0.0;  // step start time
  bool is_jump = false;
  std::vector<char> jumped;
  std::vector<Vec> x_before, x_after;  // per subsystem
  std::vector<int> c_before, c_after;  // dwell counters
  std::vector<Vec> u;                  // applied external inputs
  std::vector<Vec> w_before;           // internal inputs at the step start
};

struct Trajectory {
  std::vector<Vec> x0;
  std::vector<Step> steps;
  bool halted_unsafe = false;
  std::string note;
};

/* Returns the external input per subsystem, or nothing to signal that
 * the state left the controller's domain (the run halts). */
using InputSelector = std::function<std::optional<std::vector<Vec>>(
    const std::vector<Vec>& xs, const std::vector<int>& counters)>;

struct SimulationConfig {
  double horizon = 0.0;      // seconds
  int integrator_steps = 32;  // RK4 substeps per sampling period
  double time_tol = 1e-9;
};

/* Samples every tau seconds; jump instants come from each subsystem's
 * explicit schedule. At a jump instant the selector is queried on the
 * left limits, the due jump maps fire simultaneously, counters reset,
 * and a zero-duration step is recorded before the following flow
 * period. Throws when a schedule violates the counter bounds. */
Trajectory run_closed_loop(const NetworkModel& network,
                           const InputSelector& select,
                           const std::vector<Vec>& x0,
                           const SimulationConfig& config);

/* Everything the monitor needs about the certificates. */
struct CertificateBundle {
  std::vector<certificates::CertificateParams> certs;
  std::vector<certificates::AsfCase> cases;
  std::vector<certificates::LocalAsfParams> locals;
  gains::ScalingVector psi;
  certificates::ComposedAsfParams composed;
};

constexpr double kNoGap = std::numeric_limits<double>::quiet_NaN();

/* Signed slack of each inequality at one step: positive = violated.
 * Output-mismatch conditions are evaluated at the step start; decrease
 * conditions across the step (NaN where a subsystem did not move). */
struct MonitorRow {
  double t = 0.0;
  bool is_jump = false;
  std::vector<double> s_local;     // value-function levels at the step start
  std::vector<double> lsf1_gap;    // alpha_i |H_i(x)-H_i(xhat)| - S_i
  std::vector<double> lsmf2_gap;   // S_i' - max{sigma S_i, rho_w |w-what|, rho_u |u|, eps}
  double sf1_gap = 0.0;            // alpha~ |H(x)-H(xhat)| - S~
  double sf2_gap = 0.0;            // S~' - max{sigma~ S~, rho_u~ |u|, eps~}
};

struct MonitorReport {
  std::vector<MonitorRow> rows;
  double max_violation = 0.0;   // largest positive gap seen
  std::uint64_t violations = 0;  // gaps above tolerance
  bool pass = false;
  std::string note;
};

/* Replays the trajectory through the per-subsystem abstract models
 * (inputs quantized to the lattices, successors resolved toward the
 * concrete state, ties to the smallest index) and audits the
 * alternating-simulation inequalities, local and composed, at every
 * step. */
MonitorReport monitor_relation(
    const NetworkModel& network,
    const std::vector<const abstraction::SymbolicModel*>& components,
    const CertificateBundle& bundle, const Trajectory& traj,
    double tolerance = 1e-9);

}  // namespace impsym::runtime

#endif  // IMPSYM_RUNTIME_HPP_
