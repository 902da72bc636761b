/*
 * serialize.hpp
 *
 * On-disk formats: a compact binary container for symbolic models,
 * CSV exports for transition tables, controllers, trajectories and
 * monitor logs, and a gnuplot script for trajectory plots.
 *
 * The binary encoding is deterministic: two equal models serialize to
 * identical bytes (build timing is not stored).
 */

#ifndef IMPSYM_SERIALIZE_HPP_
#define IMPSYM_SERIALIZE_HPP_

#include <iosfwd>
#include <string>

#include "impsym/abstraction.hpp"
#include "impsym/composition.hpp"
#include "impsym/runtime.hpp"
#include "impsym/synthesis.hpp"

namespace impsym::serialize {

std::string model_to_bytes(const abstraction::SymbolicModel& m);
abstraction::SymbolicModel model_from_bytes(const std::string& bytes);

void save_model(const abstraction::SymbolicModel& m, const std::string& path);
abstraction::SymbolicModel load_model(const std::string& path);

/* state,w,u,kind,target per line */
void write_transitions_csv(const abstraction::SymbolicModel& m,
                           std::ostream& out);

/* winning states with their admissible composed input indices */
void write_controller_csv(const composition::ComposedModel& model,
                          const synthesis::SafetyController& ctrl,
                          std::ostream& out);

void write_trajectory_csv(const runtime::Trajectory& traj, std::ostream& out);
void write_monitor_csv(const runtime::MonitorReport& rep, std::ostream& out);

/* Plot script over the trajectory CSV written next to it. */
void write_trajectory_gnuplot(const runtime::Trajectory& traj,
                              const std::string& csv_name, std::ostream& out);

}  // namespace impsym::serialize

#endif  // IMPSYM_SERIALIZE_HPP_
