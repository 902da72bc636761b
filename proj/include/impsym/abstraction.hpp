/*
 * abstraction.hpp
 *
 * Finite symbolic models of impulsive systems: grid quantization of
 * states and inputs, counter-augmented states, and flow/jump successor
 * computation with the eta-ball nondeterminism rule. Builders exist for
 * a single subsystem and for the monolithic interconnected system, each
 * in an OpenMP-parallel and a serial reference variant.
 */

#ifndef IMPSYM_ABSTRACTION_HPP_
#define IMPSYM_ABSTRACTION_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "impsym/model.hpp"

namespace impsym::abstraction {

using model::ImpulsiveSubsystem;
using model::NetworkModel;

/* Lattice {k*eta | k_lo <= k <= k_hi} on one axis. */
struct AxisGrid {
  double eta = 0.0;
  long k_lo = 0;
  long k_hi = -1;

  std::size_t count() const { return static_cast<std::size_t>(k_hi - k_lo + 1); }
  double value(long k) const { return static_cast<double>(k) * eta; }

  bool operator==(const AxisGrid&) const = default;
};

/* Lattice axes covering box intersect {k*eta}. eta = 0 keeps the axis
 * exact (identity quantizer); that is rejected by the abstraction
 * builders but allowed for the quantizer type itself. */
struct Quantizer {
  Box box;
  Vec eta;  // per-axis pitch
  std::vector<AxisGrid> axes;
};

/* Throws if some positive eta exceeds the minimal box side or the
 * lattice misses the box. */
Quantizer make_quantizer(const Box& box, const Vec& eta);
Quantizer make_quantizer(const Box& box, double eta);

/* All lattice points of box, lexicographically sorted. Requires
 * positive pitch on every axis. */
std::vector<Vec> quantize_set(const Box& box, double eta);
std::vector<Vec> quantize_set(const Box& box, const Vec& eta);

/* Nearest lattice point, ties broken toward -inf per axis; throws when
 * x lies outside the box. */
Vec quantize_point(const Vec& x, const Quantizer& q);

struct AbstractionConfig {
  double eta_x = 0.0;
  double eta_w = 0.0;
  double eta_u = 0.0;  // only used when the external input set is a box
  int integrator_steps = 32;
  /* builders abort and set `capped` when the transition count passes this */
  std::uint64_t max_transitions = UINT64_C(200'000'000);
};

struct SymbolicState {
  std::vector<long> grid_k;      // lattice multipliers per state axis
  std::vector<int> counters;     // one per subsystem block
};

enum class StepKind : std::uint8_t { Flow = 0, Jump = 1 };

/* A finite transition system over lattice states with dwell counters.
 * Subsystem models carry one counter; monolithic models carry one per
 * subsystem block. State indices are mixed-radix over
 * [axis ks..., counters...], most significant first. */
struct SymbolicModel {
  double tau = 0.0;
  std::vector<AxisGrid> state_axes;            // concatenated over blocks
  std::vector<std::size_t> block_dims;         // state dims per block
  std::vector<model::JumpTiming> timings;      // one per block
  std::vector<model::AffineMap> external_outputs;  // h_ii per block

  std::vector<AxisGrid> internal_axes;  // empty for monolithic
  std::vector<Vec> internal_inputs;     // lattice of W ({[]} if dim 0)
  std::vector<Vec> external_inputs;     // flat tuples over U

  /* transitions for triple t = (state*NW + w)*NU + u */
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> succ;
  std::vector<StepKind> kind;

  std::vector<std::uint64_t> blocking_states;
  double build_seconds = 0.0;
  bool capped = false;

  std::uint64_t num_grid_points() const;
  std::uint64_t num_counter_combos() const;
  std::uint64_t num_states() const { return num_grid_points() * num_counter_combos(); }
  std::size_t num_internal() const { return internal_inputs.size(); }
  std::size_t num_external() const { return external_inputs.size(); }
  std::uint64_t num_transitions() const { return succ.size(); }

  SymbolicState decode_state(std::uint64_t s) const;
  std::uint64_t encode_state(const SymbolicState& st) const;
  Vec state_point(std::uint64_t s) const;  // lattice values, counters dropped
  Vec output(std::uint64_t s) const;       // concatenated external blocks

  std::span<const std::uint32_t> successors(std::uint64_t s, std::size_t w,
                                            std::size_t u) const;
  std::span<const StepKind> successor_kinds(std::uint64_t s, std::size_t w,
                                            std::size_t u) const;
};

/* Nominal flow endpoint from x under constant (w, u): closed form for
 * scalar dynamics, fixed-step RK4 otherwise. */
Vec flow_endpoint(const model::AffineDynamics& dyn, const Vec& x, const Vec& w,
                  const Vec& u, double tau, int integrator_steps);

/* Lattice points within eta_x (infinity norm) of the flow endpoint,
 * intersected with the state box. May be empty when the endpoint leaves
 * the box. */
std::vector<Vec> flow_successors(const Vec& x_hat, const Vec& w_hat,
                                 const Vec& u_hat, const ImpulsiveSubsystem& sub,
                                 const AbstractionConfig& config);

/* Same ball rule around the jump map image g(x, w, u). */
std::vector<Vec> jump_successors(const Vec& x_hat, const Vec& w_hat,
                                 const Vec& u_hat, const ImpulsiveSubsystem& sub,
                                 const AbstractionConfig& config);

SymbolicModel build_symbolic_subsystem(const ImpulsiveSubsystem& sub,
                                       const AbstractionConfig& config);
SymbolicModel build_symbolic_subsystem_serial(const ImpulsiveSubsystem& sub,
                                              const AbstractionConfig& config);

/* Product-state model of the interconnection: coupled flow, per-subset
 * jump steps, one counter per subsystem. */
SymbolicModel build_monolithic(const NetworkModel& network,
                               const AbstractionConfig& config);
SymbolicModel build_monolithic_serial(const NetworkModel& network,
                                      const AbstractionConfig& config);

}  // namespace impsym::abstraction

#endif  // IMPSYM_ABSTRACTION_HPP_
