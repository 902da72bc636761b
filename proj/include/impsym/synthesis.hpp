/*
 * synthesis.hpp
 *
 * Safety controller synthesis: the greatest fixed point of the safe
 * controllable predecessor on a composed or monolithic symbolic model,
 * and refinement of the resulting set-valued controller into a policy
 * that acts on concrete states.
 */

#ifndef IMPSYM_SYNTHESIS_HPP_
#define IMPSYM_SYNTHESIS_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "impsym/abstraction.hpp"
#include "impsym/composition.hpp"
#include "impsym/model.hpp"

namespace impsym::synthesis {

/* Per-subsystem safe boxes; dwell counters are unconstrained. */
struct SafeSet {
  std::vector<Box> boxes;
};

/* Each box pulled in by `margin` on every side. Throws when a box
 * collapses; used to enforce an output-precision margin on request. */
SafeSet shrink(const SafeSet& safe, double margin);

struct SafetyController {
  std::vector<char> winning;              // per state
  std::vector<std::uint64_t> policy;      // admissible-input bitmask per state
  std::uint64_t winning_count = 0;
  int iterations = 0;                     // sweeps until stable
  std::vector<std::uint64_t> removed_per_iteration;
};

/* Greatest fixed point of
 *   W -> { x in W cap Safe | exists u: succ(x,u) nonempty and inside W }
 * on the interconnected model, internal inputs resolved through the
 * admissibility rule. The first sweep factorizes per component; later
 * sweeps enumerate composed successor products. Throws when the model
 * has more than 64 input tuples (policy masks are 64-bit). */
SafetyController solve_safety(const composition::ComposedModel& model,
                              const SafeSet& safe);

/* Same fixed point on an explicit monolithic model. */
SafetyController solve_safety(const abstraction::SymbolicModel& model,
                              const SafeSet& safe);

struct PolicyQuery {
  std::uint64_t state = 0;                // composed state index
  std::uint64_t input = 0;                // composed input index
  std::vector<std::size_t> input_idx;     // per-component input index
  std::vector<Vec> u;                     // per-component input values
};

/* Concrete-state interface of a synthesized controller: quantize each
 * subsystem state, look the composed state up and pick an admissible
 * input. Queries return nothing when the state leaves the winning set
 * (or its box). */
struct ConcretePolicy {
  const composition::ComposedModel* model = nullptr;
  const SafetyController* controller = nullptr;
  std::vector<abstraction::Quantizer> quantizers;  // per subsystem

  std::optional<std::uint64_t> locate(const std::vector<Vec>& xs,
                                      const std::vector<int>& counters) const;
  /* lexicographically smallest admissible input */
  std::optional<PolicyQuery> select_lex(const std::vector<Vec>& xs,
                                        const std::vector<int>& counters) const;
  /* uniform choice among the admissible inputs */
  std::optional<PolicyQuery> select_random(const std::vector<Vec>& xs,
                                           const std::vector<int>& counters,
                                           std::mt19937_64& rng) const;
};

ConcretePolicy refine_controller(const composition::ComposedModel& model,
                                 const SafetyController& controller,
                                 const model::NetworkModel& network,
                                 double eta_x);

}  // namespace impsym::synthesis

#endif  // IMPSYM_SYNTHESIS_HPP_
