/*
 * composition.hpp
 *
 * Interconnection of per-subsystem symbolic models into one finite
 * transition system. A composed transition exists iff every component
 * has a transition under some internal input compatible, up to the
 * per-edge mismatch bound, with the neighbours' current outputs.
 * Successors are served lazily; a small model can also be materialized.
 */

#ifndef IMPSYM_COMPOSITION_HPP_
#define IMPSYM_COMPOSITION_HPP_

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "impsym/abstraction.hpp"
#include "impsym/model.hpp"

namespace impsym::composition {

using abstraction::SymbolicModel;
using model::NetworkModel;

struct CompositionConfig {
  /* (from, to) -> allowed mismatch between the internal input and the
   * source's abstract output. Edges without an entry default to the
   * target's internal-lattice pitch, the smallest bound that keeps
   * nearest-lattice rounding representable. */
  std::map<std::pair<int, int>, double> phi;
};

struct ComposedModel {
  const NetworkModel* network = nullptr;
  std::vector<const SymbolicModel*> components;
  /* per component, per internal-input block: source and mismatch bound */
  struct InternalBlock {
    int source = -1;                     // feeding subsystem
    const model::AffineMap* map = nullptr;  // its output block toward us
    std::size_t axis_offset = 0;         // first internal axis of the block
    std::size_t len = 0;
    double phi = 0.0;
  };
  std::vector<std::vector<InternalBlock>> internal_blocks;

  std::uint64_t num_states() const;
  std::uint64_t num_inputs() const;

  std::vector<std::uint64_t> decode_state(std::uint64_t s) const;
  std::uint64_t encode_state(const std::vector<std::uint64_t>& comp) const;
  std::vector<std::size_t> decode_input(std::uint64_t u) const;
  std::uint64_t encode_input(const std::vector<std::size_t>& comp) const;

  /* Internal-input lattice indices of component i compatible with the
   * neighbours' abstract outputs at the given component states. Empty
   * means composition-blocking at this state. */
  std::vector<std::size_t> admissible_internal_inputs(
      int i, const std::vector<std::uint64_t>& comp_states) const;

  /* Union over admissible internal inputs of component i's successor
   * sets, sorted, duplicates removed. */
  std::vector<std::uint32_t> component_successors(
      int i, const std::vector<std::uint64_t>& comp_states,
      std::size_t u_i) const;

  /* Lazy composed successor set (product of the component unions),
   * ascending. */
  std::vector<std::uint64_t> successors(std::uint64_t s, std::uint64_t u) const;

  /* Composed output: the external blocks only. */
  Vec output(std::uint64_t s) const;

  /* composed states with every counter zero */
  std::vector<std::uint64_t> initial_states() const;

  /* states reachable from the initial set (BFS); feasible for small
   * models only */
  std::uint64_t count_reachable() const;
};

/* Validates shared tau and matching topology, resolves the mismatch
 * bounds. The component models must outlive the composed view. */
ComposedModel compose(const std::vector<const SymbolicModel*>& models,
                      const NetworkModel& network,
                      const CompositionConfig& config = {});

/* Explicit transition table of the composed system; for oracle tests
 * and small instances. */
struct EagerComposedTable {
  std::vector<std::uint64_t> offsets;  // per (state, input)
  std::vector<std::uint64_t> succ;
};

EagerComposedTable materialize(const ComposedModel& m);

}  // namespace impsym::composition

#endif  // IMPSYM_COMPOSITION_HPP_
