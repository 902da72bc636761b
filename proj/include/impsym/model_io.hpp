/*
 * model_io.hpp
 *
 * JSON problem files: the network, quantization parameters, value
 * function settings, safe set and simulation defaults, all in one
 * document.
 */

#ifndef IMPSYM_MODEL_IO_HPP_
#define IMPSYM_MODEL_IO_HPP_

#include <string>
#include <vector>

#include "impsym/abstraction.hpp"
#include "impsym/composition.hpp"
#include "impsym/model.hpp"
#include "impsym/synthesis.hpp"

namespace impsym::model_io {

struct AsfConfig {
  double epsilon = 0.5;      // counter-discount parameter, in (0,1)
  double delta = 0.0;        // > z_max; 0 picks z_max + 1
  double psi_lemma = 0.99;   // additive-to-max conversion constant
  double kappa_slack = 0.01;  // strictness slack of the scaling vector
};

struct SimulationDefaults {
  double horizon = 0.0;
  std::vector<Vec> x0;  // empty: caller picks
};

struct ProblemConfig {
  model::NetworkModel network;
  abstraction::AbstractionConfig abstraction;
  AsfConfig asf;
  synthesis::SafeSet safe;  // defaults to the state boxes
  /* pull the safe boxes in by the guaranteed output-mismatch bound
   * before synthesis (off by default; see README) */
  bool shrink_by_precision = false;
  composition::CompositionConfig composition;
  SimulationDefaults simulation;
};

ProblemConfig load_problem(const std::string& path);
ProblemConfig parse_problem(const std::string& text);

/* Serializes back to the same document layout. */
std::string problem_to_json(const ProblemConfig& cfg);

}  // namespace impsym::model_io

#endif  // IMPSYM_MODEL_IO_HPP_
