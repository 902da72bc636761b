/*
 * pipeline.hpp
 *
 * End-to-end stages over a problem file: certification (certificates,
 * dwell times, gain graph, scalings), abstraction of every subsystem,
 * composition, safety synthesis, closed-loop simulation with the
 * runtime monitor, and the compositional-vs-monolithic scaling
 * benchmark. Stage failures carry distinct exception types so callers
 * can map them to exit codes.
 */

#ifndef IMPSYM_PIPELINE_HPP_
#define IMPSYM_PIPELINE_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "impsym/abstraction.hpp"
#include "impsym/certificates.hpp"
#include "impsym/composition.hpp"
#include "impsym/gains.hpp"
#include "impsym/model_io.hpp"
#include "impsym/runtime.hpp"
#include "impsym/synthesis.hpp"

namespace impsym::pipeline {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DwellError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SmallGainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyWinningSetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Throws ValidationError with every finding when the network is
 * ill-formed. */
void validate_or_throw(const model::NetworkModel& network);

struct CertifiedNetwork {
  std::vector<certificates::CertificateParams> certs;
  std::vector<certificates::DwellReport> dwell;
  std::vector<certificates::AsfCase> cases;
  std::vector<certificates::LocalAsfParams> locals;
  gains::GainMatrix gamma;
  gains::SmallGainReport small_gain;
  gains::ScalingVector psi;
  certificates::ComposedAsfParams composed;
  certificates::PrecisionBound precision;

  runtime::CertificateBundle bundle() const {
    return {certs, cases, locals, psi, composed};
  }
};

/* Certificates for every subsystem, the dwell-time and small-gain
 * checks, the scaling vector and the composed parameters. Throws
 * ValidationError / DwellError / SmallGainError. */
CertifiedNetwork certify(const model_io::ProblemConfig& cfg);

/* One symbolic model per subsystem. */
std::vector<abstraction::SymbolicModel> build_components(
    const model_io::ProblemConfig& cfg, bool parallel = true);

struct SynthesisResult {
  std::vector<abstraction::SymbolicModel> components;  // owns the models
  composition::ComposedModel composed;                 // views into them
  synthesis::SafeSet safe;
  synthesis::SafetyController controller;

  std::vector<const abstraction::SymbolicModel*> component_ptrs() const {
    std::vector<const abstraction::SymbolicModel*> p;
    for (const auto& c : components) p.push_back(&c);
    return p;
  }
};

/* Abstraction, composition and the safety fixed point. Throws
 * EmptyWinningSetError when no state is controllable. */
SynthesisResult synthesize(const model_io::ProblemConfig& cfg,
                           const CertifiedNetwork& cert);

/* Closed-loop run under the synthesized controller (lexicographic
 * selection for seed < 0, uniformly random admissible inputs
 * otherwise), then the monitor audit of the same trajectory. */
struct RunResult {
  runtime::Trajectory trajectory;
  runtime::MonitorReport monitor;
};

RunResult simulate_and_monitor(const model_io::ProblemConfig& cfg,
                               const CertifiedNetwork& cert,
                               const SynthesisResult& syn,
                               const std::vector<Vec>& x0, double horizon,
                               long seed = -1);

/* A ring of N subsystems cycling through the base network's parameter
 * triples; subsystem i feeds i+1 mod N. Requires a base whose
 * subsystems form one directed ring. */
model_io::ProblemConfig replicate_ring(const model_io::ProblemConfig& base,
                                       int n);

struct BenchmarkRecord {
  int n = 0;  // ring size
  double compositional_seconds = 0.0;
  double monolithic_seconds = 0.0;
  std::uint64_t compositional_states = 0;   // summed over components
  std::uint64_t monolithic_states = 0;
  std::uint64_t compositional_transitions = 0;
  std::uint64_t monolithic_transitions = 0;
  bool monolithic_capped = false;
};

/* Builds the per-subsystem models and the monolithic model for each
 * ring size, best of `repeats` timings. */
std::vector<BenchmarkRecord> run_benchmark(const model_io::ProblemConfig& base,
                                           const std::vector<int>& sizes,
                                           int repeats = 3);

std::string benchmark_table(const std::vector<BenchmarkRecord>& records);

}  // namespace impsym::pipeline

#endif  // IMPSYM_PIPELINE_HPP_
