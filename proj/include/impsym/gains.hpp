/*
 * gains.hpp
 *
 * The interconnection gain graph, the scaled small-gain cycle condition
 * and the scaling vector that turns local alternating-simulation
 * functions into a composed one.
 */

#ifndef IMPSYM_GAINS_HPP_
#define IMPSYM_GAINS_HPP_

#include <vector>

#include "impsym/certificates.hpp"
#include "impsym/model.hpp"

namespace impsym::gains {

using certificates::LocalAsfParams;
using model::Edge;

struct GainMatrix {
  int n = 0;
  std::vector<double> gamma;  // n*n, row-major; zero exactly on non-edges

  double at(int i, int j) const { return gamma[i * n + j]; }
  double& at(int i, int j) { return gamma[i * n + j]; }
};

/* Which internal-input gain populates the off-diagonal entries. The
 * additive form matches the case-study gain table; the max form uses
 * the converted (larger) coefficients. */
enum class GainForm { Additive, MaxForm };

/* gamma[i][i] = sigma_i, gamma[i][j] = rho_w_i / alpha_j on edges j->i,
 * zero otherwise. Throws when some alpha_j is zero. */
GainMatrix build_gain_matrix(const std::vector<LocalAsfParams>& locals,
                             const std::vector<Edge>& edges,
                             GainForm form = GainForm::Additive);

struct SmallGainReport {
  bool holds = false;
  std::vector<int> worst_cycle;  // state indices, empty if none found
  double worst_product = 0.0;    // gain product along worst_cycle
  bool worst_exact = false;      // true when cycles were enumerated exhaustively
  /* worst cycle through at least two subsystems (exact mode only) */
  std::vector<int> worst_loop;
  double worst_loop_product = 0.0;
};

/* Every simple cycle must have gain product < 1 (including length-1
 * cycles sigma_i < 1). The verdict comes from positive-cycle detection
 * on the log-gain graph; for small n the worst cycle is additionally
 * found by exhaustive simple-cycle enumeration. */
SmallGainReport check_small_gain(const GainMatrix& g);

struct ScalingVector {
  std::vector<double> psi;  // positive, normalized so min = 1
};

/* Positive weights with gamma[i][j]*psi_j < psi_i on every off-diagonal
 * nonzero, computed from shortest-path potentials on the log-gain graph
 * and made strict by the slack factor (1 - kappa_slack). Throws when the
 * small-gain condition fails, referencing the witness cycle. */
ScalingVector compute_scalings(const GainMatrix& g, double kappa_slack = 0.01);

/* max_i locals[i] / psi_i */
double compose_asf_value(const std::vector<double>& locals,
                         const ScalingVector& psi);

/* Conservative composite parameters: alpha = min_i alpha_i/psi_i,
 * sigma = max_i sigma_i, rho_u = max_i rho_u_i/psi_i,
 * eps = max_i eps_i/psi_i. Validated empirically by the runtime monitor. */
certificates::ComposedAsfParams compose_asf_params(
    const std::vector<LocalAsfParams>& locals, const ScalingVector& psi);

}  // namespace impsym::gains

#endif  // IMPSYM_GAINS_HPP_
