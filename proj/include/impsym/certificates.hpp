/*
 * certificates.hpp
 *
 * Stability certificates for impulsive subsystems: the flow/jump
 * contraction constants, the dwell-time condition, the piecewise
 * counter-indexed value function and its local alternating-simulation
 * parameters in additive and max form.
 *
 * All comparison-class gains are linear (a single nonnegative
 * coefficient), so inverses and compositions stay closed-form.
 */

#ifndef IMPSYM_CERTIFICATES_HPP_
#define IMPSYM_CERTIFICATES_HPP_

#include "impsym/model.hpp"

namespace impsym::certificates {

using model::ImpulsiveSubsystem;
using model::JumpTiming;

struct CertificateParams {
  double alpha_lower = 1.0;  // coefficient of the lower sandwich gain
  double alpha_upper = 1.0;  // coefficient of the upper sandwich gain
  double kappa_c = 0.0;      // flow contraction rate (positive = stable flow)
  double kappa_d = 0.0;      // jump factor, >= 0
  double rho_wc = 0.0;       // internal-input flow gain
  double rho_wd = 0.0;       // internal-input jump gain
  double rho_uc = 0.0;       // external-input flow gain
  double rho_ud = 0.0;       // external-input jump gain
  double gamma_hat = 1.0;    // triangle-inequality gain of V
  double lipschitz_L = 1.0;  // output Lipschitz constant
  double phi = 0.0;          // intra-period internal-input variation bound
};

/* For a scalar affine subsystem with V(x,x') = |x - x'| the constants
 * fall out of the dynamics directly. Throws for state_dim > 1; those
 * need hand-supplied constants. */
CertificateParams derive_affine_certificate(const ImpulsiveSubsystem& sub);

struct DwellReport {
  double margin_at_zmin = 0.0;  // ln(kappa_d) - kappa_c*tau*z_min
  double margin_at_zmax = 0.0;
  bool trivially_satisfied = false;  // kappa_d == 0
  bool holds = false;
};

/* Dwell-time condition: ln(kappa_d) - kappa_c*tau*c < 0 at c in
 * {z_min, z_max}. */
DwellReport check_dwell_time(const CertificateParams& cert,
                             const JumpTiming& timing);

enum class AsfCaseKind {
  StableStable,  // kappa_d < 1 and kappa_c > 0
  UnstableJump,  // kappa_d >= 1 and kappa_c > 0
  UnstableFlow,  // kappa_d < 1 and kappa_c <= 0
};

struct AsfCase {
  AsfCaseKind kind = AsfCaseKind::StableStable;
  double epsilon = 0.5;  // in (0,1)
  double delta = 0.0;    // > z_max
};

/* Picks the case matching the signs of (kappa_c, kappa_d); throws when
 * kappa_d >= 1 and kappa_c <= 0 (construction inapplicable) or the
 * epsilon/delta parameters are invalid. Defaults: epsilon = 0.5,
 * delta = z_max + 1. */
AsfCase select_asf_case(const CertificateParams& cert, const JumpTiming& timing,
                        double epsilon = 0.5, double delta = 0.0);

/* Counter-indexed value: v itself, v/e^{-kappa_c*tau*eps*c} or
 * v/kappa_d^{-c/delta} depending on the case. */
double eval_asf(double v, const AsfCase& asf_case, int c,
                const CertificateParams& cert, const JumpTiming& timing);

struct LocalAsfParams {
  double alpha = 1.0;      // output lower gain
  double sigma_bar = 0.0;  // additive contraction, in (0,1)
  double rho_w_bar = 0.0;
  double rho_u_bar = 0.0;
  double eps_bar = 0.0;
  double psi_lemma = 0.99;  // the additive-to-max conversion constant
  /* max form */
  double sigma = 0.0;
  double rho_w = 0.0;
  double rho_u = 0.0;
  double eps = 0.0;
};

/* Quantization-induced slack absorbed into the additive offset: the
 * triangle term for the eta_x ball plus the worse of the flow and jump
 * input-mismatch contributions. */
double quantization_slack(const CertificateParams& cert, const JumpTiming& timing,
                          double eta_x, double eta_w, double eta_u);

/* Additive parameters per the piecewise value function case, then the
 * max-form parameters via the additive-to-max conversion:
 *   sigma = 1 - (1-psi)(1-sigma_bar),  rho/eps scaled by 1/((1-sigma_bar)psi).
 * Throws if sigma_bar >= 1 (contraction lost at the chosen tau/eps/delta). */
LocalAsfParams derive_local_asf(const CertificateParams& cert,
                                const AsfCase& asf_case, const JumpTiming& timing,
                                double eta_x, double eta_w, double eta_u,
                                double psi_lemma = 0.99);

/* Composed alternating-simulation parameters (linear coefficients). */
struct ComposedAsfParams {
  double alpha_tilde = 1.0;
  double sigma_tilde = 0.0;
  double rho_u_tilde = 0.0;
  double eps_tilde = 0.0;
};

struct PrecisionBound {
  double input_bound = 0.0;  // assumed bound on the abstract input norm
  double eps_hat = 0.0;      // guaranteed output-mismatch bound
};

/* eps_hat = alpha_tilde^{-1}(max{rho_u_tilde * r, eps_tilde}); throws
 * when alpha_tilde is not invertible (coefficient 0). */
PrecisionBound precision_bound(const ComposedAsfParams& composed,
                               double input_bound);

}  // namespace impsym::certificates

#endif  // IMPSYM_CERTIFICATES_HPP_
