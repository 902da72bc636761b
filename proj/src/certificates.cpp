#include "impsym/certificates.hpp"

#include <cmath>
#include <stdexcept>

namespace impsym::certificates {

CertificateParams derive_affine_certificate(const ImpulsiveSubsystem& sub) {
  if (sub.state_dim != 1)
    throw std::invalid_argument(
        "derive_affine_certificate: certificate must be user-supplied for "
        "multidimensional subsystems");
  CertificateParams p;
  p.alpha_lower = 1.0;
  p.alpha_upper = 1.0;
  p.kappa_c = -sub.flow.A(0, 0);
  p.kappa_d = std::abs(sub.jump.A(0, 0));
  auto row_abs_sum = [](const Mat& m) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += std::abs(m(0, j));
    return s;
  };
  p.rho_wc = row_abs_sum(sub.flow.B);
  p.rho_wd = row_abs_sum(sub.jump.B);
  p.rho_uc = row_abs_sum(sub.flow.D);
  p.rho_ud = row_abs_sum(sub.jump.D);
  p.gamma_hat = 1.0;
  p.lipschitz_L = 1.0;
  return p;
}

DwellReport check_dwell_time(const CertificateParams& cert,
                             const JumpTiming& timing) {
  DwellReport rep;
  if (cert.kappa_d == 0.0) {
    rep.trivially_satisfied = true;
    rep.holds = true;
    rep.margin_at_zmin = -std::numeric_limits<double>::infinity();
    rep.margin_at_zmax = rep.margin_at_zmin;
    return rep;
  }
  rep.margin_at_zmin =
      std::log(cert.kappa_d) - cert.kappa_c * timing.tau * timing.z_min;
  rep.margin_at_zmax =
      std::log(cert.kappa_d) - cert.kappa_c * timing.tau * timing.z_max;
  rep.holds = rep.margin_at_zmin < 0.0 && rep.margin_at_zmax < 0.0;
  return rep;
}

AsfCase select_asf_case(const CertificateParams& cert, const JumpTiming& timing,
                        double epsilon, double delta) {
  if (delta == 0.0) delta = timing.z_max + 1.0;
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("select_asf_case: epsilon must be in (0,1)");
  if (!(delta > timing.z_max))
    throw std::invalid_argument("select_asf_case: delta must exceed z_max");
  AsfCase c;
  c.epsilon = epsilon;
  c.delta = delta;
  if (cert.kappa_d < 1.0 && cert.kappa_c > 0.0)
    c.kind = AsfCaseKind::StableStable;
  else if (cert.kappa_d >= 1.0 && cert.kappa_c > 0.0)
    c.kind = AsfCaseKind::UnstableJump;
  else if (cert.kappa_d < 1.0 && cert.kappa_c <= 0.0)
    c.kind = AsfCaseKind::UnstableFlow;
  else
    throw std::invalid_argument("select_asf_case: no applicable ASF case");
  return c;
}

double eval_asf(double v, const AsfCase& asf_case, int c,
                const CertificateParams& cert, const JumpTiming& timing) {
  if (v < 0.0) throw std::invalid_argument("eval_asf: negative value");
  if (c < 0 || c > timing.z_max)
    throw std::invalid_argument("eval_asf: counter out of range");
  switch (asf_case.kind) {
    case AsfCaseKind::StableStable:
      return v;
    case AsfCaseKind::UnstableJump:
      return v / std::exp(-cert.kappa_c * timing.tau * asf_case.epsilon * c);
    case AsfCaseKind::UnstableFlow:
      return v / std::pow(cert.kappa_d, -static_cast<double>(c) / asf_case.delta);
  }
  return v;
}

double quantization_slack(const CertificateParams& cert, const JumpTiming& timing,
                          double eta_x, double eta_w, double eta_u) {
  double flow_scale;
  if (cert.kappa_c != 0.0)
    flow_scale = (1.0 - std::exp(-cert.kappa_c * timing.tau)) / cert.kappa_c;
  else
    flow_scale = timing.tau;
  double flow_term =
      flow_scale * (cert.rho_wc * (cert.phi + eta_w) + cert.rho_uc * eta_u);
  double jump_term = cert.rho_wd * eta_w + cert.rho_ud * eta_u;
  return cert.gamma_hat * eta_x + std::max(flow_term, jump_term);
}

LocalAsfParams derive_local_asf(const CertificateParams& cert,
                                const AsfCase& asf_case, const JumpTiming& timing,
                                double eta_x, double eta_w, double eta_u,
                                double psi_lemma) {
  if (!(psi_lemma > 0.0 && psi_lemma < 1.0))
    throw std::invalid_argument("derive_local_asf: psi must be in (0,1)");
  if (eta_x <= 0.0 || eta_w < 0.0 || eta_u < 0.0)
    throw std::invalid_argument("derive_local_asf: bad quantization parameters");

  const double tau = timing.tau;
  const double slack = quantization_slack(cert, timing, eta_x, eta_w, eta_u);

  LocalAsfParams p;
  p.alpha = cert.alpha_lower / cert.lipschitz_L;
  p.psi_lemma = psi_lemma;

  switch (asf_case.kind) {
    case AsfCaseKind::StableStable:
      p.sigma_bar = std::max(std::exp(-cert.kappa_c * tau), cert.kappa_d);
      p.rho_w_bar = std::max(cert.rho_wc, cert.rho_wd);
      p.rho_u_bar = 0.0;
      p.eps_bar = slack;
      break;
    case AsfCaseKind::UnstableJump: {
      /* one-step ratios of v*e^{kappa_c tau eps c}: flowing raises the
       * counter weight by e^{kappa_c tau eps}, jumping resets it from
       * c >= z_min */
      double flow = std::exp(-cert.kappa_c * tau * (1.0 - asf_case.epsilon));
      double jump = cert.kappa_d *
                    std::exp(-cert.kappa_c * tau * asf_case.epsilon * timing.z_min);
      p.sigma_bar = std::max(flow, jump);
      /* destination weights: e^{kappa_c tau eps c'} with c' <= z_max after
       * a flow, 1 after a jump */
      double weight = std::exp(cert.kappa_c * tau * asf_case.epsilon * timing.z_max);
      p.rho_w_bar = std::max(weight * cert.rho_wc, cert.rho_wd);
      p.rho_u_bar = 0.0;
      p.eps_bar = weight * slack;
      break;
    }
    case AsfCaseKind::UnstableFlow: {
      /* one-step ratios of v*kappa_d^{c/delta}: flowing gains a factor
       * kappa_d^{1/delta}, jumping loses up to kappa_d^{1 - z_max/delta} */
      double flow = std::exp(-cert.kappa_c * tau) *
                    std::pow(cert.kappa_d, 1.0 / asf_case.delta);
      double jump = std::pow(
          cert.kappa_d, 1.0 - static_cast<double>(timing.z_max) / asf_case.delta);
      p.sigma_bar = std::max(flow, jump);
      /* destination weights kappa_d^{c'/delta} never exceed one */
      p.rho_w_bar = std::max(cert.rho_wc, cert.rho_wd);
      p.rho_u_bar = 0.0;
      p.eps_bar = slack;
      break;
    }
  }

  if (p.sigma_bar >= 1.0)
    throw std::runtime_error(
        "derive_local_asf: construction fails, contraction lost at chosen "
        "tau/epsilon/delta");

  const double scale = 1.0 / ((1.0 - p.sigma_bar) * psi_lemma);
  p.sigma = 1.0 - (1.0 - psi_lemma) * (1.0 - p.sigma_bar);
  p.rho_w = p.rho_w_bar * scale;
  p.rho_u = p.rho_u_bar * scale;
  p.eps = p.eps_bar * scale;
  return p;
}

PrecisionBound precision_bound(const ComposedAsfParams& composed,
                               double input_bound) {
  if (composed.alpha_tilde <= 0.0)
    throw std::invalid_argument("precision_bound: alpha coefficient must be > 0");
  PrecisionBound b;
  b.input_bound = input_bound;
  b.eps_hat = std::max(composed.rho_u_tilde * input_bound, composed.eps_tilde) /
              composed.alpha_tilde;
  return b;
}

}  // namespace impsym::certificates
