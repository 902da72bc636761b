#include "impsym/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace impsym::runtime {

namespace {

constexpr double kGridTol = 1e-9;

/* wiring: per target, the (source, output block) pairs in block order */
using Wiring = std::vector<std::vector<std::pair<int, const model::AffineMap*>>>;

Wiring resolve_wiring(const NetworkModel& network) {
  Wiring w(network.size());
  for (std::size_t i = 0; i < network.size(); ++i)
    for (int j : network.sources_of(static_cast<int>(i)))
      w[i].emplace_back(
          j, &network.subsystems[j].output_blocks.at(static_cast<int>(i)));
  return w;
}

std::vector<Vec> internal_inputs_at(const Wiring& wiring,
                                    const std::vector<Vec>& xs) {
  std::vector<Vec> w(wiring.size());
  for (std::size_t i = 0; i < wiring.size(); ++i)
    for (const auto& [j, h] : wiring[i]) {
      Vec y = h->eval(xs[j]);
      w[i].insert(w[i].end(), y.begin(), y.end());
    }
  return w;
}

}  // namespace

Trajectory run_closed_loop(const NetworkModel& network,
                           const InputSelector& select,
                           const std::vector<Vec>& x0,
                           const SimulationConfig& config) {
  const std::size_t n = network.size();
  if (n == 0) throw std::invalid_argument("run_closed_loop: empty network");
  if (x0.size() != n)
    throw std::invalid_argument("run_closed_loop: one initial state per subsystem");
  const double tau = network.subsystems[0].timing.tau;
  for (const auto& sub : network.subsystems)
    if (sub.timing.tau != tau)
      throw std::invalid_argument("run_closed_loop: subsystems must share tau");
  if (!(tau > 0.0) || !(config.horizon >= 0.0))
    throw std::invalid_argument("run_closed_loop: bad tau or horizon");

  const Wiring wiring = resolve_wiring(network);
  const long periods = static_cast<long>(std::llround(config.horizon / tau));
  const int substeps = std::max(1, config.integrator_steps);

  /* stacked layout for the coupled integrator */
  std::vector<std::size_t> x_off(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    x_off[i + 1] = x_off[i] + network.subsystems[i].state_dim;

  Trajectory traj;
  traj.x0 = x0;
  std::vector<Vec> xs = x0;
  std::vector<int> c(n, 0);
  std::vector<std::size_t> next_jump(n, 0);

  auto due_now = [&](std::size_t i, double t) {
    const auto& sched = network.subsystems[i].timing.explicit_jumps;
    return next_jump[i] < sched.size() &&
           std::abs(sched[next_jump[i]] - t) <= config.time_tol;
  };

  for (long k = 0; k <= periods; ++k) {
    const double t = static_cast<double>(k) * tau;

    std::vector<char> jumped(n, 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (due_now(i, t)) {
        jumped[i] = 1;
        any = true;
      }
    if (any) {
      auto u = select(xs, c);
      if (!u) {
        traj.halted_unsafe = true;
        traj.note = "selector gave up before the jump at t=" + std::to_string(t);
        return traj;
      }
      Step step;
      step.t = t;
      step.is_jump = true;
      step.jumped = jumped;
      step.x_before = xs;
      step.c_before = c;
      step.u = *u;
      step.w_before = internal_inputs_at(wiring, xs);
      for (std::size_t i = 0; i < n; ++i) {
        if (!jumped[i]) continue;
        if (c[i] < network.subsystems[i].timing.z_min)
          throw std::runtime_error("run_closed_loop: jump before the dwell minimum");
        xs[i] = model::evaluate_dynamics(network.subsystems[i].jump,
                                         step.x_before[i], step.w_before[i],
                                         (*u)[i]);
        c[i] = 0;
        ++next_jump[i];
      }
      step.x_after = xs;
      step.c_after = c;
      traj.steps.push_back(std::move(step));
    }

    if (k == periods) break;

    for (std::size_t i = 0; i < n; ++i)
      if (c[i] >= network.subsystems[i].timing.z_max)
        throw std::runtime_error(
            "run_closed_loop: jump schedule violates the dwell maximum");

    auto u = select(xs, c);
    if (!u) {
      traj.halted_unsafe = true;
      traj.note = "selector gave up at t=" + std::to_string(t);
      return traj;
    }
    Step step;
    step.t = t;
    step.x_before = xs;
    step.c_before = c;
    step.u = *u;
    step.w_before = internal_inputs_at(wiring, xs);

    /* coupled RK4 over one sampling period */
    const std::size_t dim = x_off[n];
    Vec y(dim);
    for (std::size_t i = 0; i < n; ++i)
      std::copy(xs[i].begin(), xs[i].end(), y.begin() + x_off[i]);
    auto deriv = [&](const Vec& z, Vec& out) {
      std::vector<Vec> blocks(n);
      for (std::size_t i = 0; i < n; ++i)
        blocks[i] = Vec(z.begin() + x_off[i], z.begin() + x_off[i + 1]);
      std::vector<Vec> w = internal_inputs_at(wiring, blocks);
      for (std::size_t i = 0; i < n; ++i) {
        Vec d = model::evaluate_dynamics(network.subsystems[i].flow, blocks[i],
                                         w[i], (*u)[i]);
        std::copy(d.begin(), d.end(), out.begin() + x_off[i]);
      }
    };
    const double h = tau / substeps;
    Vec k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (int stp = 0; stp < substeps; ++stp) {
      deriv(y, k1);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      deriv(tmp, k2);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      deriv(tmp, k3);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
      deriv(tmp, k4);
      for (std::size_t i = 0; i < dim; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = Vec(y.begin() + x_off[i], y.begin() + x_off[i + 1]);
      ++c[i];
    }
    step.x_after = xs;
    step.c_after = c;
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

/* ---------------------------------------------------------------- */

namespace {

/* nearest lattice tuple on the given axes, ties toward -inf, clamped */
Vec nearest_on(const std::vector<abstraction::AxisGrid>& axes, const Vec& x,
               std::vector<long>* ks = nullptr) {
  Vec p(x.size());
  if (ks) ks->resize(x.size());
  for (std::size_t a = 0; a < axes.size(); ++a) {
    long k = static_cast<long>(std::ceil(x[a] / axes[a].eta - 0.5));
    k = std::clamp(k, axes[a].k_lo, axes[a].k_hi);
    p[a] = axes[a].value(k);
    if (ks) (*ks)[a] = k;
  }
  return p;
}

std::size_t lattice_index(const std::vector<abstraction::AxisGrid>& axes,
                          const std::vector<long>& ks) {
  std::size_t idx = 0;
  for (std::size_t a = 0; a < axes.size(); ++a)
    idx = idx * axes[a].count() + static_cast<std::size_t>(ks[a] - axes[a].k_lo);
  return idx;
}

std::size_t external_index(const abstraction::SymbolicModel& m, const Vec& u) {
  for (std::size_t i = 0; i < m.external_inputs.size(); ++i)
    if (inf_dist(m.external_inputs[i], u) <= kGridTol) return i;
  throw std::invalid_argument(
      "monitor_relation: applied input not in the abstract input set");
}

/* full output of subsystem i: all blocks concatenated in key order */
Vec full_output(const model::ImpulsiveSubsystem& sub, const Vec& x) {
  Vec y;
  for (const auto& [to, h] : sub.output_blocks) {
    (void)to;
    Vec b = h.eval(x);
    y.insert(y.end(), b.begin(), b.end());
  }
  if (y.empty()) y = x;  // no declared outputs: identity
  return y;
}

}  // namespace

MonitorReport monitor_relation(
    const NetworkModel& network,
    const std::vector<const abstraction::SymbolicModel*>& components,
    const CertificateBundle& bundle, const Trajectory& traj,
    double tolerance) {
  const std::size_t n = network.size();
  if (components.size() != n || bundle.certs.size() != n ||
      bundle.cases.size() != n || bundle.locals.size() != n ||
      bundle.psi.psi.size() != n)
    throw std::invalid_argument("monitor_relation: bundle size mismatch");

  MonitorReport rep;
  rep.pass = true;

  /* abstract run state */
  std::vector<Vec> xh(n);
  std::vector<std::vector<long>> kh(n);
  std::vector<int> ch(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    xh[i] = nearest_on(components[i]->state_axes, traj.x0[i], &kh[i]);

  auto local_levels = [&](const std::vector<Vec>& xs,
                          const std::vector<int>& cs) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
      s[i] = certificates::eval_asf(inf_dist(xs[i], xh[i]), bundle.cases[i],
                                    cs[i], bundle.certs[i],
                                    network.subsystems[i].timing);
    return s;
  };

  auto note_violation = [&](double gap) {
    if (gap > tolerance) ++rep.violations;
    rep.max_violation = std::max(rep.max_violation, gap);
  };

  auto mismatch_row = [&](double t, bool is_jump,
                          const std::vector<Vec>& xs,
                          const std::vector<double>& s_local) {
    MonitorRow row;
    row.t = t;
    row.is_jump = is_jump;
    row.s_local = s_local;
    row.lsf1_gap.resize(n);
    row.lsmf2_gap.assign(n, kNoGap);
    double out_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& sub = network.subsystems[i];
      double mism = inf_dist(full_output(sub, xs[i]), full_output(sub, xh[i]));
      row.lsf1_gap[i] = bundle.locals[i].alpha * mism - s_local[i];
      note_violation(row.lsf1_gap[i]);
      auto it = sub.output_blocks.find(sub.id);
      Vec ext_x = it != sub.output_blocks.end() ? it->second.eval(xs[i]) : xs[i];
      Vec ext_h = it != sub.output_blocks.end() ? it->second.eval(xh[i]) : xh[i];
      out_gap = std::max(out_gap, inf_dist(ext_x, ext_h));
    }
    double s_tilde = gains::compose_asf_value(s_local, bundle.psi);
    row.sf1_gap = bundle.composed.alpha_tilde * out_gap - s_tilde;
    note_violation(row.sf1_gap);
    row.sf2_gap = kNoGap;
    return row;
  };

  for (std::size_t step_idx = 0; step_idx < traj.steps.size(); ++step_idx) {
    const Step& step = traj.steps[step_idx];
    for (std::size_t i = 0; i < n; ++i)
      if (step.c_before[i] != ch[i]) {
        rep.pass = false;
        rep.note = "counter drift between the runs at step " +
                   std::to_string(step_idx);
        return rep;
      }

    std::vector<double> s_pre = local_levels(step.x_before, ch);
    MonitorRow row = mismatch_row(step.t, step.is_jump, step.x_before, s_pre);

    /* advance the abstract run toward the concrete successor */
    std::vector<Vec> xh_next = xh;
    std::vector<std::vector<long>> kh_next = kh;
    std::vector<int> ch_next = ch;
    std::vector<double> w_norm(n, 0.0), u_norm(n, 0.0);
    std::vector<char> moved(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = *components[i];
      const bool transitions = !step.is_jump || step.jumped[i];
      if (!transitions) continue;
      moved[i] = 1;
      std::vector<long> wk;
      Vec wh = nearest_on(m.internal_axes, step.w_before[i], &wk);
      std::size_t wi = m.internal_axes.empty() ? 0 : lattice_index(m.internal_axes, wk);
      std::size_t ui = external_index(m, step.u[i]);
      w_norm[i] = step.w_before[i].empty() ? 0.0
                                           : inf_dist(step.w_before[i], wh);
      u_norm[i] = inf_norm(step.u[i]);

      std::uint64_t s_idx =
          lattice_index(m.state_axes, kh[i]) *
              static_cast<std::uint64_t>(m.timings[0].z_max + 1) +
          static_cast<std::uint64_t>(ch[i]);
      auto succ = m.successors(s_idx, wi, ui);
      auto kinds = m.successor_kinds(s_idx, wi, ui);
      const abstraction::StepKind want = step.is_jump
                                             ? abstraction::StepKind::Jump
                                             : abstraction::StepKind::Flow;
      double best = std::numeric_limits<double>::infinity();
      long best_t = -1;
      for (std::size_t q = 0; q < succ.size(); ++q) {
        if (kinds[q] != want) continue;
        double d = inf_dist(m.state_point(succ[q]), step.x_after[i]);
        if (d < best) {
          best = d;
          best_t = static_cast<long>(succ[q]);
        }
      }
      if (best_t < 0) {
        rep.pass = false;
        rep.note = "abstract run blocked at step " + std::to_string(step_idx);
        rep.rows.push_back(std::move(row));
        return rep;
      }
      auto st = m.decode_state(static_cast<std::uint64_t>(best_t));
      kh_next[i] = st.grid_k;
      ch_next[i] = st.counters[0];
      xh_next[i] = m.state_point(static_cast<std::uint64_t>(best_t));
    }

    /* decrease conditions across the step */
    std::vector<double> s_post(n);
    for (std::size_t i = 0; i < n; ++i)
      s_post[i] = certificates::eval_asf(
          inf_dist(step.x_after[i], xh_next[i]), bundle.cases[i], ch_next[i],
          bundle.certs[i], network.subsystems[i].timing);
    for (std::size_t i = 0; i < n; ++i) {
      if (!moved[i]) continue;
      const auto& lp = bundle.locals[i];
      double bound = std::max({lp.sigma * s_pre[i], lp.rho_w * w_norm[i],
                               lp.rho_u * u_norm[i], lp.eps});
      row.lsmf2_gap[i] = s_post[i] - bound;
      note_violation(row.lsmf2_gap[i]);
    }
    double s_tilde_pre = gains::compose_asf_value(s_pre, bundle.psi);
    double s_tilde_post = gains::compose_asf_value(s_post, bundle.psi);
    double u_all = *std::max_element(u_norm.begin(), u_norm.end());
    double bound = std::max({bundle.composed.sigma_tilde * s_tilde_pre,
                             bundle.composed.rho_u_tilde * u_all,
                             bundle.composed.eps_tilde});
    row.sf2_gap = s_tilde_post - bound;
    note_violation(row.sf2_gap);
    rep.rows.push_back(std::move(row));

    xh = xh_next;
    kh = kh_next;
    ch = ch_next;
  }

  /* terminal output-mismatch check */
  if (!traj.steps.empty()) {
    const Step& last = traj.steps.back();
    double t_end = last.t + (last.is_jump ? 0.0 : network.subsystems[0].timing.tau);
    rep.rows.push_back(
        mismatch_row(t_end, false, last.x_after, local_levels(last.x_after, ch)));
  }

  rep.pass = rep.pass && rep.violations == 0;
  return rep;
}

}  // namespace impsym::runtime
