#include "impsym/abstraction.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace impsym::abstraction {

namespace {

constexpr double kGridTol = 1e-9;

AxisGrid make_axis(double lo, double hi, double eta) {
  AxisGrid ax;
  ax.eta = eta;
  if (eta == 0.0) return ax;  // identity axis, no lattice
  ax.k_lo = static_cast<long>(std::ceil(lo / eta - kGridTol));
  ax.k_hi = static_cast<long>(std::floor(hi / eta + kGridTol));
  return ax;
}

}  // namespace

Quantizer make_quantizer(const Box& box, const Vec& eta) {
  if (!box.valid()) throw std::invalid_argument("make_quantizer: bad box");
  if (eta.size() != box.dim())
    throw std::invalid_argument("make_quantizer: eta dimension mismatch");
  Quantizer q;
  q.box = box;
  q.eta = eta;
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (eta[i] < 0.0) throw std::invalid_argument("make_quantizer: negative eta");
    if (eta[i] > box.min_side() + kGridTol)
      throw std::invalid_argument("make_quantizer: eta exceeds minimal box side");
    AxisGrid ax = make_axis(box.lo[i], box.hi[i], eta[i]);
    if (eta[i] > 0.0 && ax.k_lo > ax.k_hi)
      throw std::invalid_argument("make_quantizer: empty lattice");
    q.axes.push_back(ax);
  }
  return q;
}

Quantizer make_quantizer(const Box& box, double eta) {
  return make_quantizer(box, Vec(box.dim(), eta));
}

std::vector<Vec> quantize_set(const Box& box, const Vec& eta) {
  for (double e : eta)
    if (e <= 0.0)
      throw std::invalid_argument("quantize_set: pitch must be positive");
  Quantizer q = make_quantizer(box, eta);
  std::vector<Vec> points;
  const std::size_t n = box.dim();
  if (n == 0) {
    points.push_back({});
    return points;
  }
  std::vector<long> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = q.axes[i].k_lo;
  while (true) {
    Vec p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = q.axes[i].value(k[i]);
    points.push_back(std::move(p));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (k[i] < q.axes[i].k_hi) {
        ++k[i];
        break;
      }
      k[i] = q.axes[i].k_lo;
      if (i == 0) return points;
    }
  }
}

std::vector<Vec> quantize_set(const Box& box, double eta) {
  return quantize_set(box, Vec(box.dim(), eta));
}

Vec quantize_point(const Vec& x, const Quantizer& q) {
  if (!q.box.contains(x, kGridTol))
    throw std::out_of_range("quantize_point: point outside box");
  Vec p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const AxisGrid& ax = q.axes[i];
    if (ax.eta == 0.0) {
      p[i] = x[i];
      continue;
    }
    /* nearest, ties toward -inf */
    long k = static_cast<long>(std::ceil(x[i] / ax.eta - 0.5));
    k = std::clamp(k, ax.k_lo, ax.k_hi);
    p[i] = ax.value(k);
  }
  return p;
}

/* ---------------------------------------------------------------- */

std::uint64_t SymbolicModel::num_grid_points() const {
  std::uint64_t n = 1;
  for (const AxisGrid& ax : state_axes) n *= ax.count();
  return n;
}

std::uint64_t SymbolicModel::num_counter_combos() const {
  std::uint64_t n = 1;
  for (const model::JumpTiming& t : timings) n *= t.z_max + 1;
  return n;
}

SymbolicState SymbolicModel::decode_state(std::uint64_t s) const {
  SymbolicState st;
  st.counters.resize(timings.size());
  st.grid_k.resize(state_axes.size());
  for (std::size_t i = timings.size(); i-- > 0;) {
    std::uint64_t card = timings[i].z_max + 1;
    st.counters[i] = static_cast<int>(s % card);
    s /= card;
  }
  for (std::size_t i = state_axes.size(); i-- > 0;) {
    std::uint64_t card = state_axes[i].count();
    st.grid_k[i] = state_axes[i].k_lo + static_cast<long>(s % card);
    s /= card;
  }
  return st;
}

std::uint64_t SymbolicModel::encode_state(const SymbolicState& st) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < state_axes.size(); ++i)
    s = s * state_axes[i].count() +
        static_cast<std::uint64_t>(st.grid_k[i] - state_axes[i].k_lo);
  for (std::size_t i = 0; i < timings.size(); ++i)
    s = s * (timings[i].z_max + 1) + static_cast<std::uint64_t>(st.counters[i]);
  return s;
}

Vec SymbolicModel::state_point(std::uint64_t s) const {
  SymbolicState st = decode_state(s);
  Vec x(state_axes.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = state_axes[i].value(st.grid_k[i]);
  return x;
}

Vec SymbolicModel::output(std::uint64_t s) const {
  Vec x = state_point(s);
  Vec y;
  std::size_t off = 0;
  for (std::size_t b = 0; b < block_dims.size(); ++b) {
    Vec xb(x.begin() + off, x.begin() + off + block_dims[b]);
    Vec yb = external_outputs[b].eval(xb);
    y.insert(y.end(), yb.begin(), yb.end());
    off += block_dims[b];
  }
  return y;
}

std::span<const std::uint32_t> SymbolicModel::successors(std::uint64_t s,
                                                         std::size_t w,
                                                         std::size_t u) const {
  std::uint64_t t = (s * num_internal() + w) * num_external() + u;
  return {succ.data() + offsets[t], succ.data() + offsets[t + 1]};
}

std::span<const StepKind> SymbolicModel::successor_kinds(std::uint64_t s,
                                                         std::size_t w,
                                                         std::size_t u) const {
  std::uint64_t t = (s * num_internal() + w) * num_external() + u;
  return {kind.data() + offsets[t], kind.data() + offsets[t + 1]};
}

/* ---------------------------------------------------------------- */

Vec flow_endpoint(const model::AffineDynamics& dyn, const Vec& x, const Vec& w,
                  const Vec& u, double tau, int integrator_steps) {
  const std::size_t n = dyn.state_dim();
  /* constant forcing B*w + D*u + bias */
  Vec c = dyn.bias;
  for (std::size_t i = 0; i < n; ++i) {
    double s = c[i];
    for (std::size_t j = 0; j < dyn.B.cols; ++j) s += dyn.B(i, j) * w[j];
    for (std::size_t j = 0; j < dyn.D.cols; ++j) s += dyn.D(i, j) * u[j];
    c[i] = s;
  }
  if (n == 1) {
    double a = dyn.A(0, 0);
    if (a != 0.0) {
      double ea = std::exp(a * tau);
      return {ea * x[0] + (ea - 1.0) / a * c[0]};
    }
    return {x[0] + tau * c[0]};
  }
  /* RK4 with fixed substeps */
  if (integrator_steps < 1)
    throw std::invalid_argument("flow_endpoint: need at least one substep");
  const double h = tau / integrator_steps;
  Vec y = x;
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto deriv = [&](const Vec& z, Vec& out) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = c[i];
      for (std::size_t j = 0; j < n; ++j) s += dyn.A(i, j) * z[j];
      out[i] = s;
    }
  };
  for (int step = 0; step < integrator_steps; ++step) {
    deriv(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    deriv(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    deriv(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    deriv(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

namespace {

/* per-axis lattice multipliers within the closed eta-ball around nom */
struct BallRange {
  long lo, hi;  // empty when lo > hi
};

BallRange ball_range(const AxisGrid& ax, double nom) {
  BallRange r;
  r.lo = std::max(ax.k_lo,
                  static_cast<long>(std::ceil((nom - ax.eta) / ax.eta - kGridTol)));
  r.hi = std::min(ax.k_hi,
                  static_cast<long>(std::floor((nom + ax.eta) / ax.eta + kGridTol)));
  return r;
}

/* Enumerates all lattice tuples within the ball, lexicographically, and
 * hands each to sink as the per-axis multipliers. Returns false when the
 * ball misses the grid on some axis. */
template <typename Sink>
bool for_each_ball_point(const std::vector<AxisGrid>& axes, const Vec& nom,
                         std::vector<long>& k, Sink&& sink) {
  const std::size_t n = axes.size();
  std::vector<BallRange> ranges(n);
  for (std::size_t i = 0; i < n; ++i) {
    ranges[i] = ball_range(axes[i], nom[i]);
    if (ranges[i].lo > ranges[i].hi) return false;
  }
  for (std::size_t i = 0; i < n; ++i) k[i] = ranges[i].lo;
  while (true) {
    sink(k);
    std::size_t i = n;
    while (true) {
      if (i == 0) return true;
      --i;
      if (k[i] < ranges[i].hi) {
        ++k[i];
        break;
      }
      k[i] = ranges[i].lo;
    }
  }
}

std::vector<Vec> external_input_list(const model::ExternalInputSet& set,
                                     double eta_u) {
  if (set.finite) {
    std::vector<Vec> v = set.values;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.empty()) throw std::invalid_argument("empty external input set");
    return v;
  }
  if (eta_u <= 0.0)
    throw std::invalid_argument("external input box needs positive eta_u");
  return quantize_set(set.box, eta_u);
}

struct InternalLattice {
  std::vector<AxisGrid> axes;
  std::vector<Vec> points;
};

InternalLattice internal_input_lattice(const Box& box, double eta_w) {
  InternalLattice lat;
  if (box.dim() == 0) {
    lat.points.push_back({});
    return lat;
  }
  if (eta_w <= 0.0)
    throw std::invalid_argument("internal input box needs positive eta_w");
  Quantizer q = make_quantizer(box, eta_w);
  lat.axes = q.axes;
  lat.points = quantize_set(box, eta_w);
  return lat;
}

struct StateRows {
  std::vector<std::uint32_t> counts;  // per (w,u) triple of this state
  std::vector<std::uint32_t> succ;
  std::vector<StepKind> kind;
};

/* Assembles the flat transition table from per-state rows. */
void assemble(SymbolicModel& m, std::vector<StateRows>& rows) {
  std::uint64_t triples = 0, total = 0;
  for (const StateRows& r : rows) {
    triples += r.counts.size();
    total += r.succ.size();
  }
  m.offsets.reserve(triples + 1);
  m.succ.reserve(total);
  m.kind.reserve(total);
  m.offsets.push_back(0);
  for (std::uint64_t s = 0; s < rows.size(); ++s) {
    StateRows& r = rows[s];
    std::uint64_t base = 0;
    for (std::uint32_t c : r.counts) {
      base += c;
      m.offsets.push_back(m.succ.size() + base);
    }
    m.succ.insert(m.succ.end(), r.succ.begin(), r.succ.end());
    m.kind.insert(m.kind.end(), r.kind.begin(), r.kind.end());
    if (r.succ.empty()) m.blocking_states.push_back(s);
    r = StateRows{};  // release early
  }
}

template <typename PerState>
void build_table(SymbolicModel& m, std::uint64_t max_transitions, bool parallel,
                 PerState&& per_state) {
  const std::uint64_t ns = m.num_states();
  const std::uint64_t cells = ns * m.num_internal() * m.num_external();
  if (ns > UINT32_MAX || cells > max_transitions) {
    m.capped = true;
    return;
  }
  std::vector<StateRows> rows(ns);
  std::atomic<std::uint64_t> emitted{0};
  std::atomic<bool> over{false};

#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (long long s = 0; s < static_cast<long long>(ns); ++s) {
    if (over.load(std::memory_order_relaxed)) continue;
    per_state(static_cast<std::uint64_t>(s), rows[s]);
    std::uint64_t tot =
        emitted.fetch_add(rows[s].succ.size(), std::memory_order_relaxed) +
        rows[s].succ.size();
    if (tot > max_transitions) over.store(true, std::memory_order_relaxed);
  }

  if (over.load()) {
    m.capped = true;
    return;
  }
  assemble(m, rows);
}

}  // namespace

std::vector<Vec> flow_successors(const Vec& x_hat, const Vec& w_hat,
                                 const Vec& u_hat, const ImpulsiveSubsystem& sub,
                                 const AbstractionConfig& config) {
  Quantizer q = make_quantizer(sub.state_box, config.eta_x);
  Vec nom = flow_endpoint(sub.flow, x_hat, w_hat, u_hat, sub.timing.tau,
                          config.integrator_steps);
  std::vector<Vec> out;
  std::vector<long> k(q.axes.size());
  for_each_ball_point(q.axes, nom, k, [&](const std::vector<long>& ks) {
    Vec p(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) p[i] = q.axes[i].value(ks[i]);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Vec> jump_successors(const Vec& x_hat, const Vec& w_hat,
                                 const Vec& u_hat, const ImpulsiveSubsystem& sub,
                                 const AbstractionConfig& config) {
  Quantizer q = make_quantizer(sub.state_box, config.eta_x);
  Vec nom = model::evaluate_dynamics(sub.jump, x_hat, w_hat, u_hat);
  std::vector<Vec> out;
  std::vector<long> k(q.axes.size());
  for_each_ball_point(q.axes, nom, k, [&](const std::vector<long>& ks) {
    Vec p(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) p[i] = q.axes[i].value(ks[i]);
    out.push_back(std::move(p));
  });
  return out;
}

namespace {

SymbolicModel build_subsystem_impl(const ImpulsiveSubsystem& sub,
                                   const AbstractionConfig& config,
                                   bool parallel) {
  auto t0 = std::chrono::steady_clock::now();
  SymbolicModel m;
  m.tau = sub.timing.tau;
  Quantizer qx = make_quantizer(sub.state_box, config.eta_x);
  for (const AxisGrid& ax : qx.axes)
    if (ax.eta == 0.0)
      throw std::invalid_argument("build_symbolic_subsystem: eta_x must be > 0");
  m.state_axes = qx.axes;
  m.block_dims = {static_cast<std::size_t>(sub.state_dim)};
  m.timings = {sub.timing};
  auto it = sub.output_blocks.find(sub.id);
  m.external_outputs = {it != sub.output_blocks.end()
                            ? it->second
                            : model::AffineMap::identity(sub.state_dim)};

  InternalLattice wlat =
      internal_input_lattice(sub.internal_input_box, config.eta_w);
  m.internal_axes = wlat.axes;
  m.internal_inputs = wlat.points;
  m.external_inputs = external_input_list(sub.external_inputs, config.eta_u);

  const std::size_t nw = m.internal_inputs.size();
  const std::size_t nu = m.external_inputs.size();
  const int zbar = sub.timing.z_max;

  build_table(m, config.max_transitions, parallel,
              [&](std::uint64_t s, StateRows& row) {
    SymbolicState st = m.decode_state(s);
    const int c = st.counters[0];
    Vec x(st.grid_k.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = m.state_axes[i].value(st.grid_k[i]);
    model::JumpWindow win = model::jump_window(c, sub.timing);
    row.counts.assign(nw * nu, 0);
    std::vector<long> kbuf(x.size());
    for (std::size_t wi = 0; wi < nw; ++wi) {
      for (std::size_t ui = 0; ui < nu; ++ui) {
        std::uint32_t count = 0;
        auto emit = [&](const Vec& nom, int c_next, StepKind kind) {
          for_each_ball_point(m.state_axes, nom, kbuf,
                              [&](const std::vector<long>& ks) {
            SymbolicState nxt{.grid_k = ks, .counters = {c_next}};
            row.succ.push_back(static_cast<std::uint32_t>(m.encode_state(nxt)));
            row.kind.push_back(kind);
            ++count;
          });
        };
        if (win.flow_allowed) {
          Vec nom = flow_endpoint(sub.flow, x, m.internal_inputs[wi],
                                  m.external_inputs[ui], sub.timing.tau,
                                  config.integrator_steps);
          emit(nom, c + 1, StepKind::Flow);
        }
        if (win.jump_allowed) {
          Vec nom = model::evaluate_dynamics(sub.jump, x, m.internal_inputs[wi],
                                             m.external_inputs[ui]);
          emit(nom, 0, StepKind::Jump);
        }
        row.counts[wi * nu + ui] = count;
      }
    }
    (void)zbar;
  });

  m.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return m;
}

SymbolicModel build_monolithic_impl(const NetworkModel& network,
                                    const AbstractionConfig& config,
                                    bool parallel) {
  auto t0 = std::chrono::steady_clock::now();
  const std::size_t nsub = network.size();
  if (nsub == 0) throw std::invalid_argument("build_monolithic: empty network");

  SymbolicModel m;
  m.tau = network.subsystems[0].timing.tau;
  for (const auto& sub : network.subsystems) {
    if (sub.timing.tau != m.tau)
      throw std::invalid_argument("build_monolithic: subsystems must share tau");
    Quantizer qx = make_quantizer(sub.state_box, config.eta_x);
    m.state_axes.insert(m.state_axes.end(), qx.axes.begin(), qx.axes.end());
    m.block_dims.push_back(static_cast<std::size_t>(sub.state_dim));
    m.timings.push_back(sub.timing);
    auto it = sub.output_blocks.find(sub.id);
    m.external_outputs.push_back(it != sub.output_blocks.end()
                                     ? it->second
                                     : model::AffineMap::identity(sub.state_dim));
  }
  m.internal_inputs.push_back({});  // resolved internally via the topology

  /* external input tuples, lexicographic over subsystems */
  std::vector<std::vector<Vec>> per_sub_u;
  for (const auto& sub : network.subsystems)
    per_sub_u.push_back(external_input_list(sub.external_inputs, config.eta_u));
  std::vector<std::size_t> uidx(nsub, 0);
  while (true) {
    Vec tuple;
    for (std::size_t i = 0; i < nsub; ++i)
      tuple.insert(tuple.end(), per_sub_u[i][uidx[i]].begin(),
                   per_sub_u[i][uidx[i]].end());
    m.external_inputs.push_back(std::move(tuple));
    std::size_t i = nsub;
    bool done = false;
    while (true) {
      if (i == 0) {
        done = true;
        break;
      }
      --i;
      if (++uidx[i] < per_sub_u[i].size()) break;
      uidx[i] = 0;
    }
    if (done) break;
  }

  /* block offsets into the stacked state / input tuples */
  std::vector<std::size_t> x_off(nsub + 1, 0), u_off(nsub + 1, 0);
  for (std::size_t i = 0; i < nsub; ++i) {
    x_off[i + 1] = x_off[i] + m.block_dims[i];
    u_off[i + 1] = u_off[i] + per_sub_u[i][0].size();
  }
  auto block_of = [&](const Vec& v, const std::vector<std::size_t>& off,
                      std::size_t i) {
    return Vec(v.begin() + off[i], v.begin() + off[i + 1]);
  };
  /* internal input of subsystem i from the stacked state (block order
   * ascending source index); wiring resolved up front */
  std::vector<std::vector<std::pair<int, const model::AffineMap*>>> wiring(nsub);
  for (std::size_t i = 0; i < nsub; ++i)
    for (int j : network.sources_of(static_cast<int>(i)))
      wiring[i].emplace_back(
          j, &network.subsystems[j].output_blocks.at(static_cast<int>(i)));
  auto internal_of = [&](const Vec& x, std::size_t i) {
    Vec w;
    for (const auto& [j, h] : wiring[i]) {
      Vec y = h->eval(block_of(x, x_off, j));
      w.insert(w.end(), y.begin(), y.end());
    }
    return w;
  };

  const std::size_t nu = m.external_inputs.size();
  const int steps = std::max(1, config.integrator_steps);

  build_table(m, config.max_transitions, parallel,
              [&](std::uint64_t s, StateRows& row) {
    SymbolicState st = m.decode_state(s);
    Vec x(st.grid_k.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = m.state_axes[i].value(st.grid_k[i]);

    std::vector<model::JumpWindow> win(nsub);
    bool all_flow = true;
    std::vector<int> jumpers;
    for (std::size_t i = 0; i < nsub; ++i) {
      win[i] = model::jump_window(st.counters[i], m.timings[i]);
      all_flow = all_flow && win[i].flow_allowed;
      if (win[i].jump_allowed) jumpers.push_back(static_cast<int>(i));
    }

    row.counts.assign(nu, 0);
    std::vector<long> kbuf(x.size());
    for (std::size_t ui = 0; ui < nu; ++ui) {
      const Vec& u = m.external_inputs[ui];
      std::vector<std::pair<std::uint32_t, StepKind>> entries;

      if (all_flow && nsub == 1) {
        /* no coupling: the single-subsystem endpoint is exact */
        Vec y = flow_endpoint(network.subsystems[0].flow, x, internal_of(x, 0),
                              u, m.tau, steps);
        std::vector<int> c_next(st.counters);
        for (int& c : c_next) ++c;
        for_each_ball_point(m.state_axes, y, kbuf,
                            [&](const std::vector<long>& ks) {
          SymbolicState nxt{.grid_k = ks, .counters = c_next};
          entries.emplace_back(static_cast<std::uint32_t>(m.encode_state(nxt)),
                               StepKind::Flow);
        });
      } else if (all_flow) {
        /* coupled RK4 over the stacked dynamics */
        const double h = m.tau / steps;
        Vec y = x, k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()),
            tmp(x.size());
        auto deriv = [&](const Vec& z, Vec& out) {
          for (std::size_t i = 0; i < nsub; ++i) {
            Vec d = model::evaluate_dynamics(
                network.subsystems[i].flow, block_of(z, x_off, i),
                internal_of(z, i), block_of(u, u_off, i));
            std::copy(d.begin(), d.end(), out.begin() + x_off[i]);
          }
        };
        for (int stp = 0; stp < steps; ++stp) {
          deriv(y, k1);
          for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
          deriv(tmp, k2);
          for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
          deriv(tmp, k3);
          for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
          deriv(tmp, k4);
          for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        std::vector<int> c_next(st.counters);
        for (int& c : c_next) ++c;
        for_each_ball_point(m.state_axes, y, kbuf,
                            [&](const std::vector<long>& ks) {
          SymbolicState nxt{.grid_k = ks, .counters = c_next};
          entries.emplace_back(static_cast<std::uint32_t>(m.encode_state(nxt)),
                               StepKind::Flow);
        });
      }

      /* every nonempty subset of the admissible jumpers may fire */
      for (std::uint32_t mask = 1; mask < (1u << jumpers.size()); ++mask) {
        Vec target = x;
        std::vector<int> c_next(st.counters);
        for (std::size_t b = 0; b < jumpers.size(); ++b) {
          if (!(mask & (1u << b))) continue;
          std::size_t i = static_cast<std::size_t>(jumpers[b]);
          Vec g = model::evaluate_dynamics(network.subsystems[i].jump,
                                           block_of(x, x_off, i),
                                           internal_of(x, i),
                                           block_of(u, u_off, i));
          std::copy(g.begin(), g.end(), target.begin() + x_off[i]);
          c_next[i] = 0;
        }
        for_each_ball_point(m.state_axes, target, kbuf,
                            [&](const std::vector<long>& ks) {
          SymbolicState nxt{.grid_k = ks, .counters = c_next};
          entries.emplace_back(static_cast<std::uint32_t>(m.encode_state(nxt)),
                               StepKind::Jump);
        });
      }

      /* deterministic order: flow block first, then jumps sorted */
      auto jump_begin = std::partition_point(
          entries.begin(), entries.end(),
          [](const auto& e) { return e.second == StepKind::Flow; });
      std::sort(jump_begin, entries.end());
      for (const auto& [t, k] : entries) {
        row.succ.push_back(t);
        row.kind.push_back(k);
      }
      row.counts[ui] = static_cast<std::uint32_t>(entries.size());
    }
  });

  m.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return m;
}

}  // namespace

SymbolicModel build_symbolic_subsystem(const ImpulsiveSubsystem& sub,
                                       const AbstractionConfig& config) {
  return build_subsystem_impl(sub, config, true);
}

SymbolicModel build_symbolic_subsystem_serial(const ImpulsiveSubsystem& sub,
                                              const AbstractionConfig& config) {
  return build_subsystem_impl(sub, config, false);
}

SymbolicModel build_monolithic(const NetworkModel& network,
                               const AbstractionConfig& config) {
  return build_monolithic_impl(network, config, true);
}

SymbolicModel build_monolithic_serial(const NetworkModel& network,
                                      const AbstractionConfig& config) {
  return build_monolithic_impl(network, config, false);
}

}  // namespace impsym::abstraction
