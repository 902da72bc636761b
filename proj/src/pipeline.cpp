#include "impsym/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace impsym::pipeline {

void validate_or_throw(const model::NetworkModel& network) {
  model::ValidationReport rep = model::validate_network(network);
  if (rep.ok()) return;
  std::ostringstream msg;
  for (std::size_t i = 0; i < rep.problems.size(); ++i)
    msg << (i ? "; " : "") << rep.problems[i];
  throw ValidationError(msg.str());
}

CertifiedNetwork certify(const model_io::ProblemConfig& cfg) {
  const auto& net = cfg.network;
  validate_or_throw(net);

  std::vector<double> phi = net.internal_variation_bound;
  if (phi.size() != net.size()) phi = model::estimate_variation_bounds(net);

  CertifiedNetwork out;
  std::ostringstream dwell_msg;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& sub = net.subsystems[i];
    certificates::CertificateParams cert =
        certificates::derive_affine_certificate(sub);
    cert.phi = phi[i];
    certificates::DwellReport dr = certificates::check_dwell_time(cert, sub.timing);
    if (!dr.holds)
      dwell_msg << (dwell_msg.tellp() > 0 ? "; " : "")
                << "subsystem " << sub.id << ": margins "
                << dr.margin_at_zmin << " / " << dr.margin_at_zmax;
    out.certs.push_back(cert);
    out.dwell.push_back(dr);
  }
  if (dwell_msg.tellp() > 0)
    throw DwellError("dwell-time condition fails: " + dwell_msg.str());

  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& sub = net.subsystems[i];
    certificates::AsfCase ac = certificates::select_asf_case(
        out.certs[i], sub.timing, cfg.asf.epsilon, cfg.asf.delta);
    /* inputs from a finite list enter the abstraction exactly */
    double eta_u = sub.external_inputs.finite ? 0.0 : cfg.abstraction.eta_u;
    out.cases.push_back(ac);
    out.locals.push_back(certificates::derive_local_asf(
        out.certs[i], ac, sub.timing, cfg.abstraction.eta_x,
        cfg.abstraction.eta_w, eta_u, cfg.asf.psi_lemma));
  }

  out.gamma = gains::build_gain_matrix(out.locals, net.edges);
  out.small_gain = gains::check_small_gain(out.gamma);
  if (!out.small_gain.holds) {
    std::ostringstream msg;
    msg << "small-gain condition fails on cycle (";
    for (std::size_t k = 0; k < out.small_gain.worst_cycle.size(); ++k)
      msg << (k ? " " : "") << out.small_gain.worst_cycle[k];
    msg << "), product " << out.small_gain.worst_product;
    throw SmallGainError(msg.str());
  }
  out.psi = gains::compute_scalings(out.gamma, cfg.asf.kappa_slack);
  out.composed = gains::compose_asf_params(out.locals, out.psi);

  double input_bound = 0.0;
  for (const auto& sub : net.subsystems) {
    if (sub.external_inputs.finite) {
      for (const auto& v : sub.external_inputs.values)
        input_bound = std::max(input_bound, inf_norm(v));
    } else {
      for (std::size_t a = 0; a < sub.external_inputs.box.dim(); ++a)
        input_bound = std::max(input_bound,
                               std::max(std::abs(sub.external_inputs.box.lo[a]),
                                        std::abs(sub.external_inputs.box.hi[a])));
    }
  }
  out.precision = certificates::precision_bound(out.composed, input_bound);
  return out;
}

std::vector<abstraction::SymbolicModel> build_components(
    const model_io::ProblemConfig& cfg, bool parallel) {
  std::vector<abstraction::SymbolicModel> models;
  for (const auto& sub : cfg.network.subsystems)
    models.push_back(parallel
                         ? abstraction::build_symbolic_subsystem(sub, cfg.abstraction)
                         : abstraction::build_symbolic_subsystem_serial(
                               sub, cfg.abstraction));
  return models;
}

SynthesisResult synthesize(const model_io::ProblemConfig& cfg,
                           const CertifiedNetwork& cert) {
  SynthesisResult res;
  res.components = build_components(cfg);
  for (const auto& c : res.components)
    if (c.capped)
      throw std::runtime_error("synthesize: component transition table capped");
  res.composed =
      composition::compose(res.component_ptrs(), cfg.network, cfg.composition);
  res.safe = cfg.shrink_by_precision
                 ? synthesis::shrink(cfg.safe, cert.precision.eps_hat)
                 : cfg.safe;
  res.controller = synthesis::solve_safety(res.composed, res.safe);
  if (res.controller.winning_count == 0)
    throw EmptyWinningSetError("safety game: the winning set is empty");
  return res;
}

RunResult simulate_and_monitor(const model_io::ProblemConfig& cfg,
                               const CertifiedNetwork& cert,
                               const SynthesisResult& syn,
                               const std::vector<Vec>& x0, double horizon,
                               long seed) {
  synthesis::ConcretePolicy policy = synthesis::refine_controller(
      syn.composed, syn.controller, cfg.network, cfg.abstraction.eta_x);

  auto rng = std::make_shared<std::mt19937_64>(
      seed < 0 ? 0 : static_cast<std::uint64_t>(seed));
  runtime::InputSelector selector =
      [&policy, rng, seed](const std::vector<Vec>& xs,
                           const std::vector<int>& counters)
      -> std::optional<std::vector<Vec>> {
    auto q = seed < 0 ? policy.select_lex(xs, counters)
                      : policy.select_random(xs, counters, *rng);
    if (!q) return std::nullopt;
    return q->u;
  };

  runtime::SimulationConfig sim;
  sim.horizon = horizon;
  sim.integrator_steps = cfg.abstraction.integrator_steps;

  RunResult out;
  out.trajectory = runtime::run_closed_loop(cfg.network, selector, x0, sim);
  out.monitor = runtime::monitor_relation(cfg.network, syn.component_ptrs(),
                                          cert.bundle(), out.trajectory);
  return out;
}

model_io::ProblemConfig replicate_ring(const model_io::ProblemConfig& base,
                                       int n) {
  const int b = static_cast<int>(base.network.size());
  if (b == 0) throw std::invalid_argument("replicate_ring: empty base");
  if (n < 1) throw std::invalid_argument("replicate_ring: need at least 1 node");
  /* the base must itself be a directed ring i -> i+1 mod b */
  if (static_cast<int>(base.network.edges.size()) != b)
    throw std::invalid_argument("replicate_ring: base is not a ring");
  for (int i = 0; i < b; ++i)
    if (!base.network.has_edge(i, (i + 1) % b))
      throw std::invalid_argument("replicate_ring: base is not a ring");

  model_io::ProblemConfig cfg = base;
  cfg.network.subsystems.clear();
  cfg.network.edges.clear();
  cfg.safe.boxes.clear();
  cfg.simulation.x0.clear();
  if (n == 1) {
    /* a ring of one would self-loop; drop the coupling instead */
    model::ImpulsiveSubsystem sub = base.network.subsystems[0];
    sub.id = 0;
    sub.flow.B = Mat(sub.flow.A.rows, 0);
    sub.jump.B = Mat(sub.jump.A.rows, 0);
    sub.internal_input_box = Box{};
    model::AffineMap ext = model::AffineMap::identity(sub.flow.A.rows);
    if (auto it = base.network.subsystems[0].output_blocks.find(0);
        it != base.network.subsystems[0].output_blocks.end())
      ext = it->second;
    sub.output_blocks.clear();
    sub.output_blocks[0] = ext;
    cfg.network.subsystems.push_back(std::move(sub));
    cfg.safe.boxes.push_back(base.safe.boxes.empty()
                                 ? base.network.subsystems[0].state_box
                                 : base.safe.boxes[0]);
    cfg.network.internal_variation_bound =
        model::estimate_variation_bounds(cfg.network);
    return cfg;
  }
  for (int i = 0; i < n; ++i) {
    const int j = i % b;
    model::ImpulsiveSubsystem sub = base.network.subsystems[j];
    model::ImpulsiveSubsystem out = sub;
    out.id = i;
    out.output_blocks.clear();
    if (auto it = sub.output_blocks.find(j); it != sub.output_blocks.end())
      out.output_blocks[i] = it->second;
    if (auto it = sub.output_blocks.find((j + 1) % b);
        it != sub.output_blocks.end())
      out.output_blocks[(i + 1) % n] = it->second;
    cfg.network.subsystems.push_back(std::move(out));
    cfg.network.edges.push_back({i, (i + 1) % n});
    cfg.safe.boxes.push_back(
        base.safe.boxes.empty() ? sub.state_box : base.safe.boxes[j]);
  }
  std::sort(cfg.network.edges.begin(), cfg.network.edges.end());
  cfg.network.internal_variation_bound =
      model::estimate_variation_bounds(cfg.network);
  return cfg;
}

std::vector<BenchmarkRecord> run_benchmark(const model_io::ProblemConfig& base,
                                           const std::vector<int>& sizes,
                                           int repeats) {
  using clock = std::chrono::steady_clock;
  std::vector<BenchmarkRecord> out;
  for (int n : sizes) {
    model_io::ProblemConfig cfg = replicate_ring(base, n);
    BenchmarkRecord rec;
    rec.n = n;
    rec.compositional_seconds = std::numeric_limits<double>::infinity();
    rec.monolithic_seconds = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, repeats); ++r) {
      auto t0 = clock::now();
      auto comps = build_components(cfg);
      double el = std::chrono::duration<double>(clock::now() - t0).count();
      rec.compositional_seconds = std::min(rec.compositional_seconds, el);
      rec.compositional_states = 0;
      rec.compositional_transitions = 0;
      for (const auto& c : comps) {
        rec.compositional_states += c.num_states();
        rec.compositional_transitions += c.num_transitions();
      }

      t0 = clock::now();
      abstraction::SymbolicModel mono =
          abstraction::build_monolithic(cfg.network, cfg.abstraction);
      el = std::chrono::duration<double>(clock::now() - t0).count();
      rec.monolithic_seconds = std::min(rec.monolithic_seconds, el);
      rec.monolithic_states = mono.num_states();
      rec.monolithic_transitions = mono.num_transitions();
      rec.monolithic_capped = mono.capped;
      if (mono.capped) break;  // repeated capped builds tell us nothing new
    }
    out.push_back(rec);
  }
  return out;
}

std::string benchmark_table(const std::vector<BenchmarkRecord>& records) {
  std::ostringstream out;
  out << "  N   compositional s   monolithic s   mono/comp   comp states   "
         "mono states   comp transitions   mono transitions\n";
  for (const auto& r : records) {
    out << std::setw(3) << r.n << "   " << std::setw(15) << std::fixed
        << std::setprecision(4) << r.compositional_seconds << "   ";
    if (r.monolithic_capped)
      out << std::setw(12) << "capped" << "   " << std::setw(9) << "-";
    else
      out << std::setw(12) << r.monolithic_seconds << "   " << std::setw(9)
          << std::setprecision(2)
          << r.monolithic_seconds / r.compositional_seconds;
    out << "   " << std::setw(11) << r.compositional_states << "   "
        << std::setw(11) << r.monolithic_states << "   " << std::setw(16)
        << r.compositional_transitions << "   " << std::setw(16)
        << r.monolithic_transitions << '\n';
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

}  // namespace impsym::pipeline
