#include "impsym/composition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace impsym::composition {

namespace {

constexpr double kGridTol = 1e-9;

}  // namespace

std::uint64_t ComposedModel::num_states() const {
  std::uint64_t n = 1;
  for (const SymbolicModel* m : components) n *= m->num_states();
  return n;
}

std::uint64_t ComposedModel::num_inputs() const {
  std::uint64_t n = 1;
  for (const SymbolicModel* m : components) n *= m->num_external();
  return n;
}

std::vector<std::uint64_t> ComposedModel::decode_state(std::uint64_t s) const {
  std::vector<std::uint64_t> comp(components.size());
  for (std::size_t i = components.size(); i-- > 0;) {
    std::uint64_t card = components[i]->num_states();
    comp[i] = s % card;
    s /= card;
  }
  return comp;
}

std::uint64_t ComposedModel::encode_state(
    const std::vector<std::uint64_t>& comp) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < components.size(); ++i)
    s = s * components[i]->num_states() + comp[i];
  return s;
}

std::vector<std::size_t> ComposedModel::decode_input(std::uint64_t u) const {
  std::vector<std::size_t> comp(components.size());
  for (std::size_t i = components.size(); i-- > 0;) {
    std::uint64_t card = components[i]->num_external();
    comp[i] = static_cast<std::size_t>(u % card);
    u /= card;
  }
  return comp;
}

std::uint64_t ComposedModel::encode_input(
    const std::vector<std::size_t>& comp) const {
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < components.size(); ++i)
    u = u * components[i]->num_external() + comp[i];
  return u;
}

std::vector<std::size_t> ComposedModel::admissible_internal_inputs(
    int i, const std::vector<std::uint64_t>& comp_states) const {
  const SymbolicModel& m = *components[i];
  const std::size_t nax = m.internal_axes.size();
  if (nax == 0) return {0};  // no internal input: the single empty tuple

  /* per-axis multiplier windows around the neighbours' abstract outputs */
  std::vector<long> lo(nax), hi(nax);
  for (const InternalBlock& blk : internal_blocks[i]) {
    Vec xj = components[blk.source]->state_point(comp_states[blk.source]);
    Vec y = blk.map->eval(xj);
    for (std::size_t r = 0; r < blk.len; ++r) {
      const abstraction::AxisGrid& ax = m.internal_axes[blk.axis_offset + r];
      long a = std::max(ax.k_lo, static_cast<long>(std::ceil(
                                     (y[r] - blk.phi) / ax.eta - kGridTol)));
      long b = std::min(ax.k_hi, static_cast<long>(std::floor(
                                     (y[r] + blk.phi) / ax.eta + kGridTol)));
      if (a > b) return {};
      lo[blk.axis_offset + r] = a;
      hi[blk.axis_offset + r] = b;
    }
  }

  /* lattice indices are mixed-radix over the axes, axis 0 most significant */
  std::vector<std::size_t> card(nax), base(nax);
  std::size_t radix = 1;
  for (std::size_t a = nax; a-- > 0;) {
    base[a] = radix;
    card[a] = m.internal_axes[a].count();
    radix *= card[a];
  }
  std::vector<std::size_t> out;
  std::vector<long> k(lo);
  while (true) {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < nax; ++a)
      idx += static_cast<std::size_t>(k[a] - m.internal_axes[a].k_lo) * base[a];
    out.push_back(idx);
    std::size_t a = nax;
    while (true) {
      if (a == 0) return out;
      --a;
      if (k[a] < hi[a]) {
        ++k[a];
        break;
      }
      k[a] = lo[a];
    }
  }
}

std::vector<std::uint32_t> ComposedModel::component_successors(
    int i, const std::vector<std::uint64_t>& comp_states,
    std::size_t u_i) const {
  const SymbolicModel& m = *components[i];
  std::vector<std::uint32_t> out;
  for (std::size_t w : admissible_internal_inputs(i, comp_states)) {
    auto sp = m.successors(comp_states[i], w, u_i);
    out.insert(out.end(), sp.begin(), sp.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint64_t> ComposedModel::successors(std::uint64_t s,
                                                     std::uint64_t u) const {
  const std::size_t n = components.size();
  std::vector<std::uint64_t> comp = decode_state(s);
  std::vector<std::size_t> uc = decode_input(u);
  std::vector<std::vector<std::uint32_t>> per(n);
  for (std::size_t i = 0; i < n; ++i) {
    per[i] = component_successors(static_cast<int>(i), comp, uc[i]);
    if (per[i].empty()) return {};
  }
  /* product, lexicographic over components = ascending composed index */
  std::vector<std::uint64_t> out;
  std::vector<std::size_t> idx(n, 0);
  std::vector<std::uint64_t> pick(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) pick[i] = per[i][idx[i]];
    out.push_back(encode_state(pick));
    std::size_t i = n;
    while (true) {
      if (i == 0) return out;
      --i;
      if (++idx[i] < per[i].size()) break;
      idx[i] = 0;
    }
  }
}

Vec ComposedModel::output(std::uint64_t s) const {
  std::vector<std::uint64_t> comp = decode_state(s);
  Vec y;
  for (std::size_t i = 0; i < components.size(); ++i) {
    Vec yi = components[i]->output(comp[i]);
    y.insert(y.end(), yi.begin(), yi.end());
  }
  return y;
}

std::vector<std::uint64_t> ComposedModel::initial_states() const {
  const std::size_t n = components.size();
  /* per component: states with counter zero, i.e. grid index * (z_max+1) */
  std::vector<std::uint64_t> zcard(n), grids(n);
  for (std::size_t i = 0; i < n; ++i) {
    zcard[i] = components[i]->timings[0].z_max + 1;
    grids[i] = components[i]->num_grid_points();
  }
  std::vector<std::uint64_t> out;
  std::vector<std::uint64_t> g(n, 0), pick(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) pick[i] = g[i] * zcard[i];
    out.push_back(encode_state(pick));
    std::size_t i = n;
    while (true) {
      if (i == 0) return out;
      --i;
      if (++g[i] < grids[i]) break;
      g[i] = 0;
    }
  }
}

std::uint64_t ComposedModel::count_reachable() const {
  const std::uint64_t ns = num_states();
  if (ns > UINT64_C(100'000'000))
    throw std::runtime_error("count_reachable: composed model too large");
  std::vector<char> seen(ns, 0);
  std::deque<std::uint64_t> queue;
  std::uint64_t count = 0;
  for (std::uint64_t s : initial_states()) {
    seen[s] = 1;
    ++count;
    queue.push_back(s);
  }
  const std::uint64_t nu = num_inputs();
  while (!queue.empty()) {
    std::uint64_t s = queue.front();
    queue.pop_front();
    for (std::uint64_t u = 0; u < nu; ++u)
      for (std::uint64_t t : successors(s, u))
        if (!seen[t]) {
          seen[t] = 1;
          ++count;
          queue.push_back(t);
        }
  }
  return count;
}

ComposedModel compose(const std::vector<const SymbolicModel*>& models,
                      const NetworkModel& network,
                      const CompositionConfig& config) {
  if (models.size() != network.size())
    throw std::invalid_argument("compose: one model per subsystem required");
  if (models.empty()) throw std::invalid_argument("compose: empty network");

  ComposedModel cm;
  cm.network = &network;
  cm.components = models;
  cm.internal_blocks.resize(models.size());

  double tau = models[0]->tau;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const SymbolicModel& m = *models[i];
    if (m.tau != tau)
      throw std::invalid_argument("compose: components must share tau");
    if (m.timings.size() != 1)
      throw std::invalid_argument("compose: components must be subsystem models");
    std::size_t off = 0;
    for (int j : network.sources_of(static_cast<int>(i))) {
      const model::AffineMap& h =
          network.subsystems[j].output_blocks.at(static_cast<int>(i));
      std::size_t len = h.d.size();
      if (off + len > m.internal_axes.size())
        throw std::invalid_argument(
            "compose: internal lattice narrower than the incoming blocks");
      ComposedModel::InternalBlock blk;
      blk.source = j;
      blk.map = &h;
      blk.axis_offset = off;
      blk.len = len;
      auto it = config.phi.find({j, static_cast<int>(i)});
      blk.phi = it != config.phi.end() ? it->second : m.internal_axes[off].eta;
      if (blk.phi < 0.0)
        throw std::invalid_argument("compose: negative mismatch bound");
      cm.internal_blocks[i].push_back(blk);
      off += len;
    }
    if (off != m.internal_axes.size())
      throw std::invalid_argument(
          "compose: internal lattice wider than the incoming blocks");
  }
  for (const auto& [edge, phi] : config.phi) {
    (void)phi;
    if (!network.has_edge(edge.first, edge.second))
      throw std::invalid_argument("compose: mismatch bound on a missing edge");
  }
  return cm;
}

EagerComposedTable materialize(const ComposedModel& m) {
  EagerComposedTable t;
  const std::uint64_t ns = m.num_states();
  const std::uint64_t nu = m.num_inputs();
  if (ns * nu > UINT64_C(50'000'000))
    throw std::runtime_error("materialize: composed model too large");
  t.offsets.reserve(ns * nu + 1);
  t.offsets.push_back(0);
  for (std::uint64_t s = 0; s < ns; ++s)
    for (std::uint64_t u = 0; u < nu; ++u) {
      std::vector<std::uint64_t> sc = m.successors(s, u);
      t.succ.insert(t.succ.end(), sc.begin(), sc.end());
      t.offsets.push_back(t.succ.size());
    }
  return t;
}

}  // namespace impsym::composition
