#include "impsym/synthesis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace impsym::synthesis {

namespace {

constexpr double kTol = 1e-9;

std::vector<std::vector<std::size_t>> input_decode_table(
    const composition::ComposedModel& m) {
  std::vector<std::vector<std::size_t>> t(m.num_inputs());
  for (std::uint64_t u = 0; u < t.size(); ++u) t[u] = m.decode_input(u);
  return t;
}

/* admissible internal inputs depend on the source grid points only;
 * cache them per component under that key */
struct AdmissibleCache {
  const composition::ComposedModel* model;
  std::vector<std::uint64_t> zcard;  // per component
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> map;

  explicit AdmissibleCache(const composition::ComposedModel& m) : model(&m) {
    map.resize(m.components.size());
    for (const auto* c : m.components) zcard.push_back(c->timings[0].z_max + 1);
  }

  std::uint64_t key_of(int i, const std::vector<std::uint64_t>& comp) const {
    std::uint64_t key = 0;
    for (const auto& blk : model->internal_blocks[i]) {
      std::uint64_t g = comp[blk.source] / zcard[blk.source];
      key = key * model->components[blk.source]->num_grid_points() + g;
    }
    return key;
  }

  /* Fills every entry up front (the admissible sets depend on the source
   * grid points only), so lookups during the sweeps are read-only and
   * thread-safe. */
  void fill() {
    const std::size_t n = model->components.size();
    std::vector<std::uint64_t> comp(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& blocks = model->internal_blocks[i];
      std::vector<std::uint64_t> g(blocks.size(), 0);
      while (true) {
        for (std::size_t b = 0; b < blocks.size(); ++b)
          comp[blocks[b].source] = g[b] * zcard[blocks[b].source];
        std::uint64_t key = key_of(static_cast<int>(i), comp);
        map[i].emplace(key,
                       model->admissible_internal_inputs(static_cast<int>(i), comp));
        std::size_t b = blocks.size();
        bool done = blocks.empty();
        while (!done) {
          if (b == 0) {
            done = true;
            break;
          }
          --b;
          if (++g[b] <
              model->components[blocks[b].source]->num_grid_points())
            break;
          g[b] = 0;
        }
        if (done) break;
      }
    }
  }

  const std::vector<std::size_t>& get(int i,
                                      const std::vector<std::uint64_t>& comp) const {
    return map[i].at(key_of(i, comp));
  }
};

}  // namespace

SafeSet shrink(const SafeSet& safe, double margin) {
  SafeSet out = safe;
  for (Box& b : out.boxes)
    for (std::size_t a = 0; a < b.dim(); ++a) {
      b.lo[a] += margin;
      b.hi[a] -= margin;
      if (b.lo[a] > b.hi[a])
        throw std::runtime_error("shrink: margin empties the safe set");
    }
  return out;
}

SafetyController solve_safety(const composition::ComposedModel& model,
                              const SafeSet& safe) {
  const std::size_t n = model.components.size();
  if (safe.boxes.size() != n)
    throw std::invalid_argument("solve_safety: one safe box per subsystem");
  const std::uint64_t ns = model.num_states();
  const std::uint64_t nu = model.num_inputs();
  if (nu == 0 || nu > 64)
    throw std::invalid_argument("solve_safety: need 1..64 input tuples");

  /* per-component grid safety and per-(state, w, u) memo: transitions
   * exist / all targets grid-safe */
  std::vector<std::vector<char>> grid_safe(n);
  std::vector<std::vector<char>> ne(n), ss(n);
  std::vector<std::uint64_t> zcard(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = *model.components[i];
    zcard[i] = c.timings[0].z_max + 1;
    grid_safe[i].resize(c.num_grid_points());
    for (std::uint64_t g = 0; g < grid_safe[i].size(); ++g)
      grid_safe[i][g] = safe.boxes[i].contains(c.state_point(g * zcard[i]), kTol);
    const std::size_t nw = c.num_internal(), nuc = c.num_external();
    ne[i].resize(c.num_states() * nw * nuc);
    ss[i].resize(ne[i].size());
    for (std::uint64_t s = 0; s < c.num_states(); ++s)
      for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t u = 0; u < nuc; ++u) {
          auto sp = c.successors(s, w, u);
          std::uint64_t t = (s * nw + w) * nuc + u;
          ne[i][t] = !sp.empty();
          char all = 1;
          for (std::uint32_t q : sp)
            if (!grid_safe[i][q / zcard[i]]) {
              all = 0;
              break;
            }
          ss[i][t] = all;
        }
  }

  SafetyController ctrl;
  ctrl.winning.assign(ns, 0);
  ctrl.policy.assign(ns, 0);

  const auto udec = input_decode_table(model);
  AdmissibleCache cache(model);
  cache.fill();

  /* the initial set: every component grid-safe */
#pragma omp parallel for schedule(static)
  for (long long ss_ = 0; ss_ < static_cast<long long>(ns); ++ss_) {
    const std::uint64_t s = static_cast<std::uint64_t>(ss_);
    auto comp = model.decode_state(s);
    char ok = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!grid_safe[i][comp[i] / zcard[i]]) {
        ok = 0;
        break;
      }
    ctrl.winning[s] = ok;
  }

  /* sweep 1, factorized: with the initial set a product, a composed
   * successor set is nonempty and inside it iff every component union is */
  std::uint64_t removed = 0;
#pragma omp parallel for schedule(dynamic, 1024) reduction(+ : removed)
  for (long long ss_ = 0; ss_ < static_cast<long long>(ns); ++ss_) {
    const std::uint64_t s = static_cast<std::uint64_t>(ss_);
    if (!ctrl.winning[s]) continue;
    auto comp = model.decode_state(s);
    /* ok[i][u_i]: component i controllable-and-safe under local input u_i */
    std::vector<std::vector<char>> ok(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = *model.components[i];
      const std::size_t nw = c.num_internal(), nuc = c.num_external();
      const auto& adm = cache.get(static_cast<int>(i), comp);
      ok[i].assign(nuc, 0);
      if (adm.empty()) continue;
      for (std::size_t u = 0; u < nuc; ++u) {
        char some = 0, all = 1;
        for (std::size_t w : adm) {
          std::uint64_t t = (comp[i] * nw + w) * nuc + u;
          some |= ne[i][t];
          all &= ss[i][t];
        }
        ok[i][u] = some && all;
      }
    }
    std::uint64_t mask = 0;
    for (std::uint64_t u = 0; u < nu; ++u) {
      char good = 1;
      for (std::size_t i = 0; i < n; ++i)
        if (!ok[i][udec[u][i]]) {
          good = 0;
          break;
        }
      if (good) mask |= std::uint64_t{1} << u;
    }
    ctrl.policy[s] = mask;
    if (mask == 0) {
      ctrl.winning[s] = 0;
      ++removed;
    }
  }
  ctrl.iterations = 1;
  ctrl.removed_per_iteration.push_back(removed);

  /* later sweeps enumerate the composed successor products against the
   * previous iterate (Jacobi, deterministic) */
  std::vector<char> w_old;
  std::vector<std::uint64_t> p_old;
  while (removed > 0) {
    w_old = ctrl.winning;
    p_old = ctrl.policy;
    removed = 0;
#pragma omp parallel for schedule(dynamic, 1024) reduction(+ : removed)
    for (long long ss_ = 0; ss_ < static_cast<long long>(ns); ++ss_) {
      const std::uint64_t s = static_cast<std::uint64_t>(ss_);
      if (!w_old[s]) continue;
      std::vector<std::vector<std::uint32_t>> per(n);
      std::vector<std::size_t> idx(n);
      std::vector<std::uint64_t> pick(n);
      auto comp = model.decode_state(s);
      std::uint64_t mask = 0;
      for (std::uint64_t bits = p_old[s]; bits;) {
        std::uint64_t u = static_cast<std::uint64_t>(std::countr_zero(bits));
        bits &= bits - 1;
        char good = 1;
        for (std::size_t i = 0; i < n && good; ++i) {
          const auto& c = *model.components[i];
          const std::size_t nw = c.num_internal(), nuc = c.num_external();
          per[i].clear();
          for (std::size_t w : cache.get(static_cast<int>(i), comp)) {
            auto sp = c.successors(comp[i], w, udec[u][i]);
            per[i].insert(per[i].end(), sp.begin(), sp.end());
          }
          std::sort(per[i].begin(), per[i].end());
          per[i].erase(std::unique(per[i].begin(), per[i].end()), per[i].end());
          if (per[i].empty()) good = 0;
        }
        if (good) {
          std::fill(idx.begin(), idx.end(), 0);
          while (good) {
            for (std::size_t i = 0; i < n; ++i) pick[i] = per[i][idx[i]];
            if (!w_old[model.encode_state(pick)]) good = 0;
            std::size_t i = n;
            bool done = false;
            while (true) {
              if (i == 0) {
                done = true;
                break;
              }
              --i;
              if (++idx[i] < per[i].size()) break;
              idx[i] = 0;
            }
            if (done) break;
          }
        }
        if (good) mask |= std::uint64_t{1} << u;
      }
      ctrl.policy[s] = mask;
      if (mask == 0) {
        ctrl.winning[s] = 0;
        ++removed;
      }
    }
    ++ctrl.iterations;
    ctrl.removed_per_iteration.push_back(removed);
  }

  for (std::uint64_t s = 0; s < ns; ++s)
    if (ctrl.winning[s]) ++ctrl.winning_count;
  return ctrl;
}

SafetyController solve_safety(const abstraction::SymbolicModel& model,
                              const SafeSet& safe) {
  if (model.capped)
    throw std::runtime_error("solve_safety: transition table was capped");
  if (safe.boxes.size() != model.block_dims.size())
    throw std::invalid_argument("solve_safety: one safe box per block");
  const std::uint64_t ns = model.num_states();
  const std::size_t nw = model.num_internal();
  const std::size_t nu = model.num_external();
  if (nu == 0 || nu > 64)
    throw std::invalid_argument("solve_safety: need 1..64 input tuples");

  SafetyController ctrl;
  ctrl.winning.assign(ns, 0);
  ctrl.policy.assign(ns, 0);
  for (std::uint64_t s = 0; s < ns; ++s) {
    Vec x = model.state_point(s);
    char ok = 1;
    std::size_t off = 0;
    for (std::size_t b = 0; b < model.block_dims.size(); ++b) {
      Vec xb(x.begin() + off, x.begin() + off + model.block_dims[b]);
      if (!safe.boxes[b].contains(xb, kTol)) {
        ok = 0;
        break;
      }
      off += model.block_dims[b];
    }
    ctrl.winning[s] = ok;
  }

  std::vector<char> w_old;
  std::uint64_t removed = 1;
  while (removed > 0) {
    w_old = ctrl.winning;
    removed = 0;
    for (std::uint64_t s = 0; s < ns; ++s) {
      if (!w_old[s]) continue;
      std::uint64_t mask = 0;
      for (std::size_t u = 0; u < nu; ++u) {
        char some = 0, all = 1;
        for (std::size_t w = 0; w < nw && all; ++w) {
          auto sp = model.successors(s, w, u);
          some |= !sp.empty();
          for (std::uint32_t t : sp)
            if (!w_old[t]) {
              all = 0;
              break;
            }
        }
        if (some && all) mask |= std::uint64_t{1} << u;
      }
      ctrl.policy[s] = mask;
      if (mask == 0) {
        ctrl.winning[s] = 0;
        ++removed;
      }
    }
    ++ctrl.iterations;
    ctrl.removed_per_iteration.push_back(removed);
  }

  for (std::uint64_t s = 0; s < ns; ++s)
    if (ctrl.winning[s]) ++ctrl.winning_count;
  return ctrl;
}

std::optional<std::uint64_t> ConcretePolicy::locate(
    const std::vector<Vec>& xs, const std::vector<int>& counters) const {
  const std::size_t n = model->components.size();
  if (xs.size() != n || counters.size() != n)
    throw std::invalid_argument("locate: one state and counter per subsystem");
  std::vector<std::uint64_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = *model->components[i];
    const auto& q = quantizers[i];
    if (!q.box.contains(xs[i], kTol)) return std::nullopt;
    if (counters[i] < 0 || counters[i] > c.timings[0].z_max)
      throw std::invalid_argument("locate: counter out of range");
    std::uint64_t g = 0;
    for (std::size_t a = 0; a < q.axes.size(); ++a) {
      const auto& ax = q.axes[a];
      long k = static_cast<long>(std::ceil(xs[i][a] / ax.eta - 0.5));
      k = std::clamp(k, ax.k_lo, ax.k_hi);
      g = g * ax.count() + static_cast<std::uint64_t>(k - ax.k_lo);
    }
    comp[i] = g * (c.timings[0].z_max + 1) +
              static_cast<std::uint64_t>(counters[i]);
  }
  return model->encode_state(comp);
}

namespace {

PolicyQuery make_query(const composition::ComposedModel& model,
                       std::uint64_t s, std::uint64_t u) {
  PolicyQuery q;
  q.state = s;
  q.input = u;
  q.input_idx = model.decode_input(u);
  for (std::size_t i = 0; i < model.components.size(); ++i)
    q.u.push_back(model.components[i]->external_inputs[q.input_idx[i]]);
  return q;
}

}  // namespace

std::optional<PolicyQuery> ConcretePolicy::select_lex(
    const std::vector<Vec>& xs, const std::vector<int>& counters) const {
  auto s = locate(xs, counters);
  if (!s || !controller->winning[*s]) return std::nullopt;
  std::uint64_t mask = controller->policy[*s];
  if (mask == 0) return std::nullopt;
  return make_query(*model, *s,
                    static_cast<std::uint64_t>(std::countr_zero(mask)));
}

std::optional<PolicyQuery> ConcretePolicy::select_random(
    const std::vector<Vec>& xs, const std::vector<int>& counters,
    std::mt19937_64& rng) const {
  auto s = locate(xs, counters);
  if (!s || !controller->winning[*s]) return std::nullopt;
  std::uint64_t mask = controller->policy[*s];
  if (mask == 0) return std::nullopt;
  std::vector<int> bits;
  for (std::uint64_t m = mask; m;) {
    bits.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  std::uniform_int_distribution<std::size_t> pick(0, bits.size() - 1);
  return make_query(*model, *s, static_cast<std::uint64_t>(bits[pick(rng)]));
}

ConcretePolicy refine_controller(const composition::ComposedModel& model,
                                 const SafetyController& controller,
                                 const model::NetworkModel& network,
                                 double eta_x) {
  ConcretePolicy p;
  p.model = &model;
  p.controller = &controller;
  for (std::size_t i = 0; i < network.size(); ++i) {
    abstraction::Quantizer q =
        abstraction::make_quantizer(network.subsystems[i].state_box, eta_x);
    if (q.axes != model.components[i]->state_axes)
      throw std::invalid_argument(
          "refine_controller: quantizer disagrees with the component lattice");
    p.quantizers.push_back(std::move(q));
  }
  return p;
}

}  // namespace impsym::synthesis
