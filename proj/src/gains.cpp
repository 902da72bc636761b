#include "impsym/gains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace impsym::gains {

GainMatrix build_gain_matrix(const std::vector<LocalAsfParams>& locals,
                             const std::vector<Edge>& edges, GainForm form) {
  GainMatrix g;
  g.n = static_cast<int>(locals.size());
  g.gamma.assign(static_cast<std::size_t>(g.n) * g.n, 0.0);
  for (int i = 0; i < g.n; ++i) g.at(i, i) = locals[i].sigma;
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= g.n || e.to < 0 || e.to >= g.n || e.from == e.to)
      throw std::invalid_argument("build_gain_matrix: bad edge");
    if (locals[e.from].alpha <= 0.0)
      throw std::invalid_argument("build_gain_matrix: alpha coefficient is zero");
    double rho = form == GainForm::Additive ? locals[e.to].rho_w_bar
                                            : locals[e.to].rho_w;
    g.at(e.to, e.from) = rho / locals[e.from].alpha;
  }
  return g;
}

namespace {

struct LogEdge {
  int from;  // source subsystem j
  int to;    // target subsystem i
  double w;  // ln gamma[i][j]
};

std::vector<LogEdge> off_diagonal_log_edges(const GainMatrix& g) {
  std::vector<LogEdge> edges;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && g.at(i, j) > 0.0)
        edges.push_back({j, i, std::log(g.at(i, j))});
  return edges;
}

/* Bellman-Ford on the negated log graph; a negative (or zero) cycle
 * there is a cycle with gain product >= 1. Returns the witness cycle,
 * empty if none. */
std::vector<int> find_violating_cycle(const GainMatrix& g) {
  const auto edges = off_diagonal_log_edges(g);
  const int n = g.n;
  std::vector<double> dist(n, 0.0);
  std::vector<int> parent(n, -1);
  int touched = -1;
  for (int it = 0; it < n; ++it) {
    touched = -1;
    for (const LogEdge& e : edges) {
      double cand = dist[e.from] - e.w;  // negated weight
      if (cand < dist[e.to] - 1e-15) {
        dist[e.to] = cand;
        parent[e.to] = e.from;
        touched = e.to;
      }
    }
    if (touched < 0) break;
  }
  if (touched >= 0) {
    /* walk back n steps to land inside the cycle, then collect it */
    int v = touched;
    for (int k = 0; k < n; ++k) v = parent[v];
    std::vector<int> cycle;
    int u = v;
    do {
      cycle.push_back(u);
      u = parent[u];
    } while (u != v);
    std::reverse(cycle.begin(), cycle.end());
    return cycle;
  }
  /* no strictly-positive cycle; look for a product-exactly-one cycle on
   * the tight edges */
  std::vector<std::vector<int>> tight(n);
  for (const LogEdge& e : edges)
    if (std::abs(dist[e.from] - e.w - dist[e.to]) <= 1e-12)
      tight[e.from].push_back(e.to);
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<int> stack, cyc;
  for (int s = 0; s < n && cyc.empty(); ++s) {
    if (state[s]) continue;
    std::vector<std::pair<int, std::size_t>> dfs{{s, 0}};
    state[s] = 1;
    stack = {s};
    while (!dfs.empty() && cyc.empty()) {
      auto& [v, idx] = dfs.back();
      if (idx < tight[v].size()) {
        int nxt = tight[v][idx++];
        if (state[nxt] == 1) {
          auto it = std::find(stack.begin(), stack.end(), nxt);
          cyc.assign(it, stack.end());
        } else if (state[nxt] == 0) {
          state[nxt] = 1;
          stack.push_back(nxt);
          dfs.push_back({nxt, 0});
        }
      } else {
        state[v] = 2;
        stack.pop_back();
        dfs.pop_back();
      }
    }
  }
  return cyc;
}

double cycle_product(const GainMatrix& g, const std::vector<int>& cycle) {
  double p = 1.0;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    int j = cycle[k];
    int i = cycle[(k + 1) % cycle.size()];
    p *= g.at(i, j);
  }
  return p;
}

/* Exhaustive simple-cycle enumeration (start index is the cycle
 * minimum, so each cycle is produced once, in canonical order). */
void enumerate_cycles(const GainMatrix& g, int start, std::vector<int>& path,
                      std::vector<char>& on_path, double product,
                      std::vector<int>& best, double& best_product) {
  int v = path.back();
  for (int nxt = start; nxt < g.n; ++nxt) {
    double gain = g.at(nxt, v);  // edge v -> nxt
    if (nxt == v || gain <= 0.0) continue;
    if (nxt == start) {
      double p = product * gain;
      if (best.empty() || p > best_product ||
          (p == best_product && path < best)) {
        best = path;
        best_product = p;
      }
      continue;
    }
    if (on_path[nxt]) continue;
    on_path[nxt] = 1;
    path.push_back(nxt);
    enumerate_cycles(g, start, path, on_path, product * gain, best,
                     best_product);
    path.pop_back();
    on_path[nxt] = 0;
  }
}

constexpr int kEnumerationLimit = 12;

}  // namespace

SmallGainReport check_small_gain(const GainMatrix& g) {
  SmallGainReport rep;

  /* length-1 cycles first */
  std::vector<int> bad_diag;
  for (int i = 0; i < g.n; ++i)
    if (g.at(i, i) >= 1.0) bad_diag.push_back(i);

  std::vector<int> witness = find_violating_cycle(g);
  rep.holds = bad_diag.empty() && witness.empty();

  if (g.n <= kEnumerationLimit) {
    /* exact worst cycle */
    rep.worst_exact = true;
    std::vector<int> best;
    double best_product = 0.0;
    for (int i = 0; i < g.n; ++i) {
      if (g.at(i, i) > best_product) {
        best_product = g.at(i, i);
        best = {i};
      }
    }
    std::vector<int> best_loop;
    double best_loop_product = 0.0;
    for (int s = 0; s < g.n; ++s) {
      std::vector<int> path{s};
      std::vector<char> on_path(g.n, 0);
      on_path[s] = 1;
      enumerate_cycles(g, s, path, on_path, 1.0, best, best_product);
      enumerate_cycles(g, s, path, on_path, 1.0, best_loop, best_loop_product);
    }
    rep.worst_cycle = best;
    rep.worst_product = best_product;
    rep.worst_loop = best_loop;
    rep.worst_loop_product = best_loop_product;
    /* the two routes must agree */
    if (rep.holds != (best.empty() || best_product < 1.0))
      throw std::logic_error("check_small_gain: detector routes disagree");
  } else if (!rep.holds) {
    rep.worst_cycle = bad_diag.empty() ? witness : std::vector<int>{bad_diag[0]};
    rep.worst_product = cycle_product(g, rep.worst_cycle);
  }
  return rep;
}

ScalingVector compute_scalings(const GainMatrix& g, double kappa_slack) {
  SmallGainReport sg = check_small_gain(g);
  if (!sg.holds) {
    std::ostringstream msg;
    msg << "compute_scalings: small-gain condition fails on cycle (";
    for (std::size_t k = 0; k < sg.worst_cycle.size(); ++k)
      msg << (k ? " " : "") << sg.worst_cycle[k];
    msg << "), product " << sg.worst_product;
    throw std::runtime_error(msg.str());
  }
  if (!(kappa_slack > 0.0 && kappa_slack < 1.0))
    throw std::invalid_argument("compute_scalings: bad slack factor");

  /* difference constraints p_j - p_i <= ln(1-kappa) - ln gamma[i][j],
   * solved by Bellman-Ford from an implicit zero source */
  const int n = g.n;
  const double slack_log = std::log(1.0 - kappa_slack);
  const auto edges = off_diagonal_log_edges(g);
  std::vector<double> p(n, 0.0);
  for (int it = 0; it < n + 1; ++it) {
    bool changed = false;
    for (const LogEdge& e : edges) {
      double cand = p[e.to] + slack_log - e.w;  // bound on p[e.from]
      if (cand < p[e.from] - 1e-15) {
        p[e.from] = cand;
        changed = true;
      }
    }
    if (!changed) break;
    if (it == n)
      throw std::runtime_error(
          "compute_scalings: infeasible at the chosen slack factor");
  }

  ScalingVector sv;
  sv.psi.resize(n);
  double pmin = *std::min_element(p.begin(), p.end());
  for (int i = 0; i < n; ++i) sv.psi[i] = std::exp(p[i] - pmin);

  for (const LogEdge& e : edges)
    if (!(g.at(e.to, e.from) * sv.psi[e.from] < sv.psi[e.to]))
      throw std::logic_error("compute_scalings: produced vector fails check");
  return sv;
}

double compose_asf_value(const std::vector<double>& locals,
                         const ScalingVector& psi) {
  if (locals.size() != psi.psi.size())
    throw std::invalid_argument("compose_asf_value: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < locals.size(); ++i)
    m = std::max(m, locals[i] / psi.psi[i]);
  return m;
}

certificates::ComposedAsfParams compose_asf_params(
    const std::vector<LocalAsfParams>& locals, const ScalingVector& psi) {
  certificates::ComposedAsfParams c;
  c.alpha_tilde = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < locals.size(); ++i) {
    c.alpha_tilde = std::min(c.alpha_tilde, locals[i].alpha / psi.psi[i]);
    c.sigma_tilde = std::max(c.sigma_tilde, locals[i].sigma);
    c.rho_u_tilde = std::max(c.rho_u_tilde, locals[i].rho_u / psi.psi[i]);
    c.eps_tilde = std::max(c.eps_tilde, locals[i].eps / psi.psi[i]);
  }
  return c;
}

}  // namespace impsym::gains
