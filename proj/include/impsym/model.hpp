/*
 * model.hpp
 *
 * Impulsive subsystems, their interconnection topology and jump-time
 * schedules. A subsystem flows by an affine ODE between jump instants
 * and jumps by an affine difference map at those instants; jump instants
 * are spaced by {z_min*tau, ..., z_max*tau}.
 */

#ifndef IMPSYM_MODEL_HPP_
#define IMPSYM_MODEL_HPP_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "impsym/linalg.hpp"

namespace impsym::model {

/* Right-hand side A*x + B*w + D*u + bias. Used for both the flow field
 * and the jump map. */
struct AffineDynamics {
  Mat A;     // n x n
  Mat B;     // n x q, internal-input gain (q may be 0)
  Mat D;     // n x m, external-input gain (m may be 0)
  Vec bias;  // n

  std::size_t state_dim() const { return A.rows; }
  std::size_t internal_dim() const { return B.cols; }
  std::size_t external_dim() const { return D.cols; }

  bool operator==(const AffineDynamics&) const = default;
};

/* Evaluates A*x + B*w + D*u + bias; throws on dimension mismatch. */
Vec evaluate_dynamics(const AffineDynamics& dyn, const Vec& x, const Vec& w,
                      const Vec& u);

/* Affine output block y = C*x + d. Identity blocks leave C empty. */
struct AffineMap {
  Mat C;
  Vec d;

  static AffineMap identity(std::size_t n) {
    AffineMap m;
    m.C = Mat::identity(n);
    m.d = Vec(n, 0.0);
    return m;
  }

  Vec eval(const Vec& x) const {
    Vec y = matvec(C, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += d[i];
    return y;
  }

  bool operator==(const AffineMap&) const = default;
};

/* Sampling period and dwell-time counter bounds. The jump-instant set
 * Omega is carried implicitly by the counter semantics; an optional
 * explicit instant list (in seconds) is accepted for simulation. */
struct JumpTiming {
  double tau = 0.0;
  int z_min = 1;
  int z_max = 1;
  std::vector<double> explicit_jumps;  // optional, strictly increasing

  bool operator==(const JumpTiming&) const = default;
};

struct JumpWindow {
  bool flow_allowed;
  bool jump_allowed;
};

/* Flow is available for counters 0..z_max-1, jump for z_min..z_max.
 * Throws if c is outside [0, z_max]. */
JumpWindow jump_window(int c, const JumpTiming& timing);

/* External input set: either a finite list of values or a box to be
 * quantized with eta_u. */
struct ExternalInputSet {
  std::vector<Vec> values;  // used when finite
  Box box;                  // used otherwise
  bool finite = true;

  std::size_t dim() const {
    return finite ? (values.empty() ? 0 : values.front().size()) : box.dim();
  }
};

struct ImpulsiveSubsystem {
  int id = 0;
  int state_dim = 0;
  AffineDynamics flow;
  AffineDynamics jump;
  /* h_{i j}: the output block this subsystem sends to subsystem j.
   * The block keyed by the subsystem's own id is the external output. */
  std::map<int, AffineMap> output_blocks;
  Box state_box;
  ExternalInputSet external_inputs;
  /* Internal input box W_i, blocks flattened in ascending source order. */
  Box internal_input_box;
  JumpTiming timing;
};

/* Directed edge from -> to: subsystem `to` reads output block
 * h_{from,to} of subsystem `from`. */
struct Edge {
  int from = 0;
  int to = 0;

  auto operator<=>(const Edge&) const = default;
};

struct NetworkModel {
  std::string name;
  std::vector<ImpulsiveSubsystem> subsystems;
  std::vector<Edge> edges;
  /* Per-subsystem bound on intra-period internal-input variation. */
  std::vector<double> internal_variation_bound;

  std::size_t size() const { return subsystems.size(); }

  /* Sources feeding subsystem i, ascending (the block order of W_i). */
  std::vector<int> sources_of(int i) const;
  bool has_edge(int from, int to) const;

  /* Offset/length of the block of W_{to} fed by `from`. */
  std::pair<std::size_t, std::size_t> internal_block(int from, int to) const;
};

struct ValidationReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

/* Structural well-formedness: dimensions, box ordering, output-image
 * containment (Y_ji inside the matching block of W_i), no self-edges.
 * All findings are reported, nothing is thrown. */
ValidationReport validate_network(const NetworkModel& model);

/* Interval-arithmetic image box of an affine map over a box. */
Box affine_image_box(const AffineMap& map, const Box& box);

/* A-priori bound on the intra-period variation of each subsystem's
 * internal input: tau times the interval bound on the source states'
 * flow speed over their state boxes. */
std::vector<double> estimate_variation_bounds(const NetworkModel& model);

}  // namespace impsym::model

#endif  // IMPSYM_MODEL_HPP_
