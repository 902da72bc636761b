#include "impsym/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace impsym::model {

Vec evaluate_dynamics(const AffineDynamics& dyn, const Vec& x, const Vec& w,
                      const Vec& u) {
  if (x.size() != dyn.A.cols || w.size() != dyn.B.cols ||
      u.size() != dyn.D.cols || dyn.bias.size() != dyn.A.rows)
    throw std::invalid_argument("evaluate_dynamics: dimension mismatch");
  Vec y = dyn.bias;
  for (std::size_t i = 0; i < dyn.A.rows; ++i) {
    double s = y[i];
    for (std::size_t j = 0; j < dyn.A.cols; ++j) s += dyn.A(i, j) * x[j];
    for (std::size_t j = 0; j < dyn.B.cols; ++j) s += dyn.B(i, j) * w[j];
    for (std::size_t j = 0; j < dyn.D.cols; ++j) s += dyn.D(i, j) * u[j];
    y[i] = s;
  }
  return y;
}

JumpWindow jump_window(int c, const JumpTiming& timing) {
  if (c < 0 || c > timing.z_max)
    throw std::invalid_argument("jump_window: counter out of [0, z_max]");
  return JumpWindow{
      .flow_allowed = c <= timing.z_max - 1,
      .jump_allowed = c >= timing.z_min,
  };
}

std::vector<int> NetworkModel::sources_of(int i) const {
  std::vector<int> src;
  for (const Edge& e : edges)
    if (e.to == i) src.push_back(e.from);
  std::sort(src.begin(), src.end());
  src.erase(std::unique(src.begin(), src.end()), src.end());
  return src;
}

bool NetworkModel::has_edge(int from, int to) const {
  return std::find(edges.begin(), edges.end(), Edge{from, to}) != edges.end();
}

std::pair<std::size_t, std::size_t> NetworkModel::internal_block(
    int from, int to) const {
  std::size_t off = 0;
  for (int j : sources_of(to)) {
    std::size_t len = 0;
    auto it = subsystems[j].output_blocks.find(to);
    if (it != subsystems[j].output_blocks.end()) len = it->second.C.rows;
    if (j == from) return {off, len};
    off += len;
  }
  throw std::invalid_argument("internal_block: no such edge");
}

Box affine_image_box(const AffineMap& map, const Box& box) {
  Box img;
  img.lo.assign(map.C.rows, 0.0);
  img.hi.assign(map.C.rows, 0.0);
  for (std::size_t i = 0; i < map.C.rows; ++i) {
    double lo = map.d[i];
    double hi = map.d[i];
    for (std::size_t j = 0; j < map.C.cols; ++j) {
      double c = map.C(i, j);
      lo += c * (c >= 0 ? box.lo[j] : box.hi[j]);
      hi += c * (c >= 0 ? box.hi[j] : box.lo[j]);
    }
    img.lo[i] = lo;
    img.hi[i] = hi;
  }
  return img;
}

namespace {

void check_subsystem(const NetworkModel& model, const ImpulsiveSubsystem& sub,
                     ValidationReport& rep) {
  std::ostringstream tag;
  tag << "subsystem " << sub.id << ": ";
  const std::size_t n = static_cast<std::size_t>(sub.state_dim);

  if (sub.state_dim <= 0)
    rep.problems.push_back(tag.str() + "nonpositive state dimension");
  if (sub.state_box.lo.size() != n || sub.state_box.hi.size() != n ||
      !sub.state_box.valid())
    rep.problems.push_back(tag.str() +
                           "state box empty or bounds not strictly ordered");
  if (sub.timing.tau <= 0.0)
    rep.problems.push_back(tag.str() + "tau must be positive");
  if (sub.timing.z_min < 1 || sub.timing.z_min > sub.timing.z_max)
    rep.problems.push_back(tag.str() + "need 1 <= z_min <= z_max");

  auto check_dyn = [&](const AffineDynamics& d, const char* which) {
    if (d.A.rows != n || d.A.cols != n || d.B.rows != n || d.D.rows != n ||
        d.bias.size() != n)
      rep.problems.push_back(tag.str() + which + std::string(" dynamics dimension mismatch"));
    if (d.B.cols != sub.internal_input_box.dim())
      rep.problems.push_back(tag.str() + which +
                             std::string(" internal-input gain width differs from W box"));
    if (d.D.cols != sub.external_inputs.dim())
      rep.problems.push_back(tag.str() + which +
                             std::string(" external-input gain width differs from U"));
  };
  check_dyn(sub.flow, "flow");
  check_dyn(sub.jump, "jump");

  /* h_{ij} must exist exactly for targets with an edge i -> j (plus the
   * external block h_{ii}). */
  for (const auto& [target, h] : sub.output_blocks) {
    if (h.C.cols != n)
      rep.problems.push_back(tag.str() + "output block has wrong input width");
    if (target != sub.id && !model.has_edge(sub.id, target))
      rep.problems.push_back(tag.str() +
                             "output block to a subsystem with no edge");
  }

  /* explicit jump instants, when present, must be consistent with the
   * counter semantics */
  const auto& jt = sub.timing.explicit_jumps;
  for (std::size_t k = 0; k < jt.size(); ++k) {
    double prev = k == 0 ? 0.0 : jt[k - 1];
    double gap = jt[k] - prev;
    double z = gap / sub.timing.tau;
    long zi = std::lround(z);
    if (std::abs(z - zi) > 1e-9 || zi < sub.timing.z_min ||
        zi > sub.timing.z_max) {
      rep.problems.push_back(tag.str() +
                             "explicit jump instants violate (tau, z_min, z_max)");
      break;
    }
  }
}

}  // namespace

ValidationReport validate_network(const NetworkModel& model) {
  ValidationReport rep;
  if (model.subsystems.empty()) {
    rep.problems.push_back("empty network");
    return rep;
  }
  const int n = static_cast<int>(model.size());

  for (const ImpulsiveSubsystem& sub : model.subsystems)
    check_subsystem(model, sub, rep);

  for (const Edge& e : model.edges) {
    std::ostringstream tag;
    tag << "edge (" << e.from << " -> " << e.to << "): ";
    if (e.from == e.to) {
      rep.problems.push_back(tag.str() + "self-edge not allowed");
      continue;
    }
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      rep.problems.push_back(tag.str() + "subsystem index out of range");
      continue;
    }
    const ImpulsiveSubsystem& src = model.subsystems[e.from];
    const ImpulsiveSubsystem& dst = model.subsystems[e.to];
    auto it = src.output_blocks.find(e.to);
    if (it == src.output_blocks.end()) {
      rep.problems.push_back(tag.str() + "source has no output block for target");
      continue;
    }
    auto [off, len] = model.internal_block(e.from, e.to);
    if (off + len > dst.internal_input_box.dim()) {
      rep.problems.push_back(tag.str() +
                             "internal input box too small for output block");
      continue;
    }
    /* containment Y_ji subset of the matching block of W_i */
    Box img = affine_image_box(it->second, src.state_box);
    for (std::size_t k = 0; k < len; ++k) {
      if (img.lo[k] < dst.internal_input_box.lo[off + k] - 1e-12 ||
          img.hi[k] > dst.internal_input_box.hi[off + k] + 1e-12) {
        rep.problems.push_back(tag.str() +
                               "output image box not contained in internal input block");
        break;
      }
    }
  }
  return rep;
}

std::vector<double> estimate_variation_bounds(const NetworkModel& model) {
  std::vector<double> phi(model.size(), 0.0);
  for (std::size_t i = 0; i < model.size(); ++i) {
    double bound = 0.0;
    for (int j : model.sources_of(static_cast<int>(i))) {
      const ImpulsiveSubsystem& src = model.subsystems[j];
      /* interval bound on |xdot_j| over the source's state box and input
       * ranges, scaled by the output block's row sums */
      double speed = 0.0;
      for (std::size_t r = 0; r < static_cast<std::size_t>(src.state_dim); ++r) {
        double s = std::abs(src.flow.bias[r]);
        for (std::size_t c = 0; c < src.flow.A.cols; ++c)
          s += std::abs(src.flow.A(r, c)) *
               std::max(std::abs(src.state_box.lo[c]), std::abs(src.state_box.hi[c]));
        for (std::size_t c = 0; c < src.flow.B.cols; ++c)
          s += std::abs(src.flow.B(r, c)) *
               std::max(std::abs(src.internal_input_box.lo[c]),
                        std::abs(src.internal_input_box.hi[c]));
        for (std::size_t c = 0; c < src.flow.D.cols; ++c) {
          double umax = 0.0;
          if (src.external_inputs.finite) {
            for (const Vec& u : src.external_inputs.values)
              umax = std::max(umax, std::abs(u[c]));
          } else {
            umax = std::max(std::abs(src.external_inputs.box.lo[c]),
                            std::abs(src.external_inputs.box.hi[c]));
          }
          s += std::abs(src.flow.D(r, c)) * umax;
        }
        speed = std::max(speed, s);
      }
      auto it = src.output_blocks.find(static_cast<int>(i));
      double gain = 0.0;
      if (it != src.output_blocks.end()) {
        for (std::size_t r = 0; r < it->second.C.rows; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < it->second.C.cols; ++c)
            s += std::abs(it->second.C(r, c));
          gain = std::max(gain, s);
        }
      }
      bound = std::max(bound, gain * speed * src.timing.tau);
    }
    phi[i] = bound;
  }
  return phi;
}

}  // namespace impsym::model
