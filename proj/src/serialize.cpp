#include "impsym/serialize.hpp"

#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace impsym::serialize {

namespace {

constexpr std::uint32_t kMagic = 0x4d595349;  // "ISYM"
constexpr std::uint32_t kVersion = 1;

struct Writer {
  std::string out;

  template <typename T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void i64(std::int64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void vec(const Vec& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void mat(const Mat& m) {
    u64(m.rows);
    u64(m.cols);
    for (double x : m.a) f64(x);
  }
};

struct Reader {
  const std::string* bytes;
  std::size_t pos = 0;

  template <typename T>
  T pod() {
    if (pos + sizeof(T) > bytes->size())
      throw std::runtime_error("model file truncated");
    T v;
    std::memcpy(&v, bytes->data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }
  double f64() { return pod<double>(); }
  Vec vec() {
    Vec v(u64());
    for (double& x : v) x = f64();
    return v;
  }
  Mat mat() {
    Mat m;
    m.rows = u64();
    m.cols = u64();
    m.a.resize(m.rows * m.cols);
    for (double& x : m.a) x = f64();
    return m;
  }
};

}  // namespace

std::string model_to_bytes(const abstraction::SymbolicModel& m) {
  Writer w;
  w.u32(kMagic);
  w.u32(kVersion);
  w.f64(m.tau);
  w.u64(m.state_axes.size());
  for (const auto& ax : m.state_axes) {
    w.f64(ax.eta);
    w.i64(ax.k_lo);
    w.i64(ax.k_hi);
  }
  w.u64(m.block_dims.size());
  for (std::size_t d : m.block_dims) w.u64(d);
  w.u64(m.timings.size());
  for (const auto& t : m.timings) {
    w.f64(t.tau);
    w.i64(t.z_min);
    w.i64(t.z_max);
    w.vec(t.explicit_jumps);
  }
  w.u64(m.external_outputs.size());
  for (const auto& h : m.external_outputs) {
    w.mat(h.C);
    w.vec(h.d);
  }
  w.u64(m.internal_axes.size());
  for (const auto& ax : m.internal_axes) {
    w.f64(ax.eta);
    w.i64(ax.k_lo);
    w.i64(ax.k_hi);
  }
  w.u64(m.internal_inputs.size());
  for (const auto& v : m.internal_inputs) w.vec(v);
  w.u64(m.external_inputs.size());
  for (const auto& v : m.external_inputs) w.vec(v);
  w.u64(m.offsets.size());
  for (std::uint64_t v : m.offsets) w.u64(v);
  w.u64(m.succ.size());
  for (std::uint32_t v : m.succ) w.u32(v);
  for (abstraction::StepKind k : m.kind)
    w.out.push_back(static_cast<char>(k));
  w.u64(m.blocking_states.size());
  for (std::uint64_t v : m.blocking_states) w.u64(v);
  w.u32(m.capped ? 1 : 0);
  return std::move(w.out);
}

abstraction::SymbolicModel model_from_bytes(const std::string& bytes) {
  Reader r{&bytes};
  if (r.u32() != kMagic) throw std::runtime_error("not a symbolic model file");
  if (r.u32() != kVersion)
    throw std::runtime_error("unsupported model file version");
  abstraction::SymbolicModel m;
  m.tau = r.f64();
  m.state_axes.resize(r.u64());
  for (auto& ax : m.state_axes) {
    ax.eta = r.f64();
    ax.k_lo = static_cast<long>(r.i64());
    ax.k_hi = static_cast<long>(r.i64());
  }
  m.block_dims.resize(r.u64());
  for (auto& d : m.block_dims) d = static_cast<std::size_t>(r.u64());
  m.timings.resize(r.u64());
  for (auto& t : m.timings) {
    t.tau = r.f64();
    t.z_min = static_cast<int>(r.i64());
    t.z_max = static_cast<int>(r.i64());
    t.explicit_jumps = r.vec();
  }
  m.external_outputs.resize(r.u64());
  for (auto& h : m.external_outputs) {
    h.C = r.mat();
    h.d = r.vec();
  }
  m.internal_axes.resize(r.u64());
  for (auto& ax : m.internal_axes) {
    ax.eta = r.f64();
    ax.k_lo = static_cast<long>(r.i64());
    ax.k_hi = static_cast<long>(r.i64());
  }
  m.internal_inputs.resize(r.u64());
  for (auto& v : m.internal_inputs) v = r.vec();
  m.external_inputs.resize(r.u64());
  for (auto& v : m.external_inputs) v = r.vec();
  m.offsets.resize(r.u64());
  for (auto& v : m.offsets) v = r.u64();
  m.succ.resize(r.u64());
  for (auto& v : m.succ) v = r.u32();
  m.kind.resize(m.succ.size());
  for (auto& k : m.kind) k = static_cast<abstraction::StepKind>(r.pod<char>());
  m.blocking_states.resize(r.u64());
  for (auto& v : m.blocking_states) v = r.u64();
  m.capped = r.u32() != 0;
  return m;
}

void save_model(const abstraction::SymbolicModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  std::string bytes = model_to_bytes(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

abstraction::SymbolicModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_bytes(ss.str());
}

void write_transitions_csv(const abstraction::SymbolicModel& m,
                           std::ostream& out) {
  out << "state,w,u,kind,target\n";
  const std::size_t nw = m.num_internal(), nu = m.num_external();
  for (std::uint64_t s = 0; s < m.num_states(); ++s)
    for (std::size_t w = 0; w < nw; ++w)
      for (std::size_t u = 0; u < nu; ++u) {
        auto sp = m.successors(s, w, u);
        auto kp = m.successor_kinds(s, w, u);
        for (std::size_t q = 0; q < sp.size(); ++q)
          out << s << ',' << w << ',' << u << ','
              << (kp[q] == abstraction::StepKind::Flow ? "flow" : "jump") << ','
              << sp[q] << '\n';
      }
}

void write_controller_csv(const composition::ComposedModel& model,
                          const synthesis::SafetyController& ctrl,
                          std::ostream& out) {
  out << "state,inputs\n";
  for (std::uint64_t s = 0; s < ctrl.winning.size(); ++s) {
    if (!ctrl.winning[s]) continue;
    out << s << ',';
    bool first = true;
    for (std::uint64_t bits = ctrl.policy[s]; bits;) {
      int u = __builtin_ctzll(bits);
      bits &= bits - 1;
      out << (first ? "" : " ") << u;
      first = false;
    }
    out << '\n';
  }
  (void)model;
}

void write_trajectory_csv(const runtime::Trajectory& traj, std::ostream& out) {
  const std::size_t n = traj.x0.size();
  out << "t,kind";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < traj.x0[i].size(); ++a)
      out << ",x" << i << '_' << a;
    out << ",c" << i;
  }
  for (std::size_t i = 0; i < n; ++i) out << ",u" << i;
  out << '\n';
  out.precision(12);
  for (const auto& step : traj.steps) {
    out << step.t << ',' << (step.is_jump ? "jump" : "flow");
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : step.x_before[i]) out << ',' << v;
      out << ',' << step.c_before[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      out << ',';
      for (std::size_t a = 0; a < step.u[i].size(); ++a)
        out << (a ? " " : "") << step.u[i][a];
    }
    out << '\n';
  }
  if (!traj.steps.empty()) {
    const auto& last = traj.steps.back();
    out << (last.is_jump ? last.t : last.t + 0.0) << ",end";
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : last.x_after[i]) out << ',' << v;
      out << ',' << last.c_after[i];
    }
    for (std::size_t i = 0; i < n; ++i) out << ',';
    out << '\n';
  }
}

void write_monitor_csv(const runtime::MonitorReport& rep, std::ostream& out) {
  if (rep.rows.empty()) return;
  const std::size_t n = rep.rows.front().s_local.size();
  out << "t,kind";
  for (std::size_t i = 0; i < n; ++i) out << ",S" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",lsf1_" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",lsmf2_" << i;
  out << ",sf1,sf2\n";
  out.precision(12);
  for (const auto& row : rep.rows) {
    out << row.t << ',' << (row.is_jump ? "jump" : "flow");
    for (double v : row.s_local) out << ',' << v;
    for (double v : row.lsf1_gap) out << ',' << v;
    for (double v : row.lsmf2_gap) out << ',' << v;
    out << ',' << row.sf1_gap << ',' << row.sf2_gap << '\n';
  }
}

void write_trajectory_gnuplot(const runtime::Trajectory& traj,
                              const std::string& csv_name, std::ostream& out) {
  const std::size_t n = traj.x0.size();
  out << "set datafile separator ','\n"
      << "set key outside\n"
      << "set xlabel 't [s]'\n"
      << "set ylabel 'x'\n"
      << "plot";
  std::size_t col = 3;  // after t and kind
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < traj.x0[i].size(); ++a, ++col)
      out << (col == 3 ? " " : ", ") << '\'' << csv_name << "' using 1:" << col
          << " with lines title 'x" << i << '_' << a << '\'';
    ++col;  // skip the counter column
  }
  out << '\n';
}

}  // namespace impsym::serialize
