#include "impsym/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace impsym::model_io {

namespace {

using nlohmann::json;

Mat parse_mat(const json& j) {
  Mat m;
  m.rows = j.size();
  m.cols = m.rows ? j.at(0).size() : 0;
  for (const auto& row : j) {
    if (row.size() != m.cols)
      throw std::invalid_argument("matrix rows have unequal lengths");
    for (const auto& v : row) m.a.push_back(v.get<double>());
  }
  return m;
}

Vec parse_vec(const json& j) { return j.get<Vec>(); }

Box parse_box(const json& j) {
  Box b;
  b.lo = parse_vec(j.at("lo"));
  b.hi = parse_vec(j.at("hi"));
  return b;
}

model::AffineDynamics parse_dynamics(const json& j) {
  model::AffineDynamics d;
  d.A = parse_mat(j.at("A"));
  d.B = j.contains("B") ? parse_mat(j.at("B")) : Mat(d.A.rows, 0);
  d.D = j.contains("D") ? parse_mat(j.at("D")) : Mat(d.A.rows, 0);
  d.bias = j.contains("bias") ? parse_vec(j.at("bias")) : Vec(d.A.rows, 0.0);
  return d;
}

model::AffineMap parse_output(const json& j, std::size_t n) {
  if (j.is_string() && j.get<std::string>() == "identity")
    return model::AffineMap::identity(n);
  model::AffineMap m;
  m.C = parse_mat(j.at("C"));
  m.d = j.contains("d") ? parse_vec(j.at("d")) : Vec(m.C.rows, 0.0);
  return m;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json box_to_json(const Box& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

json dynamics_to_json(const model::AffineDynamics& d) {
  json j{{"A", mat_to_json(d.A)}};
  if (d.B.cols) j["B"] = mat_to_json(d.B);
  if (d.D.cols) j["D"] = mat_to_json(d.D);
  bool nz = false;
  for (double v : d.bias) nz = nz || v != 0.0;
  if (nz) j["bias"] = d.bias;
  return j;
}

}  // namespace

ProblemConfig parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("problem file is not valid JSON: ") +
                                e.what());
  }

  ProblemConfig cfg;
  cfg.network.name = j.value("name", "");
  const double tau = j.at("tau").get<double>();

  const json& q = j.at("quantization");
  cfg.abstraction.eta_x = q.at("eta_x").get<double>();
  cfg.abstraction.eta_w = q.value("eta_w", cfg.abstraction.eta_x);
  cfg.abstraction.eta_u = q.value("eta_u", 0.0);
  cfg.abstraction.integrator_steps = q.value("integrator_steps", 32);
  cfg.abstraction.max_transitions =
      q.value("max_transitions", cfg.abstraction.max_transitions);

  if (j.contains("asf")) {
    const json& a = j.at("asf");
    cfg.asf.epsilon = a.value("epsilon", cfg.asf.epsilon);
    cfg.asf.delta = a.value("delta", cfg.asf.delta);
    cfg.asf.psi_lemma = a.value("psi_lemma", cfg.asf.psi_lemma);
    cfg.asf.kappa_slack = a.value("kappa_slack", cfg.asf.kappa_slack);
  }

  for (const json& js : j.at("subsystems")) {
    model::ImpulsiveSubsystem sub;
    sub.id = js.at("id").get<int>();
    sub.flow = parse_dynamics(js.at("flow"));
    sub.jump = parse_dynamics(js.at("jump"));
    sub.state_dim = static_cast<int>(sub.flow.state_dim());
    sub.state_box = parse_box(js.at("state_box"));
    const json& ext = js.at("external_inputs");
    if (ext.contains("values")) {
      sub.external_inputs.finite = true;
      for (const auto& v : ext.at("values"))
        sub.external_inputs.values.push_back(parse_vec(v));
    } else {
      sub.external_inputs.finite = false;
      sub.external_inputs.box = parse_box(ext.at("box"));
    }
    if (js.contains("internal_input_box"))
      sub.internal_input_box = parse_box(js.at("internal_input_box"));
    sub.timing.tau = tau;
    const json& t = js.at("timing");
    sub.timing.z_min = t.at("z_min").get<int>();
    sub.timing.z_max = t.at("z_max").get<int>();
    if (t.contains("jump_times"))
      sub.timing.explicit_jumps = t.at("jump_times").get<std::vector<double>>();
    if (js.contains("outputs"))
      for (const auto& [key, val] : js.at("outputs").items())
        sub.output_blocks[std::stoi(key)] =
            parse_output(val, static_cast<std::size_t>(sub.state_dim));
    cfg.network.subsystems.push_back(std::move(sub));
  }

  for (const json& je : j.at("edges")) {
    model::Edge e;
    e.from = je.at(0).get<int>();
    e.to = je.at(1).get<int>();
    cfg.network.edges.push_back(e);
  }

  if (j.contains("safe")) {
    const json& s = j.at("safe");
    if (s.contains("boxes"))
      for (const auto& b : s.at("boxes")) cfg.safe.boxes.push_back(parse_box(b));
    cfg.shrink_by_precision = s.value("shrink_by_precision", false);
  }
  if (cfg.safe.boxes.empty())
    for (const auto& sub : cfg.network.subsystems)
      cfg.safe.boxes.push_back(sub.state_box);

  if (j.contains("phi"))
    for (const auto& [key, val] : j.at("phi").items()) {
      auto comma = key.find(',');
      if (comma == std::string::npos)
        throw std::invalid_argument("phi keys must be \"from,to\"");
      cfg.composition.phi[{std::stoi(key.substr(0, comma)),
                           std::stoi(key.substr(comma + 1))}] =
          val.get<double>();
    }

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    cfg.simulation.horizon = s.value("horizon", 0.0);
    if (s.contains("x0"))
      for (const auto& v : s.at("x0"))
        cfg.simulation.x0.push_back(parse_vec(v));
  }

  cfg.network.internal_variation_bound =
      model::estimate_variation_bounds(cfg.network);
  return cfg;
}

ProblemConfig load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string problem_to_json(const ProblemConfig& cfg) {
  json j;
  if (!cfg.network.name.empty()) j["name"] = cfg.network.name;
  j["tau"] = cfg.network.subsystems.empty()
                 ? 0.0
                 : cfg.network.subsystems[0].timing.tau;
  j["quantization"] = {{"eta_x", cfg.abstraction.eta_x},
                       {"eta_w", cfg.abstraction.eta_w},
                       {"eta_u", cfg.abstraction.eta_u},
                       {"integrator_steps", cfg.abstraction.integrator_steps},
                       {"max_transitions", cfg.abstraction.max_transitions}};
  j["asf"] = {{"epsilon", cfg.asf.epsilon},
              {"delta", cfg.asf.delta},
              {"psi_lemma", cfg.asf.psi_lemma},
              {"kappa_slack", cfg.asf.kappa_slack}};
  j["subsystems"] = json::array();
  for (const auto& sub : cfg.network.subsystems) {
    json js{{"id", sub.id},
            {"flow", dynamics_to_json(sub.flow)},
            {"jump", dynamics_to_json(sub.jump)},
            {"state_box", box_to_json(sub.state_box)}};
    if (sub.external_inputs.finite) {
      json vals = json::array();
      for (const auto& v : sub.external_inputs.values) vals.push_back(v);
      js["external_inputs"] = {{"values", vals}};
    } else {
      js["external_inputs"] = {{"box", box_to_json(sub.external_inputs.box)}};
    }
    if (sub.internal_input_box.dim())
      js["internal_input_box"] = box_to_json(sub.internal_input_box);
    json t{{"z_min", sub.timing.z_min}, {"z_max", sub.timing.z_max}};
    if (!sub.timing.explicit_jumps.empty())
      t["jump_times"] = sub.timing.explicit_jumps;
    js["timing"] = t;
    if (!sub.output_blocks.empty()) {
      json outs;
      for (const auto& [to, h] : sub.output_blocks) {
        if (h == model::AffineMap::identity(h.d.size()))
          outs[std::to_string(to)] = "identity";
        else
          outs[std::to_string(to)] = {{"C", mat_to_json(h.C)}, {"d", h.d}};
      }
      js["outputs"] = outs;
    }
    j["subsystems"].push_back(js);
  }
  j["edges"] = json::array();
  for (const auto& e : cfg.network.edges)
    j["edges"].push_back(json::array({e.from, e.to}));
  json boxes = json::array();
  for (const auto& b : cfg.safe.boxes) boxes.push_back(box_to_json(b));
  j["safe"] = {{"boxes", boxes},
               {"shrink_by_precision", cfg.shrink_by_precision}};
  if (!cfg.composition.phi.empty()) {
    json phi;
    for (const auto& [e, v] : cfg.composition.phi)
      phi[std::to_string(e.first) + "," + std::to_string(e.second)] = v;
    j["phi"] = phi;
  }
  if (cfg.simulation.horizon > 0.0 || !cfg.simulation.x0.empty()) {
    json s{{"horizon", cfg.simulation.horizon}};
    if (!cfg.simulation.x0.empty()) {
      json xs = json::array();
      for (const auto& v : cfg.simulation.x0) xs.push_back(v);
      s["x0"] = xs;
    }
    j["simulation"] = s;
  }
  return j.dump(2) + "\n";
}

}  // namespace impsym::model_io
