#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace ofo {

Vector ScenarioConfig::initial_input() const {
  if (u0.size() > 0) return u0;
  Vector u(field.n_u());
  for (int i = 0; i < field.num_wells(); ++i) {
    u(2 * i) = 0.1;
    u(2 * i + 1) = 0.5;
  }
  return u;
}

double ScenarioConfig::cap_at(int t) const {
  if (schedule.empty()) throw ConfigError("availability schedule is empty");
  double cap = schedule.front().cap;
  for (const auto& step : schedule) {
    if (step.start > t) break;
    cap = step.cap;
  }
  return cap;
}

void ScenarioConfig::validate() const {
  field.validate();
  params.validate();
  noise.validate();
  if (steps <= 0) throw ConfigError("steps must be positive");
  if (!(sigma0 > 0)) throw ConfigError("estimator sigma0 must be positive");
  if (schedule.empty()) throw ConfigError("availability schedule is empty");
  if (schedule.front().start != 0) throw ConfigError("availability schedule must start at step 0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i].cap >= 0)) throw ConfigError("availability cap must be non-negative");
    if (i > 0 && schedule[i].start <= schedule[i - 1].start) {
      throw ConfigError("availability start steps must be strictly increasing");
    }
  }
  const Vector u = initial_input();
  if (u.size() != field.n_u()) {
    throw ConfigError("initial input has length " + std::to_string(u.size()) + ", expected " +
                      std::to_string(field.n_u()));
  }
  const PolyhedralSet set = availability_constraints(cap_at(0), field.num_wells());
  if (!set.contains(u)) throw ConfigError("initial input violates the step-0 constraints");
}

namespace {

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for " + where + "." + key);
  }
}

Vector read_vector(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + " must be a list");
  Vector v(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    try {
      v(static_cast<Eigen::Index>(i)) = node[i].as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError("bad number in " + where);
    }
  }
  return v;
}

void read_field(const YAML::Node& node, FieldModel& field) {
  check_keys(node, {"measurement_noise_std", "prices", "wells"}, "field");
  read(node, "measurement_noise_std", field.measurement_noise_std, "field");
  if (const auto p = node["prices"]) {
    check_keys(p, {"oil", "gas", "water", "injection"}, "field.prices");
    read(p, "oil", field.prices.p_o, "field.prices");
    read(p, "gas", field.prices.p_g, "field.prices");
    read(p, "water", field.prices.p_w, "field.prices");
    read(p, "injection", field.prices.p_inj, "field.prices");
  }
  if (const auto wells = node["wells"]) {
    if (!wells.IsSequence()) throw ConfigError("field.wells must be a list");
    field.wells.clear();
    for (std::size_t i = 0; i < wells.size(); ++i) {
      const std::string where = "field.wells[" + std::to_string(i) + "]";
      const auto w = wells[i];
      check_keys(w, {"a", "b", "c", "d", "norm", "r_g", "r_w"}, where);
      for (const char* key : {"a", "b", "c", "d", "r_g", "r_w"}) {
        if (!w[key]) throw ConfigError(where + " is missing '" + key + "'");
      }
      WellModel well;
      well.glpr.norm = 34.5;
      read(w, "a", well.glpr.log_gain, where);
      read(w, "b", well.glpr.saturation, where);
      read(w, "c", well.glpr.quad_loss, where);
      read(w, "d", well.glpr.choke_gain, where);
      read(w, "norm", well.glpr.norm, where);
      read(w, "r_g", well.r_g, where);
      read(w, "r_w", well.r_w, where);
      field.wells.push_back(well);
    }
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ScenarioConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  check_keys(root,
             {"variant", "steps", "seed", "controller", "estimator", "initial_input",
              "availability", "field"},
             "config");
  if (root["variant"]) cfg.variant = parse_variant(root["variant"].as<std::string>());
  read(root, "steps", cfg.steps, "config");
  read(root, "seed", cfg.seed, "config");

  if (const auto c = root["controller"]) {
    check_keys(c,
               {"alpha", "epsilon", "gamma", "s_lo", "s_hi", "sigma_noise", "fp_max_iter",
                "fp_tol"},
               "controller");
    auto& p = cfg.params;
    read(c, "alpha", p.alpha, "controller");
    read(c, "epsilon", p.epsilon, "controller");
    read(c, "gamma", p.gamma, "controller");
    read(c, "s_lo", p.s_lo, "controller");
    read(c, "s_hi", p.s_hi, "controller");
    read(c, "sigma_noise", p.sigma_noise, "controller");
    read(c, "fp_max_iter", p.fp_max_iter, "controller");
    read(c, "fp_tol", p.fp_tol, "controller");
  }
  if (const auto e = root["estimator"]) {
    check_keys(e, {"sigma_p1", "sigma_p2", "sigma_m1", "sigma_m2", "sigma_m3", "h0", "sigma0"},
               "estimator");
    auto& n = cfg.noise;
    read(e, "sigma_p1", n.sigma_p1, "estimator");
    read(e, "sigma_p2", n.sigma_p2, "estimator");
    read(e, "sigma_m1", n.sigma_m1, "estimator");
    read(e, "sigma_m2", n.sigma_m2, "estimator");
    read(e, "sigma_m3", n.sigma_m3, "estimator");
    read(e, "h0", cfg.h0, "estimator");
    read(e, "sigma0", cfg.sigma0, "estimator");
  }
  if (const auto f = root["field"]) read_field(f, cfg.field);

  if (const auto init = root["initial_input"]) {
    check_keys(init, {"per_well", "u"}, "initial_input");
    if (init["per_well"] && init["u"]) {
      throw ConfigError("initial_input takes either per_well or u, not both");
    }
    if (init["u"]) {
      cfg.u0 = read_vector(init["u"], "initial_input.u");
    } else if (init["per_well"]) {
      const Vector pw = read_vector(init["per_well"], "initial_input.per_well");
      if (pw.size() != 2) throw ConfigError("initial_input.per_well needs (q_inj, v)");
      cfg.u0.resize(cfg.field.n_u());
      for (int i = 0; i < cfg.field.num_wells(); ++i) cfg.u0.segment(2 * i, 2) = pw;
    }
  }
  if (const auto sched = root["availability"]) {
    if (!sched.IsSequence()) throw ConfigError("availability must be a list");
    cfg.schedule.clear();
    for (std::size_t i = 0; i < sched.size(); ++i) {
      const std::string where = "availability[" + std::to_string(i) + "]";
      check_keys(sched[i], {"start", "cap"}, where);
      if (!sched[i]["start"] || !sched[i]["cap"]) throw ConfigError(where + " needs start and cap");
      AvailabilityStep step;
      read(sched[i], "start", step.start, where);
      read(sched[i], "cap", step.cap, where);
      cfg.schedule.push_back(step);
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_yaml(const ScenarioConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "variant" << YAML::Value << std::string(to_string(cfg.variant));
  out << YAML::Key << "steps" << YAML::Value << cfg.steps;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  const auto& p = cfg.params;
  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha" << YAML::Value << p.alpha;
  out << YAML::Key << "epsilon" << YAML::Value << p.epsilon;
  out << YAML::Key << "gamma" << YAML::Value << p.gamma;
  out << YAML::Key << "s_lo" << YAML::Value << p.s_lo;
  out << YAML::Key << "s_hi" << YAML::Value << p.s_hi;
  out << YAML::Key << "sigma_noise" << YAML::Value << p.sigma_noise;
  out << YAML::Key << "fp_max_iter" << YAML::Value << p.fp_max_iter;
  out << YAML::Key << "fp_tol" << YAML::Value << p.fp_tol;
  out << YAML::EndMap;
  const auto& n = cfg.noise;
  out << YAML::Key << "estimator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sigma_p1" << YAML::Value << n.sigma_p1;
  out << YAML::Key << "sigma_p2" << YAML::Value << n.sigma_p2;
  out << YAML::Key << "sigma_m1" << YAML::Value << n.sigma_m1;
  out << YAML::Key << "sigma_m2" << YAML::Value << n.sigma_m2;
  out << YAML::Key << "sigma_m3" << YAML::Value << n.sigma_m3;
  out << YAML::Key << "h0" << YAML::Value << cfg.h0;
  out << YAML::Key << "sigma0" << YAML::Value << cfg.sigma0;
  out << YAML::EndMap;
  const Vector u = cfg.initial_input();
  out << YAML::Key << "initial_input" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "u" << YAML::Value << YAML::Flow
      << std::vector<double>(u.data(), u.data() + u.size());
  out << YAML::EndMap;
  out << YAML::Key << "availability" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : cfg.schedule) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "start" << YAML::Value << s.start
        << YAML::Key << "cap" << YAML::Value << s.cap << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "field" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "measurement_noise_std" << YAML::Value << cfg.field.measurement_noise_std;
  const auto& pr = cfg.field.prices;
  out << YAML::Key << "prices" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "oil" << YAML::Value << pr.p_o << YAML::Key << "gas" << YAML::Value << pr.p_g
      << YAML::Key << "water" << YAML::Value << pr.p_w << YAML::Key << "injection" << YAML::Value
      << pr.p_inj << YAML::EndMap;
  out << YAML::Key << "wells" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : cfg.field.wells) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "a" << YAML::Value << w.glpr.log_gain;
    out << YAML::Key << "b" << YAML::Value << w.glpr.saturation;
    out << YAML::Key << "c" << YAML::Value << w.glpr.quad_loss;
    out << YAML::Key << "d" << YAML::Value << w.glpr.choke_gain;
    out << YAML::Key << "norm" << YAML::Value << w.glpr.norm;
    out << YAML::Key << "r_g" << YAML::Value << w.r_g;
    out << YAML::Key << "r_w" << YAML::Value << w.r_w;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace ofo
