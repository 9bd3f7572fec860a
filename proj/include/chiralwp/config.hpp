#pragma once

// Scenario configuration as JSON. Keys carry their units (A_MHz,
// field_V_per_m, width_t0, ...). Parsing rejects unknown keys and serializing
// writes every field back, so parse -> serialize -> parse is the identity.

#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace chiralwp {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MoleculeConfig {
  double A_MHz = 0.0;
  double B_MHz = 0.0;
  double C_MHz = 0.0;
  double mu_a_D = 0.0;
  double mu_b_D = 0.0;
  std::string mode = "out_of_plane";  // or "in_plane"
  double transition_a_D = 0.0;
  double transition_b_D = 0.0;
  double transition_c_D = 0.0;
  double omega_over_B = 0.0;
};

struct StaticConfig {
  double epsilon = 0.0;
  double E0_V_per_m = 0.0;
};

struct LevelPair {
  std::string from;
  std::string to;
};

struct ControlConfig {
  std::string name;
  std::string kind;          // "mw" or "ir"
  std::string polarization;  // x, y, z, sigma_plus, sigma_minus
  std::optional<LevelPair> target;  // resonance filter; absent = broadband
  std::optional<double> carrier_over_B;
};

struct EnvelopeConfig {
  std::string shape = "gaussian";  // or "flat_top"
  std::optional<double> center_t0;  // gaussian; absent = right after the previous pulse
  double width_t0 = 0.0;
  std::optional<double> start_t0;  // flat top; absent = right after the previous pulse
  double rise_t0 = 0.0;
  double hold_t0 = 0.0;
  double fall_t0 = 0.0;
};

struct PulseConfig {
  std::string name;
  std::string control;
  double field_V_per_m = 0.0;
  double phase_rad = 0.0;
  std::optional<double> carrier_over_B;  // overrides the control carrier
  std::optional<LevelPair> resonance;    // carrier = gap between two states "nu:J_KaKc:M"
  EnvelopeConfig envelope;
};

/// Sets the phase of `adjust_pulse` so that the Schrodinger-picture phase of
/// c(to)/c(from) equals target_rad at the center of `reference_pulse`.
struct PhaseLockConfig {
  std::string adjust_pulse;
  std::string reference_pulse;
  std::string from;
  std::string to;
  double target_rad = 0.0;
};

struct CalibrationConfig {
  std::string pulse;
  std::string objective;  // "population", "max_population" or "max_envelope"
  std::string selector;   // for the population objectives
  double target = 0.0;    // for "population"
  double width_min_t0 = 0.0;
  double width_max_t0 = 0.0;
  int scan_points = 24;
  double tolerance = 1e-4;
};

struct PropagationConfig {
  std::optional<double> t_final_t0;  // absent = end of the last pulse plus tail
  double tail_t0 = 0.0;
  double dt_t0 = 0.05;
  double sample_dt_t0 = 0.5;
  bool rwa = false;
  double rwa_dt_t0 = 0.5;
};

struct OutputConfig {
  std::vector<std::string> populations;
  std::string population_basis = "propagation";  // or "bare"
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  MoleculeConfig molecule;
  int Jmax = 1;
  std::optional<StaticConfig> static_field;
  std::string initial = "0:0_00:0";
  std::vector<ControlConfig> controls;
  std::vector<PulseConfig> pulses;
  std::optional<PhaseLockConfig> phase_lock;
  std::vector<CalibrationConfig> calibration;
  PropagationConfig propagation;
  OutputConfig outputs;

  int control_index(const std::string& name) const {
    for (std::size_t i = 0; i < controls.size(); ++i)
      if (controls[i].name == name) return static_cast<int>(i);
    throw ConfigError("unknown control '" + name + "'");
  }
  int pulse_index(const std::string& name) const {
    for (std::size_t i = 0; i < pulses.size(); ++i)
      if (pulses[i].name == name) return static_cast<int>(i);
    throw ConfigError("unknown pulse '" + name + "'");
  }
};

namespace detail {

// Reads keys from one JSON object and rejects any it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  T required(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
    return get<T>(key);
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return get<T>(key);
  }

  template <class T>
  T value(const std::string& key, T fallback) {
    auto v = optional<T>(key);
    return v ? *v : fallback;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

  const std::string& where() const { return where_; }

 private:
  template <class T>
  T get(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline LevelPair read_pair(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  LevelPair p{r.required<std::string>("from"), r.required<std::string>("to")};
  r.finish();
  return p;
}

inline json write_pair(const LevelPair& p) { return json{{"from", p.from}, {"to", p.to}}; }

}  // namespace detail

inline ScenarioConfig parse_config(const json& j) {
  using detail::ObjectReader;
  ScenarioConfig c;
  ObjectReader top(j, "config");
  c.name = top.value<std::string>("name", "");
  c.description = top.value<std::string>("description", "");
  c.Jmax = top.required<int>("Jmax");
  c.initial = top.value<std::string>("initial", c.initial);

  const json* mol = top.child("molecule");
  if (!mol) throw ConfigError("config: missing key 'molecule'");
  {
    ObjectReader r(*mol, "molecule");
    auto& m = c.molecule;
    m.A_MHz = r.required<double>("A_MHz");
    m.B_MHz = r.required<double>("B_MHz");
    m.C_MHz = r.required<double>("C_MHz");
    m.mu_a_D = r.required<double>("mu_a_D");
    m.mu_b_D = r.required<double>("mu_b_D");
    m.mode = r.required<std::string>("mode");
    m.transition_a_D = r.value<double>("transition_a_D", 0.0);
    m.transition_b_D = r.value<double>("transition_b_D", 0.0);
    m.transition_c_D = r.value<double>("transition_c_D", 0.0);
    m.omega_over_B = r.required<double>("omega_over_B");
    r.finish();
  }

  if (const json* s = top.child("static")) {
    ObjectReader r(*s, "static");
    c.static_field = StaticConfig{r.required<double>("epsilon"), r.required<double>("E0_V_per_m")};
    r.finish();
  }

  if (const json* cs = top.child("controls")) {
    if (!cs->is_array()) throw ConfigError("controls: expected an array");
    for (std::size_t i = 0; i < cs->size(); ++i) {
      ObjectReader r((*cs)[i], "controls[" + std::to_string(i) + "]");
      ControlConfig cc;
      cc.name = r.required<std::string>("name");
      cc.kind = r.required<std::string>("kind");
      cc.polarization = r.required<std::string>("polarization");
      if (const json* t = r.child("target")) cc.target = detail::read_pair(*t, r.where() + ".target");
      cc.carrier_over_B = r.optional<double>("carrier_over_B");
      r.finish();
      c.controls.push_back(std::move(cc));
    }
  }

  if (const json* ps = top.child("pulses")) {
    if (!ps->is_array()) throw ConfigError("pulses: expected an array");
    for (std::size_t i = 0; i < ps->size(); ++i) {
      ObjectReader r((*ps)[i], "pulses[" + std::to_string(i) + "]");
      PulseConfig p;
      p.name = r.required<std::string>("name");
      p.control = r.required<std::string>("control");
      p.field_V_per_m = r.required<double>("field_V_per_m");
      p.phase_rad = r.value<double>("phase_rad", 0.0);
      p.carrier_over_B = r.optional<double>("carrier_over_B");
      if (const json* t = r.child("resonance")) p.resonance = detail::read_pair(*t, r.where() + ".resonance");
      const json* e = r.child("envelope");
      if (!e) throw ConfigError(r.where() + ": missing key 'envelope'");
      ObjectReader er(*e, r.where() + ".envelope");
      p.envelope.shape = er.value<std::string>("shape", "gaussian");
      p.envelope.center_t0 = er.optional<double>("center_t0");
      p.envelope.width_t0 = er.value<double>("width_t0", 0.0);
      p.envelope.start_t0 = er.optional<double>("start_t0");
      p.envelope.rise_t0 = er.value<double>("rise_t0", 0.0);
      p.envelope.hold_t0 = er.value<double>("hold_t0", 0.0);
      p.envelope.fall_t0 = er.value<double>("fall_t0", 0.0);
      er.finish();
      r.finish();
      c.pulses.push_back(std::move(p));
    }
  }

  if (const json* pl = top.child("phase_lock")) {
    ObjectReader r(*pl, "phase_lock");
    c.phase_lock = PhaseLockConfig{r.required<std::string>("adjust_pulse"), r.required<std::string>("reference_pulse"),
                                   r.required<std::string>("from"), r.required<std::string>("to"),
                                   r.required<double>("target_rad")};
    r.finish();
  }

  if (const json* cal = top.child("calibration")) {
    if (!cal->is_array()) throw ConfigError("calibration: expected an array");
    for (std::size_t i = 0; i < cal->size(); ++i) {
      ObjectReader r((*cal)[i], "calibration[" + std::to_string(i) + "]");
      CalibrationConfig cc;
      cc.pulse = r.required<std::string>("pulse");
      cc.objective = r.required<std::string>("objective");
      cc.selector = r.value<std::string>("selector", "");
      cc.target = r.value<double>("target", 0.0);
      cc.width_min_t0 = r.required<double>("width_min_t0");
      cc.width_max_t0 = r.required<double>("width_max_t0");
      cc.scan_points = r.value<int>("scan_points", cc.scan_points);
      cc.tolerance = r.value<double>("tolerance", cc.tolerance);
      r.finish();
      c.calibration.push_back(std::move(cc));
    }
  }

  if (const json* pr = top.child("propagation")) {
    ObjectReader r(*pr, "propagation");
    auto& p = c.propagation;
    p.t_final_t0 = r.optional<double>("t_final_t0");
    p.tail_t0 = r.value<double>("tail_t0", p.tail_t0);
    p.dt_t0 = r.value<double>("dt_t0", p.dt_t0);
    p.sample_dt_t0 = r.value<double>("sample_dt_t0", p.sample_dt_t0);
    p.rwa = r.value<bool>("rwa", p.rwa);
    p.rwa_dt_t0 = r.value<double>("rwa_dt_t0", p.rwa_dt_t0);
    r.finish();
  }

  if (const json* out = top.child("outputs")) {
    ObjectReader r(*out, "outputs");
    c.outputs.populations = r.value<std::vector<std::string>>("populations", {});
    c.outputs.population_basis = r.value<std::string>("population_basis", c.outputs.population_basis);
    r.finish();
  }
  top.finish();
  return c;
}

inline json to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["Jmax"] = c.Jmax;
  j["initial"] = c.initial;
  const auto& m = c.molecule;
  j["molecule"] = {{"A_MHz", m.A_MHz},
                   {"B_MHz", m.B_MHz},
                   {"C_MHz", m.C_MHz},
                   {"mu_a_D", m.mu_a_D},
                   {"mu_b_D", m.mu_b_D},
                   {"mode", m.mode},
                   {"transition_a_D", m.transition_a_D},
                   {"transition_b_D", m.transition_b_D},
                   {"transition_c_D", m.transition_c_D},
                   {"omega_over_B", m.omega_over_B}};
  if (c.static_field)
    j["static"] = {{"epsilon", c.static_field->epsilon}, {"E0_V_per_m", c.static_field->E0_V_per_m}};
  j["controls"] = json::array();
  for (const auto& cc : c.controls) {
    json x{{"name", cc.name}, {"kind", cc.kind}, {"polarization", cc.polarization}};
    if (cc.target) x["target"] = detail::write_pair(*cc.target);
    if (cc.carrier_over_B) x["carrier_over_B"] = *cc.carrier_over_B;
    j["controls"].push_back(std::move(x));
  }
  j["pulses"] = json::array();
  for (const auto& p : c.pulses) {
    json x{{"name", p.name}, {"control", p.control}, {"field_V_per_m", p.field_V_per_m}, {"phase_rad", p.phase_rad}};
    if (p.carrier_over_B) x["carrier_over_B"] = *p.carrier_over_B;
    if (p.resonance) x["resonance"] = detail::write_pair(*p.resonance);
    json e{{"shape", p.envelope.shape}};
    if (p.envelope.shape == "gaussian") {
      if (p.envelope.center_t0) e["center_t0"] = *p.envelope.center_t0;
      e["width_t0"] = p.envelope.width_t0;
    } else {
      if (p.envelope.start_t0) e["start_t0"] = *p.envelope.start_t0;
      e["rise_t0"] = p.envelope.rise_t0;
      e["hold_t0"] = p.envelope.hold_t0;
      e["fall_t0"] = p.envelope.fall_t0;
    }
    x["envelope"] = std::move(e);
    j["pulses"].push_back(std::move(x));
  }
  if (c.phase_lock) {
    const auto& pl = *c.phase_lock;
    j["phase_lock"] = {{"adjust_pulse", pl.adjust_pulse}, {"reference_pulse", pl.reference_pulse},
                       {"from", pl.from}, {"to", pl.to}, {"target_rad", pl.target_rad}};
  }
  if (!c.calibration.empty()) {
    j["calibration"] = json::array();
    for (const auto& cc : c.calibration)
      j["calibration"].push_back({{"pulse", cc.pulse},
                                  {"objective", cc.objective},
                                  {"selector", cc.selector},
                                  {"target", cc.target},
                                  {"width_min_t0", cc.width_min_t0},
                                  {"width_max_t0", cc.width_max_t0},
                                  {"scan_points", cc.scan_points},
                                  {"tolerance", cc.tolerance}});
  }
  const auto& p = c.propagation;
  j["propagation"] = {{"tail_t0", p.tail_t0},         {"dt_t0", p.dt_t0}, {"sample_dt_t0", p.sample_dt_t0},
                      {"rwa", p.rwa},                 {"rwa_dt_t0", p.rwa_dt_t0}};
  if (p.t_final_t0) j["propagation"]["t_final_t0"] = *p.t_final_t0;
  j["outputs"] = {{"populations", c.outputs.populations}, {"population_basis", c.outputs.population_basis}};
  return j;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline std::string preset_dir() {
#ifdef CHIRALWP_PRESET_DIR
  return CHIRALWP_PRESET_DIR;
#else
  return "presets";
#endif
}

inline ScenarioConfig load_preset(const std::string& name) {
  for (char ch : name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'))
      throw ConfigError("preset names contain only letters, digits and '_': '" + name + "'");
  return load_config(preset_dir() + "/" + name + ".json");
}

}  // namespace chiralwp
