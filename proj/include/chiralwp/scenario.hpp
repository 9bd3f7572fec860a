#pragma once

// A validated scenario: basis, controls, optional static field and resolved
// pulse schedule built from a ScenarioConfig, plus the runs the CLI needs
// (simulation, phase locking, width calibration).

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chiralwp/config.hpp"
#include "chiralwp/graph.hpp"
#include "chiralwp/propagator.hpp"
#include "chiralwp/symmetry.hpp"

namespace chiralwp {

class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline constexpr int kMaxJ = 8;

inline double wrap_angle(double x) { return std::remainder(x, 2.0 * std::numbers::pi); }

/// Index of the single basis state named by a fully specified selector.
inline int resolve_state(const RoVibBasis& basis, const std::string& text) {
  const auto sel = StateSelector::parse(text);
  if (sel.nu < 0 || !sel.level || !sel.M) throw ConfigError("state '" + text + "' must not contain wildcards");
  const int i = basis.find(sel.nu, sel.level->J, sel.level->Ka, sel.level->Kc, *sel.M);
  if (i < 0) throw ConfigError("state '" + text + "' is not in the basis");
  return i;
}

struct Scenario {
  ScenarioConfig cfg;
  RotationalConstants constants;
  DipoleSet dipoles;
  RoVibBasis basis;
  std::vector<ControlHamiltonian> controls;
  std::optional<DressingSpec> dressing;
  std::shared_ptr<const Propagator> propagator;
  int initial_index = 0;

  bool dressed() const { return dressing.has_value(); }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline void validate_config(const ScenarioConfig& c) {
  const auto& m = c.molecule;
  require(c.Jmax >= 0 && c.Jmax <= kMaxJ, "Jmax must lie in [0, " + std::to_string(kMaxJ) + "]");
  require(m.mode == "in_plane" || m.mode == "out_of_plane", "molecule.mode must be in_plane or out_of_plane");
  require(m.omega_over_B > 0.0, "molecule.omega_over_B must be > 0");
  if (c.static_field) {
    require(c.static_field->epsilon >= 0.0, "static.epsilon must be >= 0");
    require(c.static_field->E0_V_per_m > 0.0, "static.E0_V_per_m must be > 0");
  }
  std::set<std::string> names;
  for (const auto& cc : c.controls) {
    require(!cc.name.empty() && names.insert(cc.name).second, "control names must be unique and non-empty");
    require(cc.kind == "mw" || cc.kind == "ir", "control '" + cc.name + "': kind must be mw or ir");
    parse_polarization(cc.polarization);
    if (cc.target) {
      const auto a = LevelLabel::parse(cc.target->from), b = LevelLabel::parse(cc.target->to);
      require(a.J <= c.Jmax && b.J <= c.Jmax, "control '" + cc.name + "': target level above Jmax");
    }
    if (cc.carrier_over_B) require(*cc.carrier_over_B >= 0.0, "control '" + cc.name + "': negative carrier");
    if (cc.kind == "mw" && !cc.target)
      require(cc.carrier_over_B.has_value(), "control '" + cc.name + "': broadband microwave needs carrier_over_B");
  }
  names.clear();
  for (const auto& p : c.pulses) {
    require(!p.name.empty() && names.insert(p.name).second, "pulse names must be unique and non-empty");
    c.control_index(p.control);
    require(p.field_V_per_m >= 0.0, "pulse '" + p.name + "': field must be >= 0");
    require(!(p.carrier_over_B && p.resonance), "pulse '" + p.name + "': give carrier_over_B or resonance, not both");
    if (p.carrier_over_B) require(*p.carrier_over_B >= 0.0, "pulse '" + p.name + "': negative carrier");
    const auto& e = p.envelope;
    if (e.shape == "gaussian") {
      require(e.width_t0 > 0.0, "pulse '" + p.name + "': width_t0 must be > 0");
    } else if (e.shape == "flat_top") {
      require(e.rise_t0 >= 0.0 && e.hold_t0 >= 0.0 && e.fall_t0 >= 0.0 && e.rise_t0 + e.hold_t0 + e.fall_t0 > 0.0,
              "pulse '" + p.name + "': flat-top durations must be >= 0 with a positive total");
    } else {
      throw ConfigError("pulse '" + p.name + "': envelope shape must be gaussian or flat_top");
    }
  }
  if (c.phase_lock) {
    const int a = c.pulse_index(c.phase_lock->adjust_pulse);
    const int r = c.pulse_index(c.phase_lock->reference_pulse);
    require(a < r, "phase_lock: the adjusted pulse must come before the reference pulse");
  }
  for (const auto& cal : c.calibration) {
    const int k = c.pulse_index(cal.pulse);
    require(c.pulses[k].envelope.shape == "gaussian", "calibration: only gaussian widths can be calibrated");
    require(cal.objective == "population" || cal.objective == "max_population" || cal.objective == "max_envelope",
            "calibration: objective must be population, max_population or max_envelope");
    if (cal.objective != "max_envelope") StateSelector::parse(cal.selector);
    require(cal.width_min_t0 > 0.0 && cal.width_max_t0 > cal.width_min_t0, "calibration: bad width range");
    require(cal.scan_points >= 3, "calibration: scan_points must be >= 3");
    require(cal.tolerance > 0.0, "calibration: tolerance must be > 0");
  }
  const auto& p = c.propagation;
  require(p.dt_t0 > 0.0 && p.rwa_dt_t0 > 0.0, "propagation: time steps must be > 0");
  require(p.tail_t0 >= 0.0, "propagation: tail_t0 must be >= 0");
  if (p.t_final_t0) require(*p.t_final_t0 > 0.0, "propagation: t_final_t0 must be > 0");
  for (const auto& s : c.outputs.populations) StateSelector::parse(s);
  require(c.outputs.population_basis == "propagation" || c.outputs.population_basis == "bare",
          "outputs.population_basis must be propagation or bare");
}

}  // namespace detail

/// Validates the config against every module precondition and builds the scenario.
inline Scenario build_scenario(const ScenarioConfig& cfg) {
  detail::validate_config(cfg);
  Scenario s;
  s.cfg = cfg;
  const auto& m = cfg.molecule;
  s.constants = {m.A_MHz, m.B_MHz, m.C_MHz};
  s.constants.validate();
  s.dipoles.mu_a = m.mu_a_D;
  s.dipoles.mu_b = m.mu_b_D;
  s.dipoles.transition = {m.transition_a_D, m.transition_b_D, m.transition_c_D};
  s.dipoles.kind = m.mode == "in_plane" ? ModeKind::in_plane : ModeKind::out_of_plane;
  s.dipoles.validate();
  s.basis = build_basis(s.constants, cfg.Jmax, m.omega_over_B);
  for (const auto& cc : cfg.controls) {
    const Polarization pol = parse_polarization(cc.polarization);
    ControlHamiltonian h;
    if (cc.kind == "mw") {
      std::optional<std::pair<LevelLabel, LevelLabel>> target;
      if (cc.target) target = std::pair{LevelLabel::parse(cc.target->from), LevelLabel::parse(cc.target->to)};
      h = build_mw_hamiltonian(s.basis, s.dipoles, pol, target, cc.carrier_over_B);
    } else {
      std::optional<IrTarget> target;
      if (cc.target) target = IrTarget{LevelLabel::parse(cc.target->from), LevelLabel::parse(cc.target->to)};
      h = build_ir_hamiltonian(s.basis, s.dipoles, pol, target, cc.carrier_over_B);
    }
    h.name = cc.name;
    s.controls.push_back(std::move(h));
  }
  if (cfg.static_field && cfg.static_field->epsilon > 0.0)
    s.dressing = DressingSpec{static_unit_hamiltonian(s.basis, s.dipoles.permanent(), cfg.static_field->E0_V_per_m),
                              cfg.static_field->epsilon};
  s.propagator = std::make_shared<Propagator>(s.basis, s.controls, s.dressing);
  s.initial_index = resolve_state(s.basis, cfg.initial);
  for (const auto& p : cfg.pulses)
    if (p.resonance) {
      resolve_state(s.basis, p.resonance->from);
      resolve_state(s.basis, p.resonance->to);
    }
  if (cfg.phase_lock) {
    resolve_state(s.basis, cfg.phase_lock->from);
    resolve_state(s.basis, cfg.phase_lock->to);
  }
  for (const auto& cal : cfg.calibration)
    if (cal.objective != "max_envelope") StateSelector::parse(cal.selector);
  return s;
}

/// Pulse schedule with carriers and times filled in. Pulses without an
/// explicit time start where the previous one ends.
inline std::vector<PulseSpec> resolve_pulses(const Scenario& s) {
  std::vector<PulseSpec> out;
  double cursor = 0.0;
  const auto& E = s.propagator->energies();
  for (const auto& p : s.cfg.pulses) {
    PulseSpec q;
    q.name = p.name;
    q.control = s.cfg.control_index(p.control);
    q.field_V_per_m = p.field_V_per_m;
    q.phase = p.phase_rad;
    if (p.carrier_over_B)
      q.carrier = *p.carrier_over_B;
    else if (p.resonance)
      q.carrier = std::abs(E[resolve_state(s.basis, p.resonance->to)] - E[resolve_state(s.basis, p.resonance->from)]);
    else
      q.carrier = s.controls[q.control].carrier;
    const auto& e = p.envelope;
    if (e.shape == "gaussian") {
      q.envelope.shape = EnvelopeShape::gaussian;
      q.envelope.width = e.width_t0;
      q.envelope.center = e.center_t0.value_or(cursor + kGaussianCutoff * e.width_t0);
    } else {
      q.envelope.shape = EnvelopeShape::flat_top;
      q.envelope.start = e.start_t0.value_or(cursor);
      q.envelope.rise = e.rise_t0;
      q.envelope.hold = e.hold_t0;
      q.envelope.fall = e.fall_t0;
    }
    cursor = q.envelope.end();
    out.push_back(q);
  }
  return out;
}

inline double pulse_midpoint(const PulseSpec& p) {
  return p.envelope.shape == EnvelopeShape::gaussian ? p.envelope.center
                                                     : 0.5 * (p.envelope.begin() + p.envelope.end());
}

struct RunOverrides {
  std::optional<double> phase;        // replaces phase_lock.target_rad
  std::optional<bool> rwa;
  std::optional<double> sample_dt;
  double dt_scale = 1.0;
  int last_pulse = -1;                // >= 0: only pulses up to this one, ending with it
};

struct SimulationResult {
  std::vector<PulseSpec> pulses;
  PropagationOptions options;
  Trajectory trajectory;
  ElongationSeries elongation;
  std::optional<double> adjusted_phase;  // phase given to the locked pulse
};

namespace detail {

inline PropagationOptions base_options(const Scenario& s, const RunOverrides& o) {
  PropagationOptions opt;
  opt.dt = s.cfg.propagation.dt_t0;
  opt.rwa_dt = s.cfg.propagation.rwa_dt_t0;
  opt.rwa = o.rwa.value_or(s.cfg.propagation.rwa);
  opt.sample_dt = o.sample_dt.value_or(s.cfg.propagation.sample_dt_t0);
  opt.dt_scale = o.dt_scale;
  return opt;
}

/// Bare-basis initial state. In a static field the molecule starts in the
/// dressed state connected to the configured level (adiabatic switch-on).
inline Eigen::VectorXcd initial_state(const Scenario& s) {
  if (s.dressed()) return s.propagator->to_bare().col(s.initial_index).cast<cplx>();
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(s.basis.size());
  psi[s.initial_index] = 1.0;
  return psi;
}

}  // namespace detail

/// Phase for the locked pulse so that arg(c_to / c_from) equals `target` at
/// the center of the reference pulse. The phase enters the transferred
/// amplitude linearly with slope +1 or -1; two runs fix offset and slope.
inline double locked_phase(const Scenario& s, std::vector<PulseSpec> pulses, double target, const RunOverrides& o) {
  const auto& lock = *s.cfg.phase_lock;
  const int a = s.cfg.pulse_index(lock.adjust_pulse);
  const int r = s.cfg.pulse_index(lock.reference_pulse);
  const int from = resolve_state(s.basis, lock.from), to = resolve_state(s.basis, lock.to);
  std::vector<PulseSpec> pre(pulses.begin(), pulses.begin() + r);
  PropagationOptions opt = detail::base_options(s, o);
  opt.sample_dt = 0.0;
  opt.t_final = pulse_midpoint(pulses[r]);
  for (const auto& p : pre)
    if (p.envelope.end() > opt.t_final)
      throw ConfigError("phase_lock: pulse '" + p.name + "' is still on at the reference time");
  auto measure = [&](double phase) {
    pre[a].phase = phase;
    const auto tr = s.propagator->run(pre, detail::initial_state(s), opt);
    const Eigen::VectorXcd c = tr.bare_state(tr.size() - 1);
    if (std::abs(c[from]) < 1e-6 || std::abs(c[to]) < 1e-6)
      throw NumericalError("phase_lock: reference states are not populated at the reference time");
    return std::arg(c[to] / c[from]);
  };
  const double p0 = measure(0.0);
  const double slope = wrap_angle(measure(0.5 * std::numbers::pi) - p0) / (0.5 * std::numbers::pi);
  if (std::abs(std::abs(slope) - 1.0) > 0.05)
    throw NumericalError("phase_lock: the adjusted pulse does not set the relative phase linearly");
  return wrap_angle((target - p0) / (slope > 0.0 ? 1.0 : -1.0));
}

inline SimulationResult simulate(const Scenario& s, const RunOverrides& o = {}) {
  SimulationResult res;
  res.pulses = resolve_pulses(s);
  if (o.phase && !s.cfg.phase_lock) throw ConfigError("a phase was given but the scenario has no phase_lock");
  if (s.cfg.phase_lock) {
    const int a = s.cfg.pulse_index(s.cfg.phase_lock->adjust_pulse);
    const int r = s.cfg.pulse_index(s.cfg.phase_lock->reference_pulse);
    if (o.last_pulse < 0 || o.last_pulse >= r) {
      res.adjusted_phase = locked_phase(s, res.pulses, o.phase.value_or(s.cfg.phase_lock->target_rad), o);
      res.pulses[a].phase = *res.adjusted_phase;
    }
  }
  PropagationOptions opt = detail::base_options(s, o);
  if (o.last_pulse >= 0) {
    res.pulses.resize(o.last_pulse + 1);
    opt.t_final = res.pulses.back().envelope.end();
  } else {
    double end = 0.0;
    for (const auto& p : res.pulses) end = std::max(end, p.envelope.end());
    opt.t_final = s.cfg.propagation.t_final_t0.value_or(end + s.cfg.propagation.tail_t0);
  }
  if (!(opt.t_final > 0.0)) throw ConfigError("nothing to propagate: give pulses or propagation.t_final_t0");
  for (const auto& p : res.pulses)
    if (p.envelope.end() > opt.t_start && p.envelope.end() < opt.t_final) opt.extra_samples.push_back(p.envelope.end());
  res.options = opt;
  res.trajectory = s.propagator->run(res.pulses, detail::initial_state(s), opt);
  res.elongation = elongation(res.trajectory);
  return res;
}

inline PopulationBasis population_basis(const Scenario& s) {
  return s.cfg.outputs.population_basis == "bare" ? PopulationBasis::bare : PopulationBasis::propagation;
}

/// Population of `selector` at the last sample.
inline double final_population(const Scenario& s, const SimulationResult& r, const std::string& selector) {
  return populations(r.trajectory, s.basis, StateSelector::parse(selector), population_basis(s)).back();
}

/// Population of `selector` at the end of pulse `k`.
inline double population_after_pulse(const Scenario& s, const SimulationResult& r, int k, const std::string& selector) {
  const auto pops = populations(r.trajectory, s.basis, StateSelector::parse(selector), population_basis(s));
  return pops.at(r.trajectory.sample_at(r.pulses.at(k).envelope.end()));
}

/// Fits the widths listed under `calibration`, in order, and writes them into
/// s.cfg. Objective runs stop at the end of the calibrated pulse and use the
/// RWA integrator. Returns a log of the fitted values.
inline std::string calibrate(Scenario& s) {
  std::ostringstream log;
  log.precision(10);
  for (const auto& cal : s.cfg.calibration) {
    const int k = s.cfg.pulse_index(cal.pulse);
    RunOverrides o;
    o.rwa = true;
    o.sample_dt = 0.0;
    o.last_pulse = k;
    auto f = [&](double w) {
      s.cfg.pulses[k].envelope.width_t0 = w;
      const auto r = simulate(s, o);
      if (cal.objective == "max_envelope") return r.elongation.envelope.back();
      return final_population(s, r, cal.selector);
    };
    std::vector<double> ws, fs;
    const double ratio = std::pow(cal.width_max_t0 / cal.width_min_t0, 1.0 / (cal.scan_points - 1));
    for (int i = 0; i < cal.scan_points; ++i) {
      ws.push_back(cal.width_min_t0 * std::pow(ratio, i));
      fs.push_back(f(ws.back()));
    }
    double best_w = 0.0, best_f = 0.0;
    if (cal.objective == "population") {
      int bracket = -1;
      for (int i = 0; i + 1 < cal.scan_points; ++i)
        if ((fs[i] - cal.target) * (fs[i + 1] - cal.target) <= 0.0) {
          bracket = i;
          break;
        }
      if (bracket < 0)
        throw CalibrationError("calibration of '" + cal.pulse + "': target population " + std::to_string(cal.target) +
                               " not reached in the width range");
      double lo = ws[bracket], hi = ws[bracket + 1], flo = fs[bracket];
      best_w = lo;
      best_f = flo;
      for (int it = 0; it < 60 && std::abs(best_f - cal.target) > cal.tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        best_w = mid;
        best_f = fm;
        if ((flo - cal.target) * (fm - cal.target) <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      if (std::abs(best_f - cal.target) > cal.tolerance)
        throw CalibrationError("calibration of '" + cal.pulse + "' did not converge");
    } else {
      int i = 0;
      for (int j = 1; j < cal.scan_points; ++j)
        if (fs[j] > fs[i]) i = j;
      double lo = ws[std::max(i - 1, 0)], hi = ws[std::min(i + 1, cal.scan_points - 1)];
      // Golden-section search for the maximum.
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = f(x1), f2 = f(x2);
      for (int it = 0; it < 60 && hi - lo > cal.tolerance * hi; ++it) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = f(x2);
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = f(x1);
        }
      }
      best_w = f1 > f2 ? x1 : x2;
      best_f = std::max(f1, f2);
      if (fs[i] > best_f) {
        best_w = ws[i];
        best_f = fs[i];
      }
    }
    s.cfg.pulses[k].envelope.width_t0 = best_w;
    log << cal.pulse << ": width_t0 = " << best_w << " (" << cal.objective << " = " << best_f << ")\n";
  }
  return log.str();
}

/// Controls as symmetry-analysis fields, plus the static field when present.
inline std::vector<FieldSpec> symmetry_fields(const Scenario& s) {
  std::vector<FieldSpec> out;
  for (const auto& cc : s.cfg.controls)
    out.push_back({cc.kind == "mw" ? FieldKind::mw : FieldKind::ir, parse_polarization(cc.polarization)});
  if (s.dressing) out.push_back({FieldKind::static_field, Polarization::z});
  return out;
}

inline InitialState symmetry_initial_state(const Scenario& s) {
  const auto& st = s.basis.states[s.initial_index];
  return {st.nu, st.rot.irrep, st.rot.M};
}

inline SpectralGraph scenario_graph(const Scenario& s) {
  if (s.controls.empty()) throw ConfigError("controllability needs at least one control");
  return build_graph(s.basis, s.controls, kAmplitudeTolerance, s.dressing);
}

}  // namespace chiralwp
