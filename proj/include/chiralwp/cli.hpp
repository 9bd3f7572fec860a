#pragma once

// Subcommands of the chiralwp tool. Each returns the process exit code:
// 0 success, 2 validation error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "chiralwp/scenario.hpp"

namespace chiralwp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::string preset;
  std::string out_dir = ".";
  bool dt_halve = false;
  std::optional<double> phase;
  std::vector<double> scan;
  bool calibrate = false;
  std::optional<double> sample_dt;
};

namespace detail {

inline std::ofstream open_output(const Options& o, const std::string& file) {
  std::filesystem::create_directories(o.out_dir);
  const auto path = std::filesystem::path(o.out_dir) / file;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f.precision(12);
  return f;
}

inline ScenarioConfig load(const Options& o) {
  if (o.config_path.empty() == o.preset.empty()) throw ConfigError("give exactly one of --config or --preset");
  return o.preset.empty() ? load_config(o.config_path) : load_preset(o.preset);
}

inline void write_trajectory_csv(std::ostream& os, const Scenario& s, const SimulationResult& r) {
  const auto& sel = s.cfg.outputs.populations;
  std::vector<std::vector<double>> pops;
  for (const auto& t : sel) pops.push_back(populations(r.trajectory, s.basis, StateSelector::parse(t), population_basis(s)));
  os << "t_over_t0";
  for (const auto& t : sel) os << ',' << t;
  os << ",elongation_re,elongation_envelope\n";
  os.precision(12);
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
    os << r.trajectory.times[i];
    for (const auto& p : pops) os << ',' << p[i];
    os << ',' << r.elongation.signal[i] << ',' << r.elongation.envelope[i] << '\n';
  }
}

inline std::string summary(const Scenario& s, const SimulationResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << "scenario: " << s.cfg.name << '\n';
  os << "integrator: " << (r.options.rwa ? "rwa" : "full") << ", steps " << r.trajectory.steps
     << ", max norm error " << std::scientific << r.trajectory.max_norm_error << std::defaultfloat << '\n';
  os << "basis: " << s.basis.size() << " states" << (s.dressed() ? ", field-dressed" : "") << '\n';
  if (r.adjusted_phase) os << "locked pulse phase: " << *r.adjusted_phase << " rad\n";
  for (std::size_t k = 0; k < r.pulses.size(); ++k) {
    const auto& p = r.pulses[k];
    os << "pulse " << p.name << ": carrier " << p.carrier << " B, phase " << p.phase << ", field " << p.field_V_per_m
       << " V/m, window [" << p.envelope.begin() << ", " << p.envelope.end() << "] t0\n";
    os << "  populations after " << p.name << ':';
    for (const auto& t : s.cfg.outputs.populations)
      os << ' ' << t << '=' << population_after_pulse(s, r, static_cast<int>(k), t);
    os << '\n';
  }
  os << "final populations:";
  for (const auto& t : s.cfg.outputs.populations) os << ' ' << t << '=' << final_population(s, r, t);
  os << '\n';
  os << "max elongation envelope: " << r.elongation.max_envelope() << '\n';
  os << "max |elongation|: " << r.elongation.max_abs_signal() << '\n';
  return os.str();
}

}  // namespace detail

inline int cmd_spectrum(const Scenario& s, const Options& o, std::ostream& out) {
  auto f = detail::open_output(o, "states.csv");
  f << "J,Ka,Kc,M,energy_MHz,irrep\n";
  int levels = 0;
  for (const auto& st : s.basis.states) {
    if (st.nu != 0) continue;
    if (st.rot.M == -st.rot.J) ++levels;
    f << st.rot.J << ',' << st.rot.Ka << ',' << st.rot.Kc << ',' << st.rot.M << ','
      << st.rot.energy * s.constants.B_MHz << ',' << to_string(st.rot.irrep) << '\n';
  }
  for (const auto& c : s.controls) {
    auto m = detail::open_output(o, "control_" + c.name + ".csv");
    write_matrix_csv(m, s.basis, c.dipole);
    if (!c.diagnostic.empty()) out << "warning: " << c.diagnostic << '\n';
  }
  out << "levels: " << levels << ", states per vibrational level: " << s.basis.size() / 2 << '\n';
  out << "wrote " << (std::filesystem::path(o.out_dir) / "states.csv").string() << '\n';
  return kExitOk;
}

inline int cmd_check_symmetry(const Scenario& s, const Options& o, std::ostream& out) {
  const auto fields = symmetry_fields(s);
  const auto init = symmetry_initial_state(s);
  const auto v = check_feasibility(s.dipoles, fields, init, 4);
  std::ostringstream os;
  os << format_verdict(v);
  os << "three orthogonal field axes: " << (orthogonality_check(fields) ? "yes" : "no") << '\n';
  os << "witness replay: " << (validate_witness(v, init) ? "ok" : "FAILED") << '\n';
  auto f = detail::open_output(o, "symmetry.txt");
  f << os.str();
  out << os.str();
  return validate_witness(v, init) ? kExitOk : kExitNumerical;
}

inline int cmd_controllability(const Scenario& s, const Options& o, std::ostream& out) {
  const auto g = scenario_graph(s);
  const auto cert = decide_controllability(g);
  const std::string replay = validate_certificate(g, cert);
  std::ostringstream os;
  os << format_certificate(g, cert);
  os << "certificate replay: " << (replay.empty() ? "ok" : replay) << '\n';
  auto f = detail::open_output(o, "certificate.txt");
  f << os.str();
  auto e = detail::open_output(o, "edges.csv");
  write_edges_csv(e, g, cert);
  out << os.str();
  return replay.empty() ? kExitOk : kExitNumerical;
}

inline int cmd_simulate(Scenario& s, const Options& o, std::ostream& out) {
  if (o.calibrate) {
    if (s.cfg.calibration.empty()) throw ConfigError("--calibrate: the scenario has no calibration entries");
    out << calibrate(s);
    auto f = detail::open_output(o, s.cfg.name.empty() ? "calibrated.json" : s.cfg.name + ".json");
    f << to_json(s.cfg).dump(2) << '\n';
  }
  RunOverrides base;
  base.phase = o.phase;
  base.sample_dt = o.sample_dt;
  if (!o.scan.empty()) {
    if (!s.cfg.phase_lock) throw ConfigError("--scan needs a scenario with phase_lock");
    std::vector<std::future<SimulationResult>> runs;
    for (double ph : o.scan) {
      RunOverrides ro = base;
      ro.phase = ph;
      runs.push_back(std::async(std::launch::async, [&s, ro] { return simulate(s, ro); }));
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto r = runs[i].get();
      auto f = detail::open_output(o, "trajectory_phase_" + std::to_string(i) + ".csv");
      detail::write_trajectory_csv(f, s, r);
      out << "phase " << o.scan[i] << ": max elongation envelope " << r.elongation.max_envelope()
          << ", max |elongation| " << r.elongation.max_abs_signal() << '\n';
    }
    return kExitOk;
  }
  const auto r = simulate(s, base);
  auto f = detail::open_output(o, "trajectory.csv");
  detail::write_trajectory_csv(f, s, r);
  std::string text = detail::summary(s, r);
  if (o.dt_halve) {
    RunOverrides h = base, q = base;
    h.dt_scale = 0.5;
    q.dt_scale = 0.25;
    h.sample_dt = q.sample_dt = 0.0;
    const auto rh = simulate(s, h), rq = simulate(s, q);
    const auto last = [](const SimulationResult& x) { return x.trajectory.bare_state(x.trajectory.size() - 1); };
    std::ostringstream os;
    os << "dt-halving ratio: " << convergence_ratio(last(r), last(rh), last(rq))
       << " (4 expected for the second-order integrator)\n";
    text += os.str();
  }
  auto sf = detail::open_output(o, "summary.txt");
  sf << text;
  out << text;
  return kExitOk;
}

/// Loads the scenario, dispatches and maps failures to exit codes.
inline int run(const std::string& command, const Options& o, std::ostream& out, std::ostream& err) {
  try {
    if (command != "spectrum" && command != "check-symmetry" && command != "controllability" && command != "simulate")
      throw ConfigError("unknown subcommand '" + command + "'");
    if (command != "simulate" && (o.dt_halve || o.phase || !o.scan.empty() || o.calibrate || o.sample_dt))
      throw ConfigError("--dt-halve, --phase, --scan, --calibrate and --sample-dt apply to simulate only");
    if (o.sample_dt && !(*o.sample_dt > 0.0)) throw ConfigError("--sample-dt must be > 0");
    Scenario s = build_scenario(detail::load(o));
    if (command == "spectrum") return cmd_spectrum(s, o, out);
    if (command == "check-symmetry") return cmd_check_symmetry(s, o, out);
    if (command == "controllability") return cmd_controllability(s, o, out);
    return cmd_simulate(s, o, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "invalid output location: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace chiralwp::cli
