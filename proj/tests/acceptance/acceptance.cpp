// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "chiralwp/scenario.hpp"
#include "oracles.hpp"

using namespace chiralwp;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Largest norm error seen per preset, filled by every preset run.
std::map<std::string, double> g_norm_errors;

SimulationResult run(const std::string& preset, const Scenario& s, const RunOverrides& o = {}) {
  auto r = simulate(s, o);
  double& worst = g_norm_errors[preset];
  worst = std::max(worst, r.trajectory.max_norm_error);
  return r;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

class Detail {
 public:
  Detail& add(const std::string& name, double value) {
    os_ << (first_ ? "" : ", ") << name << '=' << fmt(value);
    first_ = false;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  bool first_ = true;
};

Verdict mw_protocol() {
  const auto s = build_scenario(load_preset("mw_ir_long"));
  const auto r = run("mw_ir_long", s, {.last_pulse = 1});
  const double g = population_after_pulse(s, r, 0, "0:0_00:0");
  const double p = population_after_pulse(s, r, 0, "0:1_11:1");
  const double m = population_after_pulse(s, r, 0, "0:1_11:-1");
  const double t = population_after_pulse(s, r, 1, "0:1_10:0");
  const double res = population_after_pulse(s, r, 1, "0:1_11:1") + population_after_pulse(s, r, 1, "0:1_11:-1");
  Detail d;
  d.add("P1(0_00,0)", g).add("P1(1_11,+1)", p).add("P1(1_11,-1)", m).add("P2(1_10,0)", t).add("P2(1_11,+-1)", res);
  return {within(g, 0.5, 0.02) && within(p, 0.25, 0.02) && within(m, 0.25, 0.02) && within(t, 0.5, 0.02) &&
              res < 0.01,
          d.str()};
}

Verdict long_ir() {
  const auto s = build_scenario(load_preset("mw_ir_long"));
  const auto r = run("mw_ir_long", s);
  const double b0 = final_population(s, r, "0:1_10:0");
  const double b1 = final_population(s, r, "1:1_10:0");
  const double env = r.elongation.max_envelope();
  Detail d;
  d.add("|b0|^2", b0).add("|b1|^2", b1).add("max envelope", env);
  return {within(b0, 0.5, 0.02) && within(b1, 0.5, 0.02) && within(env, 0.5, 0.02), d.str()};
}

Verdict short_ir() {
  const auto s = build_scenario(load_preset("mw_ir_short"));
  const double half_pi = 0.5 * std::numbers::pi;
  const auto plus = run("mw_ir_short", s, {.phase = half_pi});
  const auto minus = run("mw_ir_short", s, {.phase = -half_pi});
  const auto zero = run("mw_ir_short", s, {.phase = 0.0});
  const double ratio = zero.elongation.max_envelope() / plus.elongation.max_envelope();
  double flip = 0.0;
  const auto& a = plus.elongation.signal;
  const auto& b = minus.elongation.signal;
  if (a.size() != b.size()) return {false, "the two phase runs were sampled differently"};
  for (std::size_t i = 0; i < a.size(); ++i) flip = std::max(flip, std::abs(a[i] + b[i]));
  Detail d;
  d.add("envelope(pi/2)", plus.elongation.max_envelope())
      .add("envelope(0)", zero.elongation.max_envelope())
      .add("ratio", ratio)
      .add("max|s(+pi/2)+s(-pi/2)|", flip);
  return {ratio < 0.1 && flip < 1e-3, d.str()};
}

Verdict static_three_ir() {
  const auto s = build_scenario(load_preset("static_three_ir"));
  const auto r = run("static_three_ir", s);
  Detail d;
  bool ok = true;
  for (const char* sel : {"0:1_01:1", "0:1_01:-1", "1:1_01:1", "1:1_01:-1"}) {
    const double p = final_population(s, r, sel);
    d.add(sel, p);
    ok = ok && within(p, 0.25, 0.02);
  }
  const double env = r.elongation.max_envelope();
  d.add("max envelope", env);
  return {ok && within(env, 0.5, 0.02), d.str()};
}

Verdict single_ir_null() {
  auto s = build_scenario(load_preset("single_ir"));
  const double field = s.cfg.pulses.at(0).field_V_per_m;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> scale(0.2, 3.0), phase(0.0, 2.0 * std::numbers::pi);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    s.cfg.pulses[0].field_V_per_m = field * scale(rng);
    s.cfg.pulses[0].phase_rad = phase(rng);
    worst = std::max(worst, run("single_ir", s).elongation.max_envelope());
  }
  return {worst < 1e-8, Detail().add("max |<chi>| over 10 runs", worst).str()};
}

Verdict achiral_in_plane() {
  const auto s = build_scenario(load_preset("achiral_inplane"));
  const auto r = run("achiral_inplane", s);
  const double zeta = r.elongation.max_abs_signal();
  return {zeta > 0.1, Detail().add("max |<zeta>|", zeta).str()};
}

Verdict controllability() {
  std::ostringstream os;
  bool ok = true;
  for (const auto& [name, expect] : std::vector<std::pair<std::string, bool>>{
           {"fig2", true}, {"fig6", true}, {"ir_only", false}, {"mw_only", false}}) {
    const auto s = build_scenario(load_preset(name));
    const auto g = scenario_graph(s);
    const auto cert = decide_controllability(g);
    const std::string replay = validate_certificate(g, cert);
    const bool disconnected = cert.components > 1;
    const bool good = cert.controllable == expect && replay.empty() && (expect || disconnected);
    ok = ok && good;
    os << name << '=' << (cert.controllable ? "controllable" : "not_proven") << (disconnected ? "(disconnected)" : "")
       << (replay.empty() ? " replay ok" : " replay: " + replay) << "; ";
  }
  return {ok, os.str()};
}

Verdict stark_order() {
  const auto s = build_scenario(load_preset("fig6"));
  const auto g = scenario_graph(s);
  const auto& H = s.dressing->H_stat;
  const double eps = s.dressing->epsilon;
  const auto at_eps = field_dressed_states(s.basis, H, eps);
  const auto at_half = field_dressed_states(s.basis, H, 0.5 * eps);
  std::map<int, Eigen::MatrixXcd> first;
  double lo = 1e300, hi = 0.0;
  int edges = 0, inside = 0;
  for (const auto& e : g.edges) {
    if (e.order != 1) continue;
    const auto& X = s.controls[e.control].dipole;
    if (!first.count(e.control)) first[e.control] = first_order_matrix(s.basis, H, X);
    const cplx zero = X(e.k, e.m), slope = first[e.control](e.k, e.m);
    const double r1 = std::abs(exact_dressed_element(at_eps, X, e.k, e.m) - (zero + eps * slope));
    const double r2 = std::abs(exact_dressed_element(at_half, X, e.k, e.m) - (zero + 0.5 * eps * slope));
    const double ratio = r1 / r2;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ++edges;
    if (within(ratio, 4.0, 0.5)) ++inside;
  }
  Detail d;
  d.add("order-1 edges", edges).add("within 4+-0.5", inside).add("min ratio", lo).add("max ratio", hi);
  return {edges > 0 && inside == edges, d.str()};
}

Verdict numerical_hygiene() {
  for (const char* name : {"mw_ir_long", "mw_ir_short", "static_three_ir", "single_ir", "achiral_inplane"})
    if (!g_norm_errors.count(name)) run(name, build_scenario(load_preset(name)));
  double norm = 0.0;
  for (const auto& [name, err] : g_norm_errors) norm = std::max(norm, err);

  std::mt19937 rng(2024);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double quad = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    SymTopKet ket{pick(0, 3), 0, 0};
    ket.K = pick(-ket.J, ket.J);
    ket.M = pick(-ket.J, ket.J);
    const int p = pick(-1, 1), q = pick(-1, 1);
    SymTopKet bra{std::max(0, ket.J + pick(-1, 1)), 0, 0};
    bra.K = std::clamp(ket.K + q, -bra.J, bra.J);
    bra.M = std::clamp(ket.M + p, -bra.J, bra.J);
    quad = std::max(quad, std::abs(d1_element(bra, p, q, ket) - oracle::quadrature_element(bra, p, q, ket)));
  }

  const RotationalConstants rc{11781.84, 5246.37, 3627.49};
  const std::map<std::pair<int, int>, double> expected{
      {{0, 1}, rc.b() + rc.c()}, {{1, 1}, rc.a() + rc.c()}, {{1, 0}, rc.a() + rc.b()}};
  double eig = 0.0;
  int found = 0;
  for (const auto& st : diagonalize_and_label(rc, 1)) {
    if (st.J != 1 || st.M != 0) continue;
    const auto it = expected.find({st.Ka, st.Kc});
    if (it == expected.end()) return {false, "unexpected J = 1 label " + st.label()};
    eig = std::max(eig, std::abs(st.energy - it->second) / it->second);
    ++found;
  }
  Detail d;
  d.add("max norm drift", norm).add("max |d1 - quadrature|", quad).add("max J=1 relative error", eig);
  return {norm < 1e-10 && quad < 1e-8 && found == 3 && eig < 1e-10, d.str()};
}

// Random scenarios over the polarization/mode grid; keeps the forbidden ones.
Verdict forbidden_dynamics() {
  std::ifstream in(preset_dir() + "/single_ir.json");
  const json base = json::parse(in);
  std::mt19937 rng(17);
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto index = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  const std::vector<std::string> pols{"x", "y", "z"};
  int tried = 0, kept = 0;
  double worst = 0.0;
  while (kept < 10 && tried < 500) {
    ++tried;
    json j = base;
    j["name"] = "forbidden_" + std::to_string(tried);
    if (index(2)) {
      j["molecule"]["mode"] = "in_plane";
      j["molecule"]["transition_a_D"] = 0.1;
      j["molecule"]["transition_b_D"] = 0.05;
      j["molecule"]["transition_c_D"] = 0.0;
    }
    j["controls"] = json::array();
    j["pulses"] = json::array();
    const int n = 1 + index(3);
    for (int i = 0; i < n; ++i) {
      const bool mw = index(2);
      const std::string name = "c" + std::to_string(i);
      json c{{"name", name}, {"kind", mw ? "mw" : "ir"}, {"polarization", pols[index(3)]}};
      if (mw) c["carrier_over_B"] = uniform(1.5, 3.5);
      j["controls"].push_back(c);
      j["pulses"].push_back({{"name", "p" + std::to_string(i)},
                             {"control", name},
                             {"field_V_per_m", mw ? uniform(5e5, 3e6) : uniform(2e7, 1e8)},
                             {"phase_rad", uniform(0.0, 2.0 * std::numbers::pi)},
                             {"envelope", {{"shape", "gaussian"}, {"width_t0", mw ? 3.0 : 0.5}}}});
    }
    const auto s = build_scenario(parse_config(j));
    const auto v = check_feasibility(s.dipoles, symmetry_fields(s), symmetry_initial_state(s), 4);
    if (v.outcome != Outcome::forbidden) continue;
    ++kept;
    worst = std::max(worst, simulate(s, {.sample_dt = 0.05}).elongation.max_envelope());
  }
  Detail d;
  d.add("forbidden scenarios", kept).add("drawn", tried).add("max |<chi>|", worst);
  return {kept == 10 && worst < 1e-8, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"MW protocol populations", mw_protocol},
      {"long IR pulse populations and envelope", long_ir},
      {"short IR pulse phase dependence", short_ir},
      {"static field with three IR pulses", static_three_ir},
      {"single IR pulse gives no chirality", single_ir_null},
      {"in-plane mode gives achiral elongation", achiral_in_plane},
      {"controllability verdicts and replay", controllability},
      {"Stark remainder scales as eps^2", stark_order},
      {"numerical hygiene", numerical_hygiene},
      {"forbidden scenarios stay achiral in propagation", forbidden_dynamics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << "criterion " << i + 1 << ": " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  ["
              << v.detail << "]" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
