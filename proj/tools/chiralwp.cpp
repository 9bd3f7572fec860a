#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chiralwp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Chiral vibrational wavepackets in rotating planar molecules"};
  app.require_subcommand(1, 1);
  chiralwp::cli::Options opt;
  double phase = 0.0;
  double sample_dt = 0.0;

  auto add_common = [&](CLI::App* sub) {
    auto* src = sub->add_option_group("scenario");
    src->add_option("--config", opt.config_path, "Scenario JSON file");
    src->add_option("--preset", opt.preset, "Name of a shipped preset");
    src->require_option(1);
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  };

  auto* spectrum = app.add_subcommand("spectrum", "Rotational state table and control matrices");
  auto* symmetry = app.add_subcommand("check-symmetry", "Selection-rule verdict for the scenario fields");
  auto* control = app.add_subcommand("controllability", "Graph controllability certificate");
  auto* simulate = app.add_subcommand("simulate", "Propagate the pulse sequence");
  for (auto* sub : {spectrum, symmetry, control, simulate}) add_common(sub);
  simulate->add_flag("--dt-halve", opt.dt_halve, "Rerun at dt/2 and dt/4 and report the convergence ratio");
  auto* phase_opt = simulate->add_option("--phase", phase, "Wavepacket phase at the locked reference pulse, rad");
  simulate->add_option("--scan", opt.scan, "Phases to run in parallel, rad")->delimiter(',');
  simulate->add_flag("--calibrate", opt.calibrate, "Fit the calibrated pulse widths first and write the fitted config");
  auto* sample_opt = simulate->add_option("--sample-dt", sample_dt, "Sampling interval, t0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chiralwp::cli::kExitValidation;
  }
  if (phase_opt->count()) opt.phase = phase;
  if (sample_opt->count()) opt.sample_dt = sample_dt;
  const std::string command = app.get_subcommands().front()->get_name();
  return chiralwp::cli::run(command, opt, std::cout, std::cerr);
}
