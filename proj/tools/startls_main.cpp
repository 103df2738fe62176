// Experiment runner for the STAR self-interference cancellation library.
// Subcommands reproduce the reference experiments as CSV files.

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "startls/experiment.hpp"

namespace {

using startls::ExperimentKind;
using startls::ExperimentSpec;

// Config keys mirrored as --key flags; flag values override file values.
const std::vector<std::string> kConfigKeys = {
    "si_len",        "rt_len",         "isr_db",
    "snr_db",        "impulse_prob",   "impulse_var_ratio",
    "ns",            "sample_rate_hz", "bandwidth_hz",
    "seed",          "layers",         "mu",
    "gamma",         "lambda_sigma",   "nw",
    "c1",            "exclude_first_layer"};

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  int trials = 100;
  int jobs = 0;
  bool plot_script = false;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario config file (key = value lines)");
  cmd->add_option("--out", args.out_path, "output CSV path")->required();
  cmd->add_option("--trials", args.trials, "number of Monte-Carlo trials");
  cmd->add_option("--jobs", args.jobs, "worker threads (0 = all cores)");
  cmd->add_flag("--plot-script", args.plot_script, "emit a companion python plot script");
  for (const auto& key : kConfigKeys) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&args, key](const std::string& value) { args.overrides[key] = value; },
        "override config key '" + key + "'");
  }
}

startls::ExperimentConfig load_config(const CommonArgs& args) {
  startls::ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    cfg = startls::parse_config(args.config_path);
  }
  for (const auto& [key, value] : args.overrides) {
    startls::apply_override(cfg, key, value);
  }
  return cfg;
}

std::vector<double> parse_point_list(const std::string& text) {
  std::vector<double> points;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    points.push_back(std::stod(tok));
  }
  if (points.empty()) {
    throw startls::ConfigError("sweep points", 0, "empty sweep point list");
  }
  return points;
}

int dispatch(ExperimentKind kind, const CommonArgs& args,
             const std::string& snr_sweep, const std::string& isr_sweep) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.config = load_config(args);
  spec.trials = args.trials;
  spec.jobs = args.jobs;
  spec.output_path = args.out_path;
  spec.emit_plot_script = args.plot_script;
  if (!snr_sweep.empty()) spec.snr_sweep_db = parse_point_list(snr_sweep);
  if (!isr_sweep.empty()) spec.isr_sweep_db = parse_point_list(isr_sweep);
  return startls::run_experiment(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STAR self-interference cancellation experiments"};
  app.require_subcommand(1);

  CommonArgs fig2_args, spectrum_args, compare_args, sweep_args;
  std::string snr_sweep, isr_sweep;

  auto* fig2 = app.add_subcommand(
      "fig2", "impulse-robustness learning curves for LMS, TLS and MTLS");
  add_common(fig2, fig2_args);

  auto* spectrum = app.add_subcommand(
      "spectrum", "receiver power spectra before and after SI cancellation");
  add_common(spectrum, spectrum_args);

  auto* compare = app.add_subcommand(
      "compare", "terminal NMSD of MMSE, MTLS and m-MTLS over an SNR sweep");
  add_common(compare, compare_args);
  compare->add_option("--snr_sweep", snr_sweep,
                      "comma-separated SNR points in dB (default 0,10,20,30)");

  auto* sweep = app.add_subcommand(
      "sweep", "terminal NMSD of m-MTLS by layer count over an ISR sweep");
  add_common(sweep, sweep_args);
  sweep->add_option("--isr_sweep", isr_sweep,
                    "comma-separated ISR points in dB (default 20,30,40)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fig2->parsed()) {
      return dispatch(ExperimentKind::kFig2Impulse, fig2_args, "", "");
    }
    if (spectrum->parsed()) {
      return dispatch(ExperimentKind::kSpectrum, spectrum_args, "", "");
    }
    if (compare->parsed()) {
      return dispatch(ExperimentKind::kNmsdCompare, compare_args, snr_sweep, "");
    }
    if (sweep->parsed()) {
      return dispatch(ExperimentKind::kSweep, sweep_args, "", isr_sweep);
    }
  } catch (const startls::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
