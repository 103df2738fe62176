#pragma once

#include <functional>
#include <string>
#include <vector>

#include "startls/config.hpp"
#include "startls/metrics.hpp"

namespace startls {

enum class ExperimentKind { kFig2Impulse, kSpectrum, kNmsdCompare, kSweep };

enum class Estimator { kLms, kTls, kMtls, kMmtls, kMmse };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kFig2Impulse;
  ExperimentConfig config;
  int trials = 100;
  int jobs = 0;  // 0: use all hardware threads
  std::string output_path;
  std::vector<Estimator> estimators;       // defaults chosen per kind
  std::vector<double> snr_sweep_db = {0.0, 10.0, 20.0, 30.0};  // compare
  std::vector<double> isr_sweep_db = {20.0, 30.0, 40.0};       // sweep
  std::vector<int> layer_counts = {1, 2, 3};                   // sweep
  bool emit_plot_script = false;
};

/// Deterministic trial-parallel loop: body(i) runs once per index, results
/// must land in per-index slots so the reduction order is fixed.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

struct Fig2Curves {
  int horizon = 0;
  std::vector<double> nmsd_lms_db;
  std::vector<double> nmsd_tls_db;
  std::vector<double> nmsd_mtls_db;
};

/// Trial-averaged learning curves (linear-domain mean, then dB) for LMS, TLS
/// and MTLS on the impulse testbench.
Fig2Curves run_fig2(const ExperimentConfig& config, int trials, int jobs,
                    int horizon = 4000);

struct SpectrumResult {
  Vec freqs_hz;
  Vec psd_rx_db;        // received signal
  Vec psd_rt_db;        // remote signal plus receiver noise
  Vec psd_post_sic_db;  // received signal after SI subtraction
  double rx_power_db = 0.0;
  double rt_noise_power_db = 0.0;
  double post_sic_power_db = 0.0;
};

/// Joint-estimator run followed by Welch spectra of the received signal, the
/// remote-plus-noise component, and the post-cancellation residual. The final
/// cumulative SI estimate is applied over the whole record.
SpectrumResult run_spectrum(const ExperimentConfig& config, int trials, int jobs);

struct CompareRow {
  double snr_db = 0.0;
  double nmsd_mmse_db = 0.0;
  double nmsd_mtls_db = 0.0;   // single-layer joint MTLS
  double nmsd_mmtls_db = 0.0;  // multi-layer, config.estimator.layers
};

std::vector<CompareRow> run_compare(const ExperimentConfig& config,
                                    const std::vector<double>& snr_points_db,
                                    int trials, int jobs);

struct SweepRow {
  double isr_db = 0.0;
  std::vector<double> nmsd_by_layers_db;  // one entry per requested layer count
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                const std::vector<double>& isr_points_db,
                                const std::vector<int>& layer_counts, int trials,
                                int jobs);

/// Execute the experiment and write its CSV (plus optional plot script).
/// Returns 0 on success, 3 when the output path is not writable.
int run_experiment(const ExperimentSpec& spec);

}  // namespace startls
