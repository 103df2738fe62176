#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "startls/core_filters.hpp"
#include "startls/types.hpp"

namespace startls {

/// Scenario parameters for a simultaneous-transmit-and-receive run.
/// isr_db is the SI-to-RT channel energy ratio E(||w||^2 / ||h||^2);
/// snr_db sets the Gaussian receiver-noise variance against the remote
/// signal power. impulse_var_ratio scales the impulse variance relative
/// to the Gaussian noise variance.
struct StarScenario {
  int si_len = 4;
  int rt_len = 10;
  double isr_db = 20.0;
  double snr_db = 20.0;
  double impulse_prob = 0.01;
  double impulse_var_ratio = 100.0;
  int ns = 20000;
  double sample_rate_hz = 10000.0;
  double bandwidth_hz = 5000.0;
  std::uint64_t seed = 1;
};

/// True channel taps for one trial. rt_taps has unit energy; si_taps carry
/// exactly the configured linear ISR, so per-trial figures are calibrated.
struct ChannelRealization {
  Vec si_taps;
  Vec rt_taps;
};

/// One received sample with truth bookkeeping. y = si + rt + noise exactly.
/// i_vec is the clean local transmit window; i_obs_vec is the reference
/// delivered to the estimator (local window plus reference-path noise).
struct SignalRecord {
  double y = 0.0;
  Vec i_vec;
  Vec i_obs_vec;
  Vec x_vec;
  double si_component = 0.0;
  double rt_component = 0.0;
  double noise = 0.0;
};

struct NoiseStreams {
  Vec gaussian;
  Vec impulses;
};

/// System-identification testbench: length-10 unit-norm unknown system,
/// input and output noise of variance 0.1, and variance-10 impulses added
/// to the output at samples 1000, 1500, 2000 and 3000.
struct Fig2Testbench {
  std::vector<RegressionSample<double>> samples;
  Vec truth;
  Vec impulses;     // impulse component of the output noise, per sample
  Vec input_noise;  // perturbation of the input stream (length horizon + 9)
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::mt19937_64 make_rng(std::uint64_t seed);

/// Gaussian receiver-noise variance implied by the scenario SNR.
double noise_variance(const StarScenario& scenario);

Vec gen_bpsk(int count, std::mt19937_64& rng);
ChannelRealization gen_channels(const StarScenario& scenario, std::mt19937_64& rng);
NoiseStreams gen_noise(int count, const StarScenario& scenario, std::mt19937_64& rng);
std::vector<SignalRecord> synthesize(const StarScenario& scenario,
                                     const ChannelRealization& channels,
                                     std::mt19937_64& rng);

Fig2Testbench fig2_testbench(std::mt19937_64& rng, int horizon = 4000);

extern const int kFig2ImpulseInstants[4];

}  // namespace startls
