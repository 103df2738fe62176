#include "startls/star_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace startls {

const int kFig2ImpulseInstants[4] = {1000, 1500, 2000, 3000};

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void validate(const StarScenario& s) {
  if (s.si_len < 1 || s.rt_len < 1 || s.ns < 1) {
    throw std::invalid_argument("StarScenario: si_len, rt_len and ns must be >= 1");
  }
  if (s.impulse_prob < 0.0 || s.impulse_prob > 1.0) {
    throw std::invalid_argument("StarScenario: impulse_prob must lie in [0, 1]");
  }
  if (!(s.impulse_var_ratio > 0.0)) {
    throw std::invalid_argument("StarScenario: impulse_var_ratio must be positive");
  }
}

// Window ending at stream index pos, newest sample first.
Vec window_at(const Vec& stream, int pos, int len) {
  Vec w(len);
  for (int k = 0; k < len; ++k) {
    w[k] = stream[pos - k];
  }
  return w;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x51F15EEDULL));
}

std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

double noise_variance(const StarScenario& scenario) {
  // Remote signal power is ||h||^2 = 1 by construction.
  return std::pow(10.0, -scenario.snr_db / 10.0);
}

Vec gen_bpsk(int count, std::mt19937_64& rng) {
  if (count < 0) {
    throw std::invalid_argument("gen_bpsk: count must be non-negative");
  }
  Vec out(count);
  std::bernoulli_distribution bit(0.5);
  for (int i = 0; i < count; ++i) {
    out[i] = bit(rng) ? 1.0 : -1.0;
  }
  return out;
}

ChannelRealization gen_channels(const StarScenario& scenario, std::mt19937_64& rng) {
  validate(scenario);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ChannelRealization ch;
  ch.si_taps = Vec(scenario.si_len);
  ch.rt_taps = Vec(scenario.rt_len);
  do {
    for (int i = 0; i < scenario.si_len; ++i) ch.si_taps[i] = gauss(rng);
  } while (ch.si_taps.squaredNorm() == 0.0);
  do {
    for (int i = 0; i < scenario.rt_len; ++i) ch.rt_taps[i] = gauss(rng);
  } while (ch.rt_taps.squaredNorm() == 0.0);

  // Unit-energy RT channel; SI channel carries the exact linear ISR.
  ch.rt_taps /= ch.rt_taps.norm();
  const double isr_lin = std::pow(10.0, scenario.isr_db / 10.0);
  ch.si_taps *= std::sqrt(isr_lin) / ch.si_taps.norm();
  return ch;
}

NoiseStreams gen_noise(int count, const StarScenario& scenario, std::mt19937_64& rng) {
  if (count < 0) {
    throw std::invalid_argument("gen_noise: count must be non-negative");
  }
  validate(scenario);
  const double sigma_a = std::sqrt(noise_variance(scenario));
  const double sigma_i = sigma_a * std::sqrt(scenario.impulse_var_ratio);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution hit(scenario.impulse_prob);
  NoiseStreams out;
  out.gaussian = Vec(count);
  out.impulses = Vec(count);
  for (int i = 0; i < count; ++i) {
    out.gaussian[i] = sigma_a * gauss(rng);
    out.impulses[i] = hit(rng) ? sigma_i * gauss(rng) : 0.0;
  }
  return out;
}

std::vector<SignalRecord> synthesize(const StarScenario& scenario,
                                     const ChannelRealization& channels,
                                     std::mt19937_64& rng) {
  validate(scenario);
  if (channels.si_taps.size() != scenario.si_len ||
      channels.rt_taps.size() != scenario.rt_len) {
    throw std::invalid_argument("synthesize: channel lengths do not match scenario");
  }
  const int n_rec = scenario.ns;
  const int local_len = n_rec + scenario.si_len - 1;
  const int remote_len = n_rec + scenario.rt_len - 1;

  Vec local = gen_bpsk(local_len, rng);
  Vec remote = gen_bpsk(remote_len, rng);
  NoiseStreams rx_noise = gen_noise(n_rec, scenario, rng);

  // Reference-path noise: the estimator observes the local stream through
  // Gaussian noise of the same variance as the receiver noise.
  const double sigma_b = std::sqrt(noise_variance(scenario));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec local_obs(local_len);
  for (int i = 0; i < local_len; ++i) {
    local_obs[i] = local[i] + sigma_b * gauss(rng);
  }

  std::vector<SignalRecord> records(static_cast<std::size_t>(n_rec));
  for (int n = 0; n < n_rec; ++n) {
    SignalRecord& r = records[static_cast<std::size_t>(n)];
    const int local_pos = n + scenario.si_len - 1;
    const int remote_pos = n + scenario.rt_len - 1;
    r.i_vec = window_at(local, local_pos, scenario.si_len);
    r.i_obs_vec = window_at(local_obs, local_pos, scenario.si_len);
    r.x_vec = window_at(remote, remote_pos, scenario.rt_len);
    r.si_component = channels.si_taps.dot(r.i_vec);
    r.rt_component = channels.rt_taps.dot(r.x_vec);
    r.noise = rx_noise.gaussian[n] + rx_noise.impulses[n];
    r.y = r.si_component + r.rt_component + r.noise;
  }
  return records;
}

Fig2Testbench fig2_testbench(std::mt19937_64& rng, int horizon) {
  if (horizon < 3500) {
    throw std::invalid_argument("fig2_testbench: horizon must cover 3500 samples");
  }
  constexpr int kDim = 10;
  constexpr double kNoiseVar = 0.1;
  constexpr double kImpulseVar = 10.0;

  std::normal_distribution<double> gauss(0.0, 1.0);

  Fig2Testbench tb;
  tb.truth = Vec(kDim);
  do {
    for (int i = 0; i < kDim; ++i) tb.truth[i] = gauss(rng);
  } while (tb.truth.squaredNorm() == 0.0);
  tb.truth /= tb.truth.norm();

  const int stream_len = horizon + kDim - 1;
  Vec clean(stream_len), noisy(stream_len);
  tb.input_noise = Vec(stream_len);
  const double sigma_in = std::sqrt(kNoiseVar);
  for (int i = 0; i < stream_len; ++i) {
    clean[i] = gauss(rng);
    tb.input_noise[i] = sigma_in * gauss(rng);
    noisy[i] = clean[i] + tb.input_noise[i];
  }

  const double sigma_out = std::sqrt(kNoiseVar);
  const double sigma_imp = std::sqrt(kImpulseVar);
  tb.impulses = Vec::Zero(horizon);
  for (int idx : kFig2ImpulseInstants) {
    if (idx < horizon) tb.impulses[idx] = sigma_imp * gauss(rng);
  }

  tb.samples.resize(static_cast<std::size_t>(horizon));
  for (int n = 0; n < horizon; ++n) {
    auto& s = tb.samples[static_cast<std::size_t>(n)];
    const int pos = n + kDim - 1;
    s.input = window_at(noisy, pos, kDim);
    const double y_clean = tb.truth.dot(window_at(clean, pos, kDim));
    s.output = y_clean + sigma_out * gauss(rng) + tb.impulses[n];
    s.time_index = n;
  }
  return tb;
}

}  // namespace startls
