#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "startls/joint_estimator.hpp"
#include "startls/star_sim.hpp"
#include "startls/types.hpp"

namespace startls {

constexpr double kNmsdFloorDb = -300.0;

/// Normalized misalignment 10*log10(||estimate - truth||^2 / ||truth||^2),
/// clamped below at floor_db so perfect estimates stay finite.
template <typename Scalar>
Scalar nmsd(const VecX<Scalar>& estimate, const VecX<Scalar>& truth,
            Scalar floor_db = Scalar(kNmsdFloorDb)) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("nmsd: length mismatch");
  }
  const Scalar ref = truth.squaredNorm();
  if (!(ref > Scalar(0))) {
    throw std::invalid_argument("nmsd: truth vector must have positive energy");
  }
  const Scalar ratio = (estimate - truth).squaredNorm() / ref;
  if (!(ratio > Scalar(0))) {
    return floor_db;
  }
  return std::max(Scalar(10) * std::log10(ratio), floor_db);
}

struct NmsdTrace {
  std::vector<double> values_db;
  double floor_db = kNmsdFloorDb;
};

struct PowerSpectrum {
  Vec freqs_hz;
  Vec psd_db;
};

/// Welch averaged periodogram with a Hann window, one-sided, in dB relative
/// to unit power per Hz. The frequency grid depends only on segment_len and
/// the sample rate.
PowerSpectrum power_spectrum(const Vec& signal, double sample_rate_hz,
                             int segment_len = 256, double overlap = 0.5);

/// Mean squared residual SI after reconstruction with si_estimate against the
/// clean local reference, in dB. Uses the simulator's hidden truth s(n).
double residual_si_power(const std::vector<SignalRecord>& records,
                         const Vec& si_estimate);

/// Ridge-regularized block least squares over the whole training block:
/// c = (U^T U + noise_var I)^{-1} U^T y with rows u(n) = [i_obs(n); x(n)].
JointChannelEstimate<double> mmse_baseline(const std::vector<SignalRecord>& records,
                                           int si_len, int rt_len,
                                           double noise_var);

}  // namespace startls
