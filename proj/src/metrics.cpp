#include "startls/metrics.hpp"

#include <complex>
#include <numbers>

namespace startls {

namespace {

using Cplx = std::complex<double>;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void fft_radix2(std::vector<Cplx>& a) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / len;
    const Cplx wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      Cplx w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const Cplx u = a[i + k];
        const Cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<Cplx> dft(const std::vector<Cplx>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<Cplx> out(a.size());
  for (int k = 0; k < n; ++k) {
    Cplx acc(0.0, 0.0);
    for (int t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * k * t / n;
      acc += a[t] * Cplx(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

}  // namespace

PowerSpectrum power_spectrum(const Vec& signal, double sample_rate_hz,
                             int segment_len, double overlap) {
  if (segment_len < 2) {
    throw std::invalid_argument("power_spectrum: segment_len must be >= 2");
  }
  if (segment_len > signal.size()) {
    throw std::invalid_argument("power_spectrum: signal shorter than one segment");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw std::invalid_argument("power_spectrum: overlap must lie in [0, 1)");
  }
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("power_spectrum: sample rate must be positive");
  }

  const int hop = std::max(1, static_cast<int>(std::lround(segment_len * (1.0 - overlap))));
  Vec window(segment_len);
  for (int i = 0; i < segment_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / segment_len);
  }
  const double win_power = window.squaredNorm();

  const int n_bins = segment_len / 2 + 1;
  Vec acc = Vec::Zero(n_bins);
  int n_segments = 0;
  std::vector<Cplx> buf(static_cast<std::size_t>(segment_len));
  for (int start = 0; start + segment_len <= signal.size(); start += hop) {
    for (int i = 0; i < segment_len; ++i) {
      buf[static_cast<std::size_t>(i)] = Cplx(signal[start + i] * window[i], 0.0);
    }
    if (is_power_of_two(segment_len)) {
      fft_radix2(buf);
    } else {
      buf = dft(buf);
    }
    for (int k = 0; k < n_bins; ++k) {
      double p = std::norm(buf[static_cast<std::size_t>(k)]) / (sample_rate_hz * win_power);
      if (k != 0 && k != segment_len / 2) p *= 2.0;  // one-sided
      acc[k] += p;
    }
    ++n_segments;
  }
  acc /= static_cast<double>(n_segments);

  PowerSpectrum out;
  out.freqs_hz = Vec(n_bins);
  out.psd_db = Vec(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    out.freqs_hz[k] = k * sample_rate_hz / segment_len;
    out.psd_db[k] = 10.0 * std::log10(std::max(acc[k], 1e-30));
  }
  return out;
}

double residual_si_power(const std::vector<SignalRecord>& records,
                         const Vec& si_estimate) {
  if (records.empty()) {
    throw std::invalid_argument("residual_si_power: no records");
  }
  double acc = 0.0;
  for (const auto& r : records) {
    if (r.i_vec.size() != si_estimate.size()) {
      throw std::invalid_argument("residual_si_power: estimate length mismatch");
    }
    const double res = r.si_component - si_estimate.dot(r.i_vec);
    acc += res * res;
  }
  acc /= static_cast<double>(records.size());
  return acc > 0.0 ? std::max(10.0 * std::log10(acc), kNmsdFloorDb) : kNmsdFloorDb;
}

JointChannelEstimate<double> mmse_baseline(const std::vector<SignalRecord>& records,
                                           int si_len, int rt_len,
                                           double noise_var) {
  const int dim = si_len + rt_len;
  if (static_cast<int>(records.size()) < dim) {
    throw std::invalid_argument("mmse_baseline: need at least si_len + rt_len records");
  }
  if (!(noise_var >= 0.0)) {
    throw std::invalid_argument("mmse_baseline: noise_var must be non-negative");
  }

  Mat normal = noise_var * Mat::Identity(dim, dim);
  Vec rhs = Vec::Zero(dim);
  Vec u(dim);
  for (const auto& r : records) {
    if (r.i_obs_vec.size() != si_len || r.x_vec.size() != rt_len) {
      throw std::invalid_argument("mmse_baseline: record window length mismatch");
    }
    u << r.i_obs_vec, r.x_vec;
    normal.noalias() += u * u.transpose();
    rhs += u * r.y;
  }

  Eigen::LDLT<Mat> solver(normal);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("mmse_baseline: normal-equation solve failed");
  }
  const Vec c = solver.solve(rhs);
  if (!c.allFinite()) {
    throw std::runtime_error("mmse_baseline: singular regularized normal matrix");
  }
  return {c.head(si_len), c.tail(rt_len)};
}

}  // namespace startls
