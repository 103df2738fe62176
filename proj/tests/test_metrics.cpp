#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "startls/metrics.hpp"

using namespace startls;

namespace {

Vec random_vec(int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

std::vector<SignalRecord> random_records(int count, int si_len, int rt_len,
                                         const Vec& w, const Vec& h, double noise_sd,
                                         std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<SignalRecord> records(static_cast<std::size_t>(count));
  for (auto& r : records) {
    r.i_vec = random_vec(si_len, rng);
    r.i_obs_vec = r.i_vec;
    r.x_vec = random_vec(rt_len, rng);
    r.si_component = w.dot(r.i_vec);
    r.rt_component = h.dot(r.x_vec);
    r.noise = noise_sd * gauss(rng);
    r.y = r.si_component + r.rt_component + r.noise;
  }
  return records;
}

// Independent route: least squares on the ridge-augmented system via QR.
JointChannelEstimate<double> mmse_oracle(const std::vector<SignalRecord>& records,
                                         int si_len, int rt_len, double noise_var) {
  const int dim = si_len + rt_len;
  const int rows = static_cast<int>(records.size());
  Mat a(rows + dim, dim);
  Vec b = Vec::Zero(rows + dim);
  for (int r = 0; r < rows; ++r) {
    a.row(r).head(si_len) = records[static_cast<std::size_t>(r)].i_obs_vec;
    a.row(r).tail(rt_len) = records[static_cast<std::size_t>(r)].x_vec;
    b[r] = records[static_cast<std::size_t>(r)].y;
  }
  a.bottomRows(dim) = std::sqrt(noise_var) * Mat::Identity(dim, dim);
  const Vec c = a.colPivHouseholderQr().solve(b);
  return {c.head(si_len), c.tail(rt_len)};
}

}  // namespace

TEST_CASE("nmsd basics") {
  Vec h(3);
  h << 1, 2, 3;
  CHECK(nmsd(h, h) == kNmsdFloorDb);
  CHECK(nmsd(Vec(Vec::Zero(3)), h) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(nmsd(Vec(2.0 * h), h) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(nmsd(h, Vec(Vec::Zero(3))), std::invalid_argument);
  CHECK_THROWS_AS(nmsd(Vec(Vec::Zero(2)), h), std::invalid_argument);
}

TEST_CASE("nmsd depends only on the relative error energy") {
  std::mt19937_64 rng(1);
  const Vec h1 = random_vec(8, rng);
  const Vec h2 = random_vec(8, rng) * 10.0;
  Vec d1 = random_vec(8, rng);
  Vec d2 = random_vec(8, rng);
  d1 *= 0.1 * h1.norm() / d1.norm();
  d2 *= 0.1 * h2.norm() / d2.norm();
  CHECK(nmsd(Vec(h1 + d1), h1) == doctest::Approx(nmsd(Vec(h2 + d2), h2)).epsilon(1e-12));
}

TEST_CASE("psd concentrates an on-bin sinusoid") {
  const double fs = 8000.0;
  const int n = 1 << 14;
  Vec sig(n);
  for (int i = 0; i < n; ++i) {
    sig[i] = std::sin(2.0 * std::numbers::pi * (fs / 8.0) * i / fs);
  }
  const auto ps = power_spectrum(sig, fs, 256, 0.5);
  const int peak_bin = 256 / 8;
  CHECK(ps.freqs_hz[peak_bin] == doctest::Approx(fs / 8.0));
  int argmax = 0;
  ps.psd_db.maxCoeff(&argmax);
  CHECK(argmax == peak_bin);
  for (int k = 0; k < ps.psd_db.size(); ++k) {
    if (std::abs(k - peak_bin) <= 2) continue;
    CHECK(ps.psd_db[peak_bin] - ps.psd_db[k] >= 30.0);
  }
}

TEST_CASE("psd integrates to the signal power") {
  std::mt19937_64 rng(2);
  const int n = 100000;
  const Vec noise = random_vec(n, rng);
  const auto ps = power_spectrum(noise, 10000.0, 256, 0.5);
  const double df = ps.freqs_hz[1] - ps.freqs_hz[0];
  double total = 0.0;
  for (int k = 0; k < ps.psd_db.size(); ++k) {
    total += power_from_db(ps.psd_db[k]) * df;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("scaling the signal shifts the psd uniformly") {
  std::mt19937_64 rng(3);
  const Vec sig = random_vec(4096, rng);
  const auto base = power_spectrum(sig, 1000.0);
  const auto scaled = power_spectrum(Vec(10.0 * sig), 1000.0);
  for (int k = 0; k < base.psd_db.size(); ++k) {
    CHECK(scaled.psd_db[k] - base.psd_db[k] == doctest::Approx(20.0).epsilon(1e-9));
  }
}

TEST_CASE("psd grid depends only on segment length and sample rate") {
  std::mt19937_64 rng(4);
  const auto a = power_spectrum(random_vec(2000, rng), 10000.0, 128);
  const auto b = power_spectrum(random_vec(9000, rng), 10000.0, 128);
  REQUIRE(a.freqs_hz.size() == b.freqs_hz.size());
  CHECK(a.freqs_hz.size() == 65);
  for (int k = 0; k < a.freqs_hz.size(); ++k) {
    CHECK(a.freqs_hz[k] == b.freqs_hz[k]);
  }
  CHECK(a.freqs_hz[64] == doctest::Approx(5000.0));
}

TEST_CASE("psd validates its inputs") {
  std::mt19937_64 rng(5);
  const Vec sig = random_vec(100, rng);
  CHECK_THROWS_AS(power_spectrum(sig, 1000.0, 256), std::invalid_argument);
  CHECK_THROWS_AS(power_spectrum(sig, 1000.0, 64, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(power_spectrum(sig, -1.0, 64), std::invalid_argument);
}

TEST_CASE("residual SI power per the hidden truth") {
  std::mt19937_64 rng(6);
  const Vec w = random_vec(4, rng, 3.0);
  const Vec h = random_vec(10, rng);
  const auto records = random_records(4000, 4, 10, w, h, 0.1, rng);

  CHECK(residual_si_power(records, w) == kNmsdFloorDb);

  double si_pow = 0.0;
  for (const auto& r : records) si_pow += r.si_component * r.si_component;
  si_pow /= static_cast<double>(records.size());
  CHECK(residual_si_power(records, Vec(Vec::Zero(4))) ==
        doctest::Approx(10.0 * std::log10(si_pow)).epsilon(1e-12));

  CHECK_THROWS_AS(residual_si_power({}, w), std::invalid_argument);
}

TEST_CASE("mmse recovers the channels from noiseless data") {
  std::mt19937_64 rng(7);
  const Vec w = random_vec(4, rng, 2.0);
  const Vec h = random_vec(10, rng);
  const auto records = random_records(400, 4, 10, w, h, 0.0, rng);
  const auto est = mmse_baseline(records, 4, 10, 1e-12);
  CHECK(nmsd(est.si_part, w) < -100.0);
  CHECK(nmsd(est.rt_part, h) < -100.0);
}

TEST_CASE("overwhelming regularization shrinks the estimate to zero") {
  std::mt19937_64 rng(8);
  const Vec w = random_vec(4, rng);
  const Vec h = random_vec(10, rng);
  const auto records = random_records(400, 4, 10, w, h, 0.1, rng);
  const auto est = mmse_baseline(records, 4, 10, 1e12);
  CHECK(est.rt_part.norm() < 1e-6);
  CHECK(nmsd(est.rt_part, h) == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("mmse matches an independent QR solve") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec w = random_vec(4, rng, 2.0);
    const Vec h = random_vec(10, rng);
    const auto records = random_records(200, 4, 10, w, h, 0.5, rng);
    const double noise_var = 0.25;
    const auto a = mmse_baseline(records, 4, 10, noise_var);
    const auto b = mmse_oracle(records, 4, 10, noise_var);
    Vec ca(14), cb(14);
    ca << a.si_part, a.rt_part;
    cb << b.si_part, b.rt_part;
    CHECK((ca - cb).norm() / cb.norm() < 1e-10);
  }
}

TEST_CASE("mmse is a block estimator, invariant to record order") {
  std::mt19937_64 rng(10);
  const Vec w = random_vec(4, rng);
  const Vec h = random_vec(10, rng);
  auto records = random_records(300, 4, 10, w, h, 0.3, rng);
  const auto base = mmse_baseline(records, 4, 10, 0.09);
  std::shuffle(records.begin(), records.end(), rng);
  const auto shuffled = mmse_baseline(records, 4, 10, 0.09);
  CHECK((base.rt_part - shuffled.rt_part).norm() < 1e-10);
  CHECK((base.si_part - shuffled.si_part).norm() < 1e-10);
}

TEST_CASE("mmse error is non-increasing in the block length on clean data") {
  std::mt19937_64 rng(11);
  const Vec w = random_vec(4, rng, 2.0);
  const Vec h = random_vec(10, rng);
  const auto records = random_records(800, 4, 10, w, h, 0.0, rng);
  double prev = 1e9;
  for (int count : {50, 100, 200, 400, 800}) {
    const std::vector<SignalRecord> block(records.begin(), records.begin() + count);
    const auto est = mmse_baseline(block, 4, 10, 1e-9);
    const double err = nmsd(est.rt_part, h);
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
}

TEST_CASE("mmse requires enough rows") {
  std::mt19937_64 rng(12);
  const Vec w = random_vec(4, rng);
  const Vec h = random_vec(10, rng);
  const auto records = random_records(10, 4, 10, w, h, 0.1, rng);
  CHECK_THROWS_AS(mmse_baseline(records, 4, 10, 0.1), std::invalid_argument);
}
