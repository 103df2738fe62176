#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>
#include <vector>

#include "startls/core_filters.hpp"
#include "startls/star_sim.hpp"

using namespace startls;

namespace {

Vec unit(int dim, int axis) {
  Vec v = Vec::Zero(dim);
  v[axis] = 1.0;
  return v;
}

RegressionSample<double> sample_of(const Vec& x, double y, long n = 0) {
  return {x, y, n};
}

Vec random_vec(int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

// Independent double-loop evaluation of the Rayleigh cost, no Eigen ops.
double tls_cost_oracle(const Vec& w, const std::vector<RegressionSample<double>>& samples,
                       double gamma) {
  if (samples.empty()) return 0.0;
  double wnorm2 = 0.0;
  for (int i = 0; i < w.size(); ++i) wnorm2 += w[i] * w[i];
  double acc = 0.0;
  for (const auto& s : samples) {
    double dot = 0.0;
    for (int i = 0; i < w.size(); ++i) dot += w[i] * s.input[i];
    const double e = s.output - dot;
    acc += e * e / (wnorm2 + gamma);
  }
  return acc / static_cast<double>(samples.size());
}

double single_sample_rayleigh_cost(const Vec& w, const RegressionSample<double>& s,
                                   double gamma) {
  const double e = s.output - w.dot(s.input);
  return e * e / (w.squaredNorm() + gamma);
}

// Central finite differences of f at w.
template <typename F>
Vec finite_difference(const Vec& w, F f) {
  Vec g(w.size());
  for (int i = 0; i < w.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(w[i]));
    Vec wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    g[i] = (f(wp) - f(wm)) / (2.0 * h);
  }
  return g;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("tls_cost is zero for exact noiseless fits and empty input") {
  std::mt19937_64 rng(1);
  const Vec h = random_vec(5, rng);
  std::vector<RegressionSample<double>> samples;
  for (int n = 0; n < 10; ++n) {
    const Vec x = random_vec(5, rng);
    samples.push_back(sample_of(x, h.dot(x), n));
  }
  CHECK(tls_cost(h, samples, 1.0) == doctest::Approx(0.0).epsilon(1e-24));
  CHECK(tls_cost(h, {}, 1.0) == 0.0);
}

TEST_CASE("tls_cost single-sample hand value") {
  const Vec w = Vec::Zero(3);
  std::vector<RegressionSample<double>> samples{sample_of(unit(3, 0), 2.0)};
  CHECK(tls_cost(w, samples, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("tls_cost matches the double-loop oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec w = random_vec(4, rng);
    std::vector<RegressionSample<double>> samples;
    for (int n = 0; n < 20; ++n) {
      samples.push_back(sample_of(random_vec(4, rng), random_vec(1, rng)[0], n));
    }
    const double gamma = 0.3 + trial * 0.1;
    const double got = tls_cost(w, samples, gamma);
    const double want = tls_cost_oracle(w, samples, gamma);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("tls_cost is invariant under sample order") {
  std::mt19937_64 rng(3);
  const Vec w = random_vec(6, rng);
  std::vector<RegressionSample<double>> samples;
  for (int n = 0; n < 30; ++n) {
    samples.push_back(sample_of(random_vec(6, rng), random_vec(1, rng)[0], n));
  }
  const double base = tls_cost(w, samples, 1.0);
  std::shuffle(samples.begin(), samples.end(), rng);
  CHECK(tls_cost(w, samples, 1.0) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("tls_cost rejects dimension mismatch") {
  const Vec w = Vec::Zero(3);
  std::vector<RegressionSample<double>> samples{sample_of(Vec::Zero(4), 1.0)};
  CHECK_THROWS_AS(tls_cost(w, samples, 1.0), std::invalid_argument);
}

TEST_CASE("tls_gradient trivial cases") {
  auto state = FilterState<double>::make(4, 0.1, 1.0, Algorithm::kTls);
  std::mt19937_64 rng(4);
  state.weights = random_vec(4, rng);
  const Vec x = random_vec(4, rng);
  // Zero residual: direction vanishes.
  const auto g0 = tls_gradient(state, sample_of(x, state.weights.dot(x)));
  CHECK(g0.norm() == 0.0);

  auto zero = FilterState<double>::make(4, 0.1, 1.0, Algorithm::kTls);
  const auto g1 = tls_gradient(zero, sample_of(unit(4, 0), 1.0));
  CHECK(bitwise_equal(g1, unit(4, 0)));
}

TEST_CASE("tls_gradient equals -1/2 finite difference of the single-sample cost") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto state = FilterState<double>::make(6, 0.1, 0.5 + 0.1 * trial, Algorithm::kTls);
    state.weights = random_vec(6, rng);
    const auto s = sample_of(random_vec(6, rng), random_vec(1, rng)[0]);
    const Vec dir = tls_gradient(state, s);
    const Vec fd = finite_difference(state.weights, [&](const Vec& w) {
      return single_sample_rayleigh_cost(w, s, state.gamma);
    });
    const Vec expected = -0.5 * fd;
    REQUIRE(dir.norm() > 0.0);
    CHECK((dir - expected).norm() / expected.norm() < 1e-6);

    // A small move along the returned direction decreases the cost.
    const double before = single_sample_rayleigh_cost(state.weights, s, state.gamma);
    const double after =
        single_sample_rayleigh_cost(state.weights + 1e-6 * dir, s, state.gamma);
    CHECK(after <= before);
  }
}

TEST_CASE("clipped-loss gradient matches finite differences inside the threshold") {
  std::mt19937_64 rng(6);
  int checked = 0;
  while (checked < 100) {
    const int dim = 3 + static_cast<int>(rng() % 6);
    const Vec w = random_vec(dim, rng);
    const Vec x = random_vec(dim, rng);
    const double y = random_vec(1, rng)[0];
    const double gamma = 0.2 + (rng() % 10) * 0.2;

    const double q = w.squaredNorm() + gamma;
    const double e = y - w.dot(x);
    if (std::abs(e) < 1e-3) continue;  // keep the ratio test well-scaled
    const double xi = 2.0 * std::abs(e) + 1.0;  // strictly inside the branch

    // Gradient of rho(e)/ (||w||^2 + gamma) as printed for the accept branch.
    const Vec analytic = -((q * e) * x + (e * e) * w) / (q * q);
    const Vec fd = finite_difference(w, [&](const Vec& wp) {
      const double ep = y - wp.dot(x);
      return mest_rho(ep, xi) / (wp.squaredNorm() + gamma);
    });
    CHECK((analytic - fd).norm() / fd.norm() < 1e-6);

    // The shared update direction is exactly the negated gradient.
    auto state = FilterState<double>::make(dim, 0.1, gamma, Algorithm::kTls);
    state.weights = w;
    const Vec dir = tls_gradient(state, sample_of(x, y));
    CHECK((dir + analytic).norm() / dir.norm() < 1e-12);
    ++checked;
  }
}

TEST_CASE("tls_step fixed point and hand value") {
  std::mt19937_64 rng(7);
  auto state = FilterState<double>::make(5, 0.1, 1.0, Algorithm::kTls);
  state.weights = random_vec(5, rng);
  const Vec x = random_vec(5, rng);
  const auto r = tls_step(state, sample_of(x, state.weights.dot(x)));
  CHECK(bitwise_equal(r.state.weights, state.weights));
  CHECK(r.prior_error == 0.0);

  auto zero = FilterState<double>::make(4, 0.1, 1.0, Algorithm::kTls);
  const auto r2 = tls_step(zero, sample_of(unit(4, 0), 1.0));
  CHECK(r2.prior_error == 1.0);
  CHECK(r2.state.weights[0] == doctest::Approx(0.1).epsilon(1e-15));
  for (int i = 1; i < 4; ++i) CHECK(r2.state.weights[i] == 0.0);
}

TEST_CASE("lms_step fixed point and hand value") {
  auto zero = FilterState<double>::make(4, 0.5, 1.0, Algorithm::kLms);
  const auto r = lms_step(zero, sample_of(unit(4, 0), 1.0));
  CHECK(r.state.weights[0] == 0.5);
  CHECK(r.prior_error == 1.0);

  std::mt19937_64 rng(8);
  auto state = FilterState<double>::make(4, 0.5, 1.0, Algorithm::kLms);
  state.weights = random_vec(4, rng);
  const Vec x = random_vec(4, rng);
  const auto r2 = lms_step(state, sample_of(x, state.weights.dot(x)));
  CHECK(bitwise_equal(r2.state.weights, state.weights));
}

TEST_CASE("steps validate algorithm tag and dimensions") {
  auto tls = FilterState<double>::make(3, 0.1, 1.0, Algorithm::kTls);
  auto lms = FilterState<double>::make(3, 0.1, 1.0, Algorithm::kLms);
  CHECK_THROWS_AS(tls_step(lms, sample_of(Vec::Zero(3), 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(lms_step(tls, sample_of(Vec::Zero(3), 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(tls_step(tls, sample_of(Vec::Zero(2), 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(FilterState<double>::make(3, -0.1, 1.0, Algorithm::kTls),
                  std::invalid_argument);
  CHECK_THROWS_AS(FilterState<double>::make(3, 0.1, 0.0, Algorithm::kTls),
                  std::invalid_argument);
}

TEST_CASE("small-step descent on the single-sample cost") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto state = FilterState<double>::make(5, 1e-4, 1.0, Algorithm::kTls);
    state.weights = random_vec(5, rng);
    state.weights /= state.weights.norm();
    Vec x = random_vec(5, rng);
    x /= x.norm();
    const auto s = sample_of(x, random_vec(1, rng)[0]);
    const double before = single_sample_rayleigh_cost(state.weights, s, 1.0);
    const auto r = tls_step(state, s);
    const double after = single_sample_rayleigh_cost(r.state.weights, s, 1.0);
    CHECK(after <= before + 1e-15);
  }
}

TEST_CASE("update operations are pure") {
  std::mt19937_64 rng(10);
  auto state = FilterState<double>::make(6, 0.05, 1.0, Algorithm::kMtls);
  state.weights = random_vec(6, rng);
  auto mest = MEstimateState<double>::make(8);
  mest = mest_sigma_update(mest, 0.4, true);
  const auto s = sample_of(random_vec(6, rng), 1.3, 1);

  const Vec weights_before = state.weights;
  const auto r1 = mtls_step(state, mest, s);
  const auto r2 = mtls_step(state, mest, s);
  CHECK(bitwise_equal(state.weights, weights_before));
  CHECK(bitwise_equal(r1.state.weights, r2.state.weights));
  CHECK(r1.mstate.sigma2 == r2.mstate.sigma2);
  CHECK(r1.prior_error == r2.prior_error);
  CHECK(r1.rejected == r2.rejected);
}

TEST_CASE("mtls rejection leaves weights bit-identical") {
  std::mt19937_64 rng(11);
  auto state = FilterState<double>::make(5, 0.05, 1.0, Algorithm::kMtls);
  state.weights = random_vec(5, rng);
  auto mest = MEstimateState<double>::make(10);
  // Calibrate the tracker on small errors first.
  {
    auto seeded = mtls_step(state, mest, sample_of(state.weights, state.weights.squaredNorm() + 1e-3, 0));
    state = seeded.state;
    mest = seeded.mstate;
    for (int n = 1; n < 50; ++n) {
      const Vec x = random_vec(5, rng, 0.1);
      auto r = mtls_step(state, mest, sample_of(x, state.weights.dot(x) + 1e-3, n));
      state = r.state;
      mest = r.mstate;
    }
  }
  const Vec x = random_vec(5, rng);
  const auto r = mtls_step(state, mest, sample_of(x, state.weights.dot(x) + 1e6, 50));
  CHECK(r.rejected);
  CHECK(bitwise_equal(r.state.weights, state.weights));
}

TEST_CASE("mtls accepts a zero error with rejected = false") {
  auto state = FilterState<double>::make(3, 0.05, 1.0, Algorithm::kMtls);
  auto mest = MEstimateState<double>::make(5);
  const auto first = mtls_step(state, mest, sample_of(unit(3, 0), 0.0, 0));
  CHECK_FALSE(first.rejected);
  // sigma2 stays zero, so the threshold floor is what accepts the zero error.
  const auto r = mtls_step(first.state, first.mstate, sample_of(unit(3, 1), 0.0, 1));
  CHECK_FALSE(r.rejected);
  CHECK(bitwise_equal(r.state.weights, first.state.weights));
}

TEST_CASE("mtls with the threshold disabled reproduces the TLS trajectory") {
  std::mt19937_64 rng(12);
  auto tls = FilterState<double>::make(6, 0.02, 1.0, Algorithm::kTls);
  auto mtls = FilterState<double>::make(6, 0.02, 1.0, Algorithm::kMtls);
  auto mest = MEstimateState<double>::make(12, 0.98, 1e100);  // xi effectively infinite
  const Vec h = random_vec(6, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int n = 0; n < 500; ++n) {
    const Vec x = random_vec(6, rng);
    const auto s = sample_of(x, h.dot(x) + 0.1 * gauss(rng), n);
    const auto rt = tls_step(tls, s);
    const auto rm = mtls_step(mtls, mest, s);
    tls = rt.state;
    mtls = rm.state;
    mest = rm.mstate;
    CHECK_FALSE(rm.rejected);
    REQUIRE(bitwise_equal(tls.weights, mtls.weights));
  }
}

TEST_CASE("TLS ends below LMS on the noisy-input testbench, paired trials") {
  const int kTrials = 50;
  const int kHorizon = 5000;
  const double kMu = 0.05;
  double lms_sum = 0.0, tls_sum = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    auto rng = make_rng(mix_seed(901, static_cast<std::uint64_t>(t)));
    auto tb = fig2_testbench(rng, kHorizon);
    for (int n = 0; n < kHorizon; ++n) {
      tb.samples[static_cast<std::size_t>(n)].output -= tb.impulses[n];
    }
    auto lms = FilterState<double>::make(10, kMu, 1.0, Algorithm::kLms);
    auto tls = FilterState<double>::make(10, kMu, 1.0, Algorithm::kTls);
    for (const auto& s : tb.samples) {
      lms = lms_step(lms, s).state;
      tls = tls_step(tls, s).state;
    }
    lms_sum += (lms.weights - tb.truth).squaredNorm();
    tls_sum += (tls.weights - tb.truth).squaredNorm();
  }
  CHECK(tls_sum < lms_sum);
}

TEST_CASE("LMS takes an outsized step at an impulse instant") {
  auto rng = make_rng(mix_seed(77, 0));
  const auto tb = fig2_testbench(rng, 3500);
  auto lms = FilterState<double>::make(10, 0.05, 1.0, Algorithm::kLms);
  std::vector<double> step_norms;
  step_norms.reserve(tb.samples.size());
  for (const auto& s : tb.samples) {
    const auto r = lms_step(lms, s);
    step_norms.push_back((r.state.weights - lms.weights).norm());
    lms = r.state;
  }
  double best_ratio = 0.0;
  for (int idx : kFig2ImpulseInstants) {
    std::vector<double> prev(step_norms.begin() + idx - 100, step_norms.begin() + idx);
    std::sort(prev.begin(), prev.end());
    const double med = 0.5 * (prev[49] + prev[50]);
    best_ratio = std::max(best_ratio, step_norms[static_cast<std::size_t>(idx)] / med);
  }
  CHECK(best_ratio > 10.0);
}
