#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace startls {

namespace detail {

// Median of [first, last); reorders the range.
template <typename Scalar>
Scalar median_inplace(Scalar* first, Scalar* last) {
  const std::ptrdiff_t n = last - first;
  Scalar* mid = first + n / 2;
  std::nth_element(first, mid, last);
  if (n % 2 == 1) {
    return *mid;
  }
  // Lower central element is the max of the left partition.
  const Scalar lo = *std::max_element(first, mid);
  return (lo + *mid) / Scalar(2);
}

}  // namespace detail

/// Median of a window of values. Even lengths use the mean of the two
/// central order statistics.
template <typename Scalar>
Scalar median(std::vector<Scalar> window) {
  if (window.empty()) {
    throw std::invalid_argument("median: empty window");
  }
  return detail::median_inplace(window.data(), window.data() + window.size());
}

/// Clipped quadratic score: e^2/2 inside the threshold, saturates at xi^2/2.
template <typename Scalar>
Scalar mest_rho(Scalar e, Scalar xi) {
  if (!(xi > Scalar(0))) {
    throw std::invalid_argument("mest_rho: xi must be positive");
  }
  const Scalar a = std::abs(e);
  return a < xi ? e * e / Scalar(2) : xi * xi / Scalar(2);
}

/// Sliding-window robust error-variance tracker. The window holds the last
/// nw squared errors; sigma2 follows a leaky recursion on the window median.
template <typename Scalar>
struct MEstimateState {
  std::vector<Scalar> error_window;  // empty until the first sample is seen
  Scalar sigma2 = Scalar(0);
  Scalar lambda_sigma = Scalar(0.98);
  Scalar c1 = Scalar(2.576);
  int nw = 14;
  Scalar c2 = Scalar(0);  // 1.483 * (1 + 5 / (nw - 1))

  // Scale reference for the threshold floor when sigma2 is exactly zero.
  Scalar xi_floor_scale = Scalar(1e-6);
  Scalar obs_mean_square = Scalar(0);
  long obs_count = 0;

  static Scalar c2_for_window(int nw) {
    return Scalar(1.483) * (Scalar(1) + Scalar(5) / Scalar(nw - 1));
  }

  static MEstimateState make(int nw, Scalar lambda_sigma = Scalar(0.98),
                             Scalar c1 = Scalar(2.576)) {
    if (nw < 2) {
      throw std::invalid_argument("MEstimateState: nw must be >= 2");
    }
    if (!(lambda_sigma >= Scalar(0.9) && lambda_sigma < Scalar(1))) {
      throw std::invalid_argument(
          "MEstimateState: lambda_sigma must lie in [0.9, 1)");
    }
    if (!(c1 > Scalar(0))) {
      throw std::invalid_argument("MEstimateState: c1 must be positive");
    }
    MEstimateState s;
    s.nw = nw;
    s.lambda_sigma = lambda_sigma;
    s.c1 = c1;
    s.c2 = c2_for_window(nw);
    s.error_window.reserve(static_cast<std::size_t>(nw));
    return s;
  }

  bool initialized() const { return !error_window.empty(); }
};

namespace detail {

template <typename Scalar>
void mest_sigma_update_inplace(MEstimateState<Scalar>& state, Scalar e,
                               bool is_first_sample) {
  const Scalar e2 = e * e;
  if (is_first_sample || !state.initialized()) {
    state.error_window.assign(static_cast<std::size_t>(state.nw), e2);
  } else {
    state.error_window.erase(state.error_window.begin());
    state.error_window.push_back(e2);
  }
  Scalar med;
  if (state.nw <= 64) {
    Scalar buf[64];
    std::copy(state.error_window.begin(), state.error_window.end(), buf);
    med = median_inplace(buf, buf + state.nw);
  } else {
    med = median(state.error_window);
  }
  state.sigma2 = state.lambda_sigma * state.sigma2 +
                 state.c2 * (Scalar(1) - state.lambda_sigma) * med;
}

template <typename Scalar>
void mest_note_observation_inplace(MEstimateState<Scalar>& state, Scalar y) {
  state.obs_count += 1;
  state.obs_mean_square +=
      (y * y - state.obs_mean_square) / Scalar(state.obs_count);
}

}  // namespace detail

/// One recursion step of the variance tracker. The first sample replicates
/// e^2 across the whole window; later samples shift the window by one.
template <typename Scalar>
MEstimateState<Scalar> mest_sigma_update(const MEstimateState<Scalar>& state,
                                         Scalar e, bool is_first_sample) {
  MEstimateState<Scalar> next = state;
  detail::mest_sigma_update_inplace(next, e, is_first_sample);
  return next;
}

/// Outlier threshold xi = c1 * sqrt(sigma2), with a positive floor so a
/// degenerate zero-variance state cannot reject everything forever.
template <typename Scalar>
Scalar mest_threshold(const MEstimateState<Scalar>& state) {
  if (state.sigma2 > Scalar(0)) {
    return state.c1 * std::sqrt(state.sigma2);
  }
  const bool have_scale = state.obs_count > 0 && state.obs_mean_square > Scalar(0);
  const Scalar scale = have_scale ? std::sqrt(state.obs_mean_square) : Scalar(1);
  return state.xi_floor_scale * scale;
}

/// Feed an observed output into the floor-scale tracker.
template <typename Scalar>
MEstimateState<Scalar> mest_note_observation(const MEstimateState<Scalar>& state,
                                             Scalar y) {
  MEstimateState<Scalar> next = state;
  detail::mest_note_observation_inplace(next, y);
  return next;
}

}  // namespace startls
