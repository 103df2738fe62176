#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "startls/robust_stats.hpp"
#include "startls/types.hpp"

namespace startls {

enum class Algorithm { kLms, kTls, kMtls };

/// One time step of the errors-in-variables regression stream: a (possibly
/// noisy) input window and the observed scalar output.
template <typename Scalar>
struct RegressionSample {
  VecX<Scalar> input;
  Scalar output = Scalar(0);
  long time_index = 0;
};

/// Adaptive filter state: weight vector plus the update hyperparameters.
/// gamma is the output-to-input noise-variance ratio normalizing the
/// total-least-squares cost denominator ||w||^2 + gamma.
template <typename Scalar>
struct FilterState {
  VecX<Scalar> weights;
  Scalar step_size = Scalar(0);
  Scalar gamma = Scalar(1);
  Algorithm algorithm = Algorithm::kTls;

  static FilterState make(int dim, Scalar step_size, Scalar gamma,
                          Algorithm algorithm) {
    if (dim < 1) {
      throw std::invalid_argument("FilterState: dimension must be >= 1");
    }
    if (!(step_size > Scalar(0))) {
      throw std::invalid_argument("FilterState: step_size must be positive");
    }
    if (!(gamma > Scalar(0))) {
      throw std::invalid_argument("FilterState: gamma must be positive");
    }
    FilterState s;
    s.weights = VecX<Scalar>::Zero(dim);
    s.step_size = step_size;
    s.gamma = gamma;
    s.algorithm = algorithm;
    return s;
  }

  int dim() const { return static_cast<int>(weights.size()); }
};

namespace detail {

template <typename Scalar>
void check_dims(const VecX<Scalar>& weights, const VecX<Scalar>& input) {
  if (weights.size() != input.size()) {
    throw std::invalid_argument("sample input length does not match filter dimension");
  }
}

template <typename Scalar>
Scalar cost_denominator(const VecX<Scalar>& weights, Scalar gamma) {
  const Scalar q = weights.squaredNorm() + gamma;
  if (!(q > Scalar(0))) {
    throw std::runtime_error("cost denominator ||w||^2 + gamma is not positive");
  }
  return q;
}

template <typename Scalar>
void check_finite(const VecX<Scalar>& weights) {
  if (!weights.allFinite()) {
    throw std::runtime_error("filter update produced non-finite weights");
  }
}

// Applies w += mu * (alpha * (x + alpha * w)) and returns the a-priori error.
// All update paths funnel through here so trajectories replay bit-exactly.
template <typename Scalar>
Scalar tls_update_inplace(FilterState<Scalar>& state, const VecX<Scalar>& input,
                          Scalar output) {
  check_dims(state.weights, input);
  const Scalar q = cost_denominator(state.weights, state.gamma);
  const Scalar e = output - state.weights.dot(input);
  const Scalar alpha = e / q;
  state.weights += state.step_size * (alpha * (input + alpha * state.weights));
  check_finite(state.weights);
  return e;
}

template <typename Scalar>
Scalar lms_update_inplace(FilterState<Scalar>& state, const VecX<Scalar>& input,
                          Scalar output) {
  check_dims(state.weights, input);
  const Scalar e = output - state.weights.dot(input);
  state.weights += state.step_size * e * input;
  check_finite(state.weights);
  return e;
}

template <typename Scalar>
struct MtlsCoreResult {
  Scalar prior_error = Scalar(0);
  bool rejected = false;
};

template <typename Scalar>
MtlsCoreResult<Scalar> mtls_update_inplace(FilterState<Scalar>& state,
                                           MEstimateState<Scalar>& mstate,
                                           const VecX<Scalar>& input,
                                           Scalar output) {
  check_dims(state.weights, input);
  MtlsCoreResult<Scalar> out;
  out.prior_error = output - state.weights.dot(input);

  const bool first = !mstate.initialized();
  mest_note_observation_inplace(mstate, output);
  mest_sigma_update_inplace(mstate, out.prior_error, first);
  const Scalar xi = mest_threshold(mstate);

  if (first || std::abs(out.prior_error) < xi) {
    tls_update_inplace(state, input, output);
    out.rejected = false;
  } else {
    out.rejected = true;
  }
  return out;
}

}  // namespace detail

/// Empirical Rayleigh-quotient cost (1/N) sum (y_n - w^T x_n)^2 / (||w||^2 + gamma).
template <typename Scalar>
Scalar tls_cost(const VecX<Scalar>& weights,
                const std::vector<RegressionSample<Scalar>>& samples,
                Scalar gamma) {
  if (!(gamma > Scalar(0))) {
    throw std::invalid_argument("tls_cost: gamma must be positive");
  }
  if (samples.empty()) {
    return Scalar(0);
  }
  const Scalar q = detail::cost_denominator(weights, gamma);
  Scalar acc = Scalar(0);
  for (const auto& s : samples) {
    detail::check_dims(weights, s.input);
    const Scalar e = s.output - weights.dot(s.input);
    acc += e * e;
  }
  return acc / (q * static_cast<Scalar>(samples.size()));
}

/// Descent direction alpha * (x + alpha * w) with alpha = e / (||w||^2 + gamma).
/// The update ADDS step_size times this vector; it equals minus the clipped-loss
/// gradient inside the acceptance region, so TLS and MTLS share this step.
template <typename Scalar>
VecX<Scalar> tls_gradient(const FilterState<Scalar>& state,
                          const RegressionSample<Scalar>& sample) {
  detail::check_dims(state.weights, sample.input);
  const Scalar q = detail::cost_denominator(state.weights, state.gamma);
  const Scalar e = sample.output - state.weights.dot(sample.input);
  const Scalar alpha = e / q;
  return alpha * (sample.input + alpha * state.weights);
}

template <typename Scalar>
struct StepResult {
  FilterState<Scalar> state;
  Scalar prior_error = Scalar(0);
};

/// Total-least-mean-squares update w += mu * alpha * (x + alpha * w).
template <typename Scalar>
StepResult<Scalar> tls_step(const FilterState<Scalar>& state,
                            const RegressionSample<Scalar>& sample) {
  if (state.algorithm != Algorithm::kTls) {
    throw std::invalid_argument("tls_step: state.algorithm must be kTls");
  }
  StepResult<Scalar> out;
  out.state = state;
  out.prior_error = detail::tls_update_inplace(out.state, sample.input, sample.output);
  return out;
}

/// Baseline least-mean-squares update w += mu * e * x.
template <typename Scalar>
StepResult<Scalar> lms_step(const FilterState<Scalar>& state,
                            const RegressionSample<Scalar>& sample) {
  if (state.algorithm != Algorithm::kLms) {
    throw std::invalid_argument("lms_step: state.algorithm must be kLms");
  }
  StepResult<Scalar> out;
  out.state = state;
  out.prior_error = detail::lms_update_inplace(out.state, sample.input, sample.output);
  return out;
}

template <typename Scalar>
struct MtlsStepResult {
  FilterState<Scalar> state;
  MEstimateState<Scalar> mstate;
  Scalar prior_error = Scalar(0);
  bool rejected = false;
};

/// Robust TLS update. The error feeds the variance tracker first; the weight
/// step is applied only when |e| clears the threshold. The first sample is
/// always processed (it seeds the error window). On rejection the weights are
/// returned bit-identical to the input.
template <typename Scalar>
MtlsStepResult<Scalar> mtls_step(const FilterState<Scalar>& state,
                                 const MEstimateState<Scalar>& mstate,
                                 const RegressionSample<Scalar>& sample) {
  if (state.algorithm != Algorithm::kMtls) {
    throw std::invalid_argument("mtls_step: state.algorithm must be kMtls");
  }
  MtlsStepResult<Scalar> out;
  out.state = state;
  out.mstate = mstate;
  const auto core =
      detail::mtls_update_inplace(out.state, out.mstate, sample.input, sample.output);
  out.prior_error = core.prior_error;
  out.rejected = core.rejected;
  return out;
}

}  // namespace startls
