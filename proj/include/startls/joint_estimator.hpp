#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "startls/core_filters.hpp"
#include "startls/robust_stats.hpp"
#include "startls/types.hpp"

namespace startls {

/// One layer's joint channel estimate split into its self-interference and
/// remote-transmission parts; [si_part; rt_part] is the layer's weight vector.
template <typename Scalar>
struct JointChannelEstimate {
  VecX<Scalar> si_part;
  VecX<Scalar> rt_part;
};

template <typename Scalar>
struct JointLayer {
  FilterState<Scalar> filter;
  MEstimateState<Scalar> mest;
};

/// Stack of L joint MTLS filters over dimension si_len + rt_len. Each layer
/// subtracts its SI estimate from its observation before feeding the next
/// layer; the final RT estimate averages the per-layer estimates.
template <typename Scalar>
struct LayerStack {
  std::vector<JointLayer<Scalar>> layers;
  int si_len = 0;
  int rt_len = 0;
  bool include_first_layer_in_average = true;
  long steps_taken = 0;

  static LayerStack make(int si_len, int rt_len, int num_layers, Scalar mu,
                         Scalar gamma, int nw, Scalar lambda_sigma, Scalar c1,
                         bool include_first_layer_in_average = true) {
    if (si_len < 1 || rt_len < 1) {
      throw std::invalid_argument("LayerStack: channel lengths must be >= 1");
    }
    if (num_layers < 1) {
      throw std::invalid_argument("LayerStack: need at least one layer");
    }
    if (num_layers == 1 && !include_first_layer_in_average) {
      throw std::invalid_argument(
          "LayerStack: cannot exclude the first layer of a single-layer stack");
    }
    LayerStack s;
    s.si_len = si_len;
    s.rt_len = rt_len;
    s.include_first_layer_in_average = include_first_layer_in_average;
    s.layers.reserve(static_cast<std::size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l) {
      s.layers.push_back(
          {FilterState<Scalar>::make(si_len + rt_len, mu, gamma, Algorithm::kMtls),
           MEstimateState<Scalar>::make(nw, lambda_sigma, c1)});
    }
    return s;
  }

  int dim() const { return si_len + rt_len; }
  int num_layers() const { return static_cast<int>(layers.size()); }
};

/// u(n) = [local_ref; remote_ref], local reference first.
template <typename Scalar>
VecX<Scalar> build_joint_input(const VecX<Scalar>& local_ref,
                               const VecX<Scalar>& remote_ref) {
  VecX<Scalar> u(local_ref.size() + remote_ref.size());
  u << local_ref, remote_ref;
  return u;
}

template <typename Scalar>
JointChannelEstimate<Scalar> split_joint_estimate(const LayerStack<Scalar>& stack,
                                                  int layer) {
  const auto& w = stack.layers[static_cast<std::size_t>(layer)].filter.weights;
  return {w.head(stack.si_len), w.tail(stack.rt_len)};
}

/// Mean of the per-layer RT estimates; layer 1 can be excluded when the stack
/// was configured that way (helps at high interference-to-signal ratios).
template <typename Scalar>
VecX<Scalar> average_rt_estimate(const LayerStack<Scalar>& stack) {
  const int num_layers = stack.num_layers();
  if (num_layers < 1) {
    throw std::invalid_argument("average_rt_estimate: empty stack");
  }
  const int first = stack.include_first_layer_in_average ? 0 : 1;
  if (first >= num_layers) {
    throw std::invalid_argument(
        "average_rt_estimate: cannot exclude the only layer");
  }
  VecX<Scalar> acc = VecX<Scalar>::Zero(stack.rt_len);
  for (int l = first; l < num_layers; ++l) {
    acc += stack.layers[static_cast<std::size_t>(l)].filter.weights.tail(stack.rt_len);
  }
  return acc / Scalar(num_layers - first);
}

/// Sum of all layers' SI estimates: the total SI reconstruction, since each
/// layer models the residual left by the ones before it.
template <typename Scalar>
VecX<Scalar> cumulative_si_estimate(const LayerStack<Scalar>& stack) {
  VecX<Scalar> acc = VecX<Scalar>::Zero(stack.si_len);
  for (const auto& layer : stack.layers) {
    acc += layer.filter.weights.head(stack.si_len);
  }
  return acc;
}

template <typename Scalar>
struct MmtlsStepResult {
  LayerStack<Scalar> stack;
  VecX<Scalar> rt_estimate;
  std::vector<Scalar> layer_residuals;  // y_(l+1) for each layer l
  std::vector<std::uint8_t> rejected;
};

namespace detail {

template <typename Scalar>
void mmtls_step_inplace(LayerStack<Scalar>& stack, Scalar y,
                        const VecX<Scalar>& u, const VecX<Scalar>& local_ref,
                        bool is_first_sample, Scalar* layer_residuals,
                        std::uint8_t* rejected) {
  if (u.size() != stack.dim()) {
    throw std::invalid_argument("mmtls_step: input vector length mismatch");
  }
  if (local_ref.size() != stack.si_len) {
    throw std::invalid_argument("mmtls_step: local reference length mismatch");
  }
  if (!std::isfinite(y) || !u.allFinite() || !local_ref.allFinite()) {
    throw std::invalid_argument("mmtls_step: non-finite observation or input");
  }
  if (is_first_sample != (stack.steps_taken == 0)) {
    throw std::invalid_argument(
        "mmtls_step: is_first_sample inconsistent with stack history");
  }

  const int num_layers = stack.num_layers();
  Scalar y_layer = y;
  for (int l = 0; l < num_layers; ++l) {
    auto& layer = stack.layers[static_cast<std::size_t>(l)];

    // Subtraction uses the pre-update SI estimate of this layer.
    const Scalar si_hat = layer.filter.weights.head(stack.si_len).dot(local_ref);

    const auto core = mtls_update_inplace(layer.filter, layer.mest, u, y_layer);
    const Scalar y_next = y_layer - si_hat;
    if (layer_residuals) layer_residuals[l] = y_next;
    if (rejected) rejected[l] = core.rejected ? 1 : 0;
    y_layer = y_next;
  }
  stack.steps_taken += 1;
}

}  // namespace detail

/// One joint-estimation step over all layers. Layer l sees y_(l), updates its
/// joint filter, and hands y_(l+1) = y_(l) - w_(l)^T i(n) to the next layer,
/// where w_(l) is the layer's SI estimate before this sample's update.
template <typename Scalar>
MmtlsStepResult<Scalar> mmtls_step(const LayerStack<Scalar>& stack, Scalar y,
                                   const VecX<Scalar>& u,
                                   const VecX<Scalar>& local_ref,
                                   bool is_first_sample) {
  const std::size_t num_layers = static_cast<std::size_t>(stack.num_layers());
  MmtlsStepResult<Scalar> out;
  out.stack = stack;
  out.layer_residuals.resize(num_layers);
  out.rejected.resize(num_layers);
  detail::mmtls_step_inplace(out.stack, y, u, local_ref, is_first_sample,
                             out.layer_residuals.data(), out.rejected.data());
  out.rt_estimate = average_rt_estimate(out.stack);
  return out;
}

/// One training observation. adapt_ref drives the joint regression input;
/// cancel_ref (when non-empty) is the reference used for the inter-layer
/// SI subtraction, otherwise adapt_ref serves both roles.
template <typename Scalar>
struct JointSample {
  Scalar y = Scalar(0);
  VecX<Scalar> adapt_ref;
  VecX<Scalar> cancel_ref;
  VecX<Scalar> pilot;
};

template <typename Scalar>
struct TrainingTrace {
  std::vector<Scalar> nmsd_si_db;  // layer-1 SI estimate vs the true SI taps
  std::vector<Scalar> nmsd_rt_db;  // averaged RT estimate vs the true RT taps
  std::vector<std::vector<std::uint8_t>> rejected;  // [layer][sample]
  LayerStack<Scalar> final_stack;
  VecX<Scalar> final_si_cumulative;
  VecX<Scalar> final_rt_average;
  Scalar floor_db = Scalar(-300);
};

namespace detail {

// Misalignment in dB, clamped at the floor. A zero-energy truth vector falls
// back to absolute (unnormalized) error power.
template <typename Scalar>
Scalar misalignment_db(const VecX<Scalar>& estimate, const VecX<Scalar>& truth,
                       Scalar floor_db) {
  const Scalar ref = truth.squaredNorm();
  const Scalar diff = (estimate - truth).squaredNorm();
  const Scalar ratio = ref > Scalar(0) ? diff / ref : diff;
  if (!(ratio > Scalar(0))) {
    return floor_db;
  }
  return std::max(Scalar(10) * std::log10(ratio), floor_db);
}

}  // namespace detail

/// Run the joint estimator over the first ns samples, tracing per-sample
/// misalignment of the layer-1 SI estimate and of the averaged RT estimate.
template <typename Scalar>
TrainingTrace<Scalar> run_training(const LayerStack<Scalar>& stack,
                                   const std::vector<JointSample<Scalar>>& samples,
                                   int ns, const VecX<Scalar>& si_truth,
                                   const VecX<Scalar>& rt_truth) {
  if (ns < 0 || static_cast<std::size_t>(ns) > samples.size()) {
    throw std::invalid_argument("run_training: fewer records than ns");
  }
  TrainingTrace<Scalar> trace;
  trace.nmsd_si_db.reserve(static_cast<std::size_t>(ns));
  trace.nmsd_rt_db.reserve(static_cast<std::size_t>(ns));
  trace.rejected.assign(static_cast<std::size_t>(stack.num_layers()), {});
  for (auto& per_layer : trace.rejected) {
    per_layer.reserve(static_cast<std::size_t>(ns));
  }

  LayerStack<Scalar> current = stack;
  const std::size_t num_layers = static_cast<std::size_t>(stack.num_layers());
  std::vector<Scalar> residuals(num_layers);
  std::vector<std::uint8_t> rejected(num_layers);
  VecX<Scalar> u(stack.dim());
  for (int n = 0; n < ns; ++n) {
    const auto& s = samples[static_cast<std::size_t>(n)];
    if (s.adapt_ref.size() != stack.si_len || s.pilot.size() != stack.rt_len) {
      throw std::invalid_argument("run_training: record window length mismatch");
    }
    u.head(stack.si_len) = s.adapt_ref;
    u.tail(stack.rt_len) = s.pilot;
    const VecX<Scalar>& cancel =
        s.cancel_ref.size() > 0 ? s.cancel_ref : s.adapt_ref;
    detail::mmtls_step_inplace(current, s.y, u, cancel, n == 0,
                               residuals.data(), rejected.data());

    trace.nmsd_si_db.push_back(detail::misalignment_db(
        current.layers.front().filter.weights.head(current.si_len).eval(),
        si_truth, trace.floor_db));
    trace.nmsd_rt_db.push_back(detail::misalignment_db(
        average_rt_estimate(current), rt_truth, trace.floor_db));
    for (std::size_t l = 0; l < num_layers; ++l) {
      trace.rejected[l].push_back(rejected[l]);
    }
  }
  trace.final_si_cumulative = cumulative_si_estimate(current);
  trace.final_rt_average = average_rt_estimate(current);
  trace.final_stack = std::move(current);
  return trace;
}

}  // namespace startls
