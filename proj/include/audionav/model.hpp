#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "audionav/separation.hpp"
#include "audionav/tensor.hpp"

namespace audionav::rl {

inline constexpr int kActions = 4;
inline constexpr int kQHidden = 64;
inline constexpr double kPreluInit = 0.25;

/// Length of the Q-head input for J sources: 2J spatial means, J
/// magnitude means and 4 agent-info values.
constexpr int q_input_size(int sources) { return 3 * sources + 4; }

template <typename T>
struct QHeadParams {
  Mat<T> w1, b1;   // hidden x in, hidden x 1
  Mat<T> prelu;    // 1 x 1 shared slope
  Mat<T> w2, b2;   // 4 x hidden, 4 x 1

  template <typename F>
  void for_each_trainable(F&& f) {
    f("q.w1", w1);
    f("q.b1", b1);
    f("q.prelu", prelu);
    f("q.w2", w2);
    f("q.b2", b2);
  }
};

template <typename T>
struct ModelParams {
  separation::MaskNetworkParams<T> mask;
  QHeadParams<T> q;

  template <typename F>
  void for_each_trainable(F&& f) {
    mask.for_each_trainable(f);
    q.for_each_trainable(f);
  }
  template <typename F>
  void for_each_buffer(F&& f) {
    mask.for_each_buffer(f);
  }
  /// Trainable tensors followed by buffers.
  template <typename F>
  void for_each_tensor(F&& f) {
    for_each_trainable(f);
    for_each_buffer(f);
  }

  int sources() const { return mask.sources; }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    const_cast<ModelParams&>(*this).for_each_trainable([&](const char*, const Mat<T>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }
};

struct ModelInit {
  int sources = separation::kDefaultSources;
  int hidden = separation::kHiddenUnits;
  int q_hidden = kQHidden;
  std::uint64_t seed = 0;
  bool symmetric_output = false;
};

template <typename T>
ModelParams<T> init_model(const ModelInit& init);

/// Same shapes as `like`, every entry zero (a gradient accumulator).
template <typename T>
ModelParams<T> zeros_like(const ModelParams<T>& like);

template <typename T, typename U>
ModelParams<U> cast_model(const ModelParams<T>& from);

/// [interleaved spatial means || magnitude means || agent info]. Throws
/// DomainError unless the spatial means have length 2J for the J magnitude
/// means and agent info has length 4.
template <typename T>
Vec<T> assemble_q_input(std::span<const T> spatial_means, std::span<const T> magnitude_means,
                        std::span<const T> agent_info);

/// Raw action values for a batch of feature columns (in x B -> 4 x B).
template <typename T>
Mat<T> q_forward(const QHeadParams<T>& q, const Mat<T>& features);

/// Softmax over the action values of one column; diagnostic only.
std::vector<double> q_softmax(std::span<const double> q_values);

/// Saved state of a full forward pass: masks, masked means, Q head.
/// backward() may be called once.
template <typename T>
struct GradientTape {
  separation::MaskTape<T> mask;
  Mat<T> ipd, ild, magnitude;  // bins x (T * B), same column order as the masks
  Mat<T> features;             // in x B
  Mat<T> pre_activation;       // hidden x B
  Mat<T> hidden;               // hidden x B
  Mat<T> q;                    // 4 x B
  bool consumed = false;
};

/// Full pipeline over equal-length observations.
template <typename T>
GradientTape<T> forward_pipeline(const ModelParams<T>& params,
                                 std::span<const separation::ObservationPtr<T>> batch,
                                 separation::BatchNormMode mode);

/// Accumulates dLoss/dParams into `grads` given dLoss/dQ (4 x B). Throws
/// StateError if the tape was already consumed.
template <typename T>
void backward(const ModelParams<T>& params, GradientTape<T>& tape, const Mat<T>& q_grad, ModelParams<T>& grads);

} // namespace audionav::rl
