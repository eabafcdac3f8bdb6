#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "audionav/audio.hpp"
#include "audionav/room.hpp"
#include "audionav/spatial.hpp"
#include "audionav/tensor.hpp"

namespace audionav::separation {

inline constexpr int kBins = 129;
inline constexpr int kHiddenUnits = 50;
inline constexpr int kDefaultSources = 2;

enum class BatchNormMode { Training, Inference };

/// Parameter-free features of one stereo excerpt, bins x frames.
template <typename T>
struct Observation {
  Mat<T> magnitude;  // channel-averaged |X|
  Mat<T> ipd;
  Mat<T> ild;
  /// (x / room width, y / room height, sin heading, cos heading).
  Vec<T> agent_info;

  int frames() const { return static_cast<int>(magnitude.cols()); }
};

template <typename T>
using ObservationPtr = std::shared_ptr<const Observation<T>>;

/// Agent position normalised by the room bounding box plus a heading encoding.
std::array<double, 4> agent_info(const AgentPose& pose, const acoustics::RoomSpec& room);

/// STFT-based features of a stereo excerpt.
template <typename T>
Observation<T> make_observation(const AudioBuffer& stereo, const std::array<double, 4>& info);

/// Batch norm over bins, one bidirectional LSTM layer, a linear map to
/// sources x bins logits and a softmax across sources.
template <typename T>
struct MaskNetworkParams {
  int sources = kDefaultSources;
  int hidden = kHiddenUnits;

  Mat<T> bn_gamma, bn_beta;            // bins x 1
  Mat<T> bn_running_mean, bn_running_var;  // not trained
  Mat<T> fwd_w_ih, fwd_w_hh, fwd_b;    // 4H x bins, 4H x H, 4H x 1; gates i, f, g, o
  Mat<T> bwd_w_ih, bwd_w_hh, bwd_b;
  Mat<T> out_w, out_b;                 // (sources * bins) x 2H, (sources * bins) x 1

  /// Calls f(name, matrix) for every trainable tensor in a fixed order.
  template <typename F>
  void for_each_trainable(F&& f) {
    f("mask.bn_gamma", bn_gamma);
    f("mask.bn_beta", bn_beta);
    f("mask.fwd_w_ih", fwd_w_ih);
    f("mask.fwd_w_hh", fwd_w_hh);
    f("mask.fwd_b", fwd_b);
    f("mask.bwd_w_ih", bwd_w_ih);
    f("mask.bwd_w_hh", bwd_w_hh);
    f("mask.bwd_b", bwd_b);
    f("mask.out_w", out_w);
    f("mask.out_b", out_b);
  }
  template <typename F>
  void for_each_buffer(F&& f) {
    f("mask.bn_running_mean", bn_running_mean);
    f("mask.bn_running_var", bn_running_var);
  }
};

struct MaskInit {
  int sources = kDefaultSources;
  int hidden = kHiddenUnits;
  std::uint64_t seed = 0;
  /// Give every source identical output weights, so masks start at 1/J.
  bool symmetric_output = false;
};

/// Orthogonal recurrent blocks, uniform +-1/sqrt(fan-in) input and output
/// weights, forget-gate bias 1.
template <typename T>
MaskNetworkParams<T> init_mask_network(const MaskInit& init);

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Saved intermediates of one mask-network forward pass over a batch whose
/// columns are ordered time-major (column = t * batch + b).
template <typename T>
struct MaskTape {
  BatchNormMode mode = BatchNormMode::Inference;
  int batch = 0;
  int frames = 0;
  Mat<T> normalized;  // x-hat, bins x (T * B)
  Mat<T> bn_out;
  Vec<T> batch_mean, batch_var;
  Mat<T> fwd_gates, bwd_gates;  // activated gates, 4H x (T * B)
  Mat<T> fwd_cell, bwd_cell;    // cell states
  Mat<T> fwd_cell_tanh, bwd_cell_tanh;
  Mat<T> hidden_cat;            // 2H x (T * B)
  Mat<T> masks;                 // (J * bins) x (T * B), source-major rows
};

/// Masks for a batch of equal-length observations. Training mode uses batch
/// statistics; inference mode uses the running statistics. Throws
/// DomainError for an empty batch, zero frames or unequal lengths.
template <typename T>
MaskTape<T> forward_masks(const MaskNetworkParams<T>& params, std::span<const ObservationPtr<T>> batch,
                          BatchNormMode mode);

/// Accumulates parameter gradients given dLoss/dMasks (same layout as
/// tape.masks) into `grads`.
template <typename T>
void backward_masks(const MaskNetworkParams<T>& params, const MaskTape<T>& tape, const Mat<T>& mask_grad,
                    MaskNetworkParams<T>& grads);

/// Moves running statistics toward the batch statistics recorded in a
/// training-mode tape.
template <typename T>
void update_running_stats(MaskNetworkParams<T>& params, const MaskTape<T>& tape);

/// Masks for sample `b` of a tape as a MaskSet.
template <typename T>
dsp::MaskSet mask_set(const MaskTape<T>& tape, int b, int sources);

/// Applies masks inferred from the channel-averaged magnitude to every
/// channel of the mixture and inverts each source. Returns one stereo
/// buffer per source.
template <typename T>
std::vector<AudioBuffer> separate(const MaskNetworkParams<T>& params, const AudioBuffer& stereo);

/// Masks every channel of `mixture` with `masks` and inverts.
std::vector<AudioBuffer> apply_masks(const dsp::Spectrogram& mixture, const dsp::MaskSet& masks);

/// k-means over per-bin (ipd, log ild) points with several restarts.
struct ClusterOptions {
  int restarts = 10;
  int max_iterations = 100;
  std::uint64_t seed = 0;
  /// Bins quieter than this (dB below the loudest bin) are assigned after
  /// clustering instead of shaping the centroids.
  double floor_db = 40.0;
};

/// Binary masks from cluster assignments. Throws DomainError when there
/// are fewer distinct points than clusters.
dsp::MaskSet cluster_baseline(const dsp::TfGrid& ipd, const dsp::TfGrid& ild, int sources,
                              const ClusterOptions& options = {}, const dsp::TfGrid* magnitude = nullptr);

/// Binaural render of one source alone at the episode's initial geometry.
AudioBuffer render_ground_truth(const acoustics::RoomSpec& room, const acoustics::SourceSpec& source,
                                const AgentPose& initial_pose, double duration_s);

} // namespace audionav::separation
