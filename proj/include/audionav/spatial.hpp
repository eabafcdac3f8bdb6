#pragma once

#include <cstddef>
#include <vector>

#include "audionav/stft.hpp"

namespace audionav::dsp {

inline constexpr double kIldEpsilon = 1e-8;

/// Real values on a (frame, bin) grid.
struct TfGrid {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  double& at(std::size_t t, std::size_t f) { return values[t * bins + f]; }
  double at(std::size_t t, std::size_t f) const { return values[t * bins + f]; }
  std::size_t size() const { return values.size(); }
};

/// Soft masks indexed (source, frame, bin).
struct MaskSet {
  std::size_t sources = 0;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  double& at(std::size_t j, std::size_t t, std::size_t f) { return values[(j * frames + t) * bins + f]; }
  double at(std::size_t j, std::size_t t, std::size_t f) const { return values[(j * frames + t) * bins + f]; }
};

/// Phase of X0 * conj(X1) per bin, in (-pi, pi]; zero where the product is zero.
TfGrid compute_ipd(const Spectrogram& spec);

/// |X0| / (|X1| + epsilon) per bin.
TfGrid compute_ild(const Spectrogram& spec, double epsilon = kIldEpsilon);

/// Channel-averaged magnitude (|X0| + ... + |Xc-1|) / c per bin.
TfGrid mean_magnitude(const Spectrogram& spec);

/// Mask-weighted feature means normalised by the total time-frequency
/// point count, interleaved as [ipd_0, ild_0, ipd_1, ild_1, ...].
/// Throws DomainError if the grids disagree in shape.
std::vector<double> masked_means(const MaskSet& masks, const TfGrid& ipd, const TfGrid& ild);

} // namespace audionav::dsp
