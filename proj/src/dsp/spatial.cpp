#include "audionav/spatial.hpp"

#include <cmath>

#include "audionav/errors.hpp"
#include "audionav/geometry.hpp"

namespace audionav::dsp {
namespace {

TfGrid grid_like(const Spectrogram& spec) {
  return {spec.frames, spec.bins, std::vector<double>(spec.frames * spec.bins, 0.0)};
}

// |z| without hypot's overflow guard; spectra stay far from the limits.
double magnitude(std::complex<double> z) { return std::sqrt(std::norm(z)); }

void require_stereo(const Spectrogram& spec) {
  if (spec.channels != 2) throw DomainError("spatial features need a 2-channel spectrogram");
}

} // namespace

TfGrid compute_ipd(const Spectrogram& spec) {
  require_stereo(spec);
  TfGrid out = grid_like(spec);
  const auto x0 = spec.channel(0);
  const auto x1 = spec.channel(1);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::complex<double> z = x0[i] * std::conj(x1[i]);
    if (z.real() == 0.0 && z.imag() == 0.0) continue;
    double theta = std::atan2(z.imag(), z.real());
    if (theta <= -kPi) theta += kTwoPi;
    out.values[i] = theta;
  }
  return out;
}

TfGrid compute_ild(const Spectrogram& spec, double epsilon) {
  require_stereo(spec);
  if (!(epsilon > 0.0)) throw DomainError("ILD epsilon must be positive");
  TfGrid out = grid_like(spec);
  const auto x0 = spec.channel(0);
  const auto x1 = spec.channel(1);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = magnitude(x0[i]) / (magnitude(x1[i]) + epsilon);
  return out;
}

TfGrid mean_magnitude(const Spectrogram& spec) {
  if (spec.channels == 0) throw DomainError("mean_magnitude: no channels");
  TfGrid out = grid_like(spec);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    const auto x = spec.channel(c);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += magnitude(x[i]);
  }
  const double scale = 1.0 / static_cast<double>(spec.channels);
  for (double& v : out.values) v *= scale;
  return out;
}

std::vector<double> masked_means(const MaskSet& masks, const TfGrid& ipd, const TfGrid& ild) {
  const std::size_t n = masks.frames * masks.bins;
  if (ipd.frames != masks.frames || ipd.bins != masks.bins || ild.frames != masks.frames ||
      ild.bins != masks.bins || masks.values.size() != masks.sources * n || ipd.values.size() != n ||
      ild.values.size() != n) {
    throw DomainError("masked_means: shape mismatch");
  }
  if (n == 0) throw DomainError("masked_means: empty grid");
  std::vector<double> out(2 * masks.sources, 0.0);
  for (std::size_t j = 0; j < masks.sources; ++j) {
    double ipd_sum = 0.0;
    double ild_sum = 0.0;
    const double* m = masks.values.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      ipd_sum += m[i] * ipd.values[i];
      ild_sum += m[i] * ild.values[i];
    }
    out[2 * j] = ipd_sum / static_cast<double>(n);
    out[2 * j + 1] = ild_sum / static_cast<double>(n);
  }
  return out;
}

} // namespace audionav::dsp
