#include "audionav/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "audionav/errors.hpp"

namespace audionav::dsp {

double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw DomainError("si_sdr: length mismatch");
  double ref_energy = 0.0;
  double cross_term = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    cross_term += estimate[i] * reference[i];
  }
  if (!(ref_energy > 0.0)) throw DomainError("si_sdr: silent reference");
  const double alpha = cross_term / ref_energy;
  double target = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = alpha * reference[i];
    const double e = estimate[i] - s;
    target += s * s;
    residual += e * e;
  }
  if (target == 0.0) return -kSiSdrCapDb;
  if (residual == 0.0) return kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target / residual), -kSiSdrCapDb, kSiSdrCapDb);
}

double si_sdr(const AudioBuffer& estimate, const AudioBuffer& reference) {
  if (estimate.channel_count() != reference.channel_count()) throw DomainError("si_sdr: channel mismatch");
  std::vector<double> est, ref;
  for (std::size_t c = 0; c < estimate.channel_count(); ++c) {
    est.insert(est.end(), estimate.channels[c].begin(), estimate.channels[c].end());
    ref.insert(ref.end(), reference.channels[c].begin(), reference.channels[c].end());
  }
  return si_sdr(est, ref);
}

AudioBuffer excerpt(const AudioBuffer& audio, double length_s, std::mt19937_64& rng) {
  if (!(length_s > 0.0)) throw DomainError("excerpt length must be positive");
  const auto length = static_cast<std::size_t>(std::llround(length_s * audio.sample_rate));
  AudioBuffer out = AudioBuffer::zeros(audio.channel_count(), length, audio.sample_rate);
  const std::size_t available = audio.frames();
  std::size_t offset = 0;
  if (available > length) offset = std::uniform_int_distribution<std::size_t>(0, available - length)(rng);
  const std::size_t copy = std::min(length, available - std::min(offset, available));
  for (std::size_t c = 0; c < audio.channel_count(); ++c) {
    std::copy_n(audio.channels[c].begin() + static_cast<std::ptrdiff_t>(offset), copy, out.channels[c].begin());
  }
  return out;
}

} // namespace audionav::dsp
