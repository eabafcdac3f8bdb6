#pragma once

#include <random>
#include <span>

#include "audionav/audio.hpp"

namespace audionav::dsp {

inline constexpr double kSiSdrCapDb = 80.0;

/// Scale-invariant SDR in dB, clamped to [-kSiSdrCapDb, kSiSdrCapDb].
/// Throws DomainError for mismatched lengths or a silent reference.
double si_sdr(std::span<const double> estimate, std::span<const double> reference);

/// SI-SDR over all channels stacked into one vector.
double si_sdr(const AudioBuffer& estimate, const AudioBuffer& reference);

/// Contiguous `length_s` slice at a uniformly random offset, shared by all
/// channels. Shorter input is zero-padded at the tail.
AudioBuffer excerpt(const AudioBuffer& audio, double length_s, std::mt19937_64& rng);

} // namespace audionav::dsp
