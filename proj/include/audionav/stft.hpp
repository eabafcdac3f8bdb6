#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "audionav/audio.hpp"

namespace audionav::dsp {

inline constexpr std::size_t kFrameLength = 256;
inline constexpr std::size_t kHop = 64;

struct StftConfig {
  std::size_t frame_length = kFrameLength;
  std::size_t hop = kHop;
};

/// Periodic square-root Hann window; its square overlap-adds to a constant
/// at hop = frame_length / 4.
std::vector<double> sqrt_hann(std::size_t length);

/// One-sided complex STFT with centred frames, stored channel-major, then
/// frame, then bin.
struct Spectrogram {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t frame_length = kFrameLength;
  std::size_t hop = kHop;
  double sample_rate = 8000.0;
  /// Length of the analysed signal, needed to undo the padding.
  std::size_t signal_length = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(std::size_t c, std::size_t t, std::size_t f) {
    return values[(c * frames + t) * bins + f];
  }
  const std::complex<double>& at(std::size_t c, std::size_t t, std::size_t f) const {
    return values[(c * frames + t) * bins + f];
  }
  std::span<const std::complex<double>> channel(std::size_t c) const {
    return std::span(values).subspan(c * frames * bins, frames * bins);
  }
};

/// Frame count for a signal of `length` samples: 1 + length / hop.
std::size_t frame_count(std::size_t length, std::size_t hop);

/// The signal is zero-padded by frame_length / 2 at both ends. Throws
/// DomainError for zero or odd frame_length, hop outside
/// [1, frame_length], or an empty signal.
Spectrogram stft(const AudioBuffer& audio, const StftConfig& config = {});
Spectrogram stft(std::span<const double> mono, double sample_rate, const StftConfig& config = {});

/// Overlap-add inverse normalised by the summed squared window. Throws
/// DomainError when the metadata does not describe the stored values.
AudioBuffer istft(const Spectrogram& spec);

/// Float32 dump: "SPEC" magic, uint32 version, uint32 channels, frames,
/// bins, frame_length, hop, signal_length, float32 sample rate, then
/// interleaved (re, im) float32 values.
void write_spectrogram_dump(const std::filesystem::path& path, const Spectrogram& spec);
Spectrogram read_spectrogram_dump(const std::filesystem::path& path);

} // namespace audionav::dsp
