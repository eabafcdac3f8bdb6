#pragma once

#include <filesystem>

#include "audionav/audio.hpp"

namespace audionav {

enum class WavEncoding { Pcm16, Float32 };

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples
/// (plain or WAVE_FORMAT_EXTENSIBLE). Samples are scaled to [-1, 1).
/// Throws DomainError on malformed or unsupported files.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes interleaved samples. Pcm16 clips to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavEncoding encoding = WavEncoding::Float32);

} // namespace audionav
