#include "audionav/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "audionav/errors.hpp"

namespace audionav {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

} // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open WAV file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DomainError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw DomainError("truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (available < 26) throw DomainError("truncated extensible fmt chunk");
        format = le16(f + 24);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1u);
  }

  if (channels == 0 || rate == 0 || data == nullptr) throw DomainError("WAV file lacks fmt or data chunk");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw DomainError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  AudioBuffer out = AudioBuffer::zeros(channels, frames, rate);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* s = data + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        out.channels[c][i] = static_cast<std::int16_t>(le16(s)) / 32768.0;
      } else {
        const std::uint32_t raw = le32(s);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        out.channels[c][i] = v;
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding) {
  const auto channels = static_cast<std::uint16_t>(audio.channel_count());
  if (channels == 0) throw DomainError("write_wav: no channels");
  const std::size_t frames = audio.frames();
  for (const auto& ch : audio.channels) {
    if (ch.size() != frames) throw DomainError("write_wav: ragged channels");
  }
  const bool pcm = encoding == WavEncoding::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t block = channels * bits / 8;
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_size = static_cast<std::uint32_t>(frames * block);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, pcm ? kFormatPcm : kFormatFloat);
  put16(out, channels);
  put32(out, rate);
  put32(out, rate * block);
  put16(out, static_cast<std::uint16_t>(block));
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = audio.channels[c][i];
      if (pcm) {
        const double clipped = std::clamp(v, -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(std::clamp(std::lround(clipped * 32767.0), -32768L, 32767L));
        put16(out, static_cast<std::uint16_t>(q));
      } else {
        const float f = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put32(out, raw);
      }
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw DomainError("cannot write WAV file: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

} // namespace audionav
