#include "audionav/stft.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "audionav/errors.hpp"
#include "audionav/fft.hpp"
#include "audionav/geometry.hpp"

namespace audionav::dsp {
namespace {

void validate(const StftConfig& config) {
  if (config.frame_length == 0 || config.frame_length % 2 != 0) {
    throw DomainError("frame_length must be positive and even");
  }
  if (config.hop == 0 || config.hop > config.frame_length) {
    throw DomainError("hop must lie in [1, frame_length]");
  }
}

void analyse_channel(std::span<const double> x, const std::vector<double>& window, Spectrogram& spec,
                     std::size_t channel) {
  const std::size_t n = spec.frame_length;
  const std::size_t pad = n / 2;
  RealFft& fft = cached_fft(n);
  std::vector<double> frame(n);
  std::vector<std::complex<double>> bins(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const std::size_t start = t * spec.hop;  // index into the padded signal
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t p = start + i;
      const double v = (p >= pad && p - pad < x.size()) ? x[p - pad] : 0.0;
      frame[i] = v * window[i];
    }
    fft.forward(frame, bins);
    std::copy(bins.begin(), bins.end(), spec.values.begin() + static_cast<std::ptrdiff_t>((channel * spec.frames + t) * spec.bins));
  }
}

} // namespace

std::vector<double> sqrt_hann(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = std::sqrt(0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(length))));
  }
  return w;
}

std::size_t frame_count(std::size_t length, std::size_t hop) { return 1 + length / hop; }

Spectrogram stft(std::span<const double> mono, double sample_rate, const StftConfig& config) {
  AudioBuffer buf;
  buf.sample_rate = sample_rate;
  buf.channels.emplace_back(mono.begin(), mono.end());
  return stft(buf, config);
}

Spectrogram stft(const AudioBuffer& audio, const StftConfig& config) {
  validate(config);
  if (audio.channel_count() == 0 || audio.frames() == 0) throw DomainError("stft: empty signal");
  Spectrogram spec;
  spec.channels = audio.channel_count();
  spec.frame_length = config.frame_length;
  spec.hop = config.hop;
  spec.bins = config.frame_length / 2 + 1;
  spec.sample_rate = audio.sample_rate;
  spec.signal_length = audio.frames();
  spec.frames = frame_count(spec.signal_length, spec.hop);
  spec.values.assign(spec.channels * spec.frames * spec.bins, {});
  const auto window = sqrt_hann(config.frame_length);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    if (audio.channels[c].size() != spec.signal_length) throw DomainError("stft: ragged channels");
    analyse_channel(audio.channels[c], window, spec, c);
  }
  return spec;
}

AudioBuffer istft(const Spectrogram& spec) {
  validate({spec.frame_length, spec.hop});
  if (spec.bins != spec.frame_length / 2 + 1 || spec.signal_length == 0 ||
      spec.frames != frame_count(spec.signal_length, spec.hop) ||
      spec.values.size() != spec.channels * spec.frames * spec.bins) {
    throw DomainError("istft: inconsistent spectrogram metadata");
  }
  const std::size_t n = spec.frame_length;
  const std::size_t pad = n / 2;
  const std::size_t padded = (spec.frames - 1) * spec.hop + n;
  const auto window = sqrt_hann(n);

  std::vector<double> norm(padded, 0.0);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t i = 0; i < n; ++i) norm[t * spec.hop + i] += window[i] * window[i];
  }

  RealFft& fft = cached_fft(n);
  std::vector<double> frame(n);
  AudioBuffer out = AudioBuffer::zeros(spec.channels, spec.signal_length, spec.sample_rate);
  std::vector<double> acc(padded);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      fft.inverse(spec.channel(c).subspan(t * spec.bins, spec.bins), frame);
      for (std::size_t i = 0; i < n; ++i) acc[t * spec.hop + i] += frame[i] * window[i];
    }
    auto& dst = out.channels[c];
    for (std::size_t i = 0; i < spec.signal_length; ++i) {
      const double w = norm[i + pad];
      dst[i] = w > 1e-12 ? acc[i + pad] / w : 0.0;
    }
  }
  return out;
}

namespace {

constexpr char kDumpMagic[4] = {'S', 'P', 'E', 'C'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DomainError("truncated spectrogram dump");
  return v;
}

} // namespace

void write_spectrogram_dump(const std::filesystem::path& path, const Spectrogram& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write spectrogram dump: " + path.string());
  out.write(kDumpMagic, 4);
  put<std::uint32_t>(out, kDumpVersion);
  for (std::size_t v : {spec.channels, spec.frames, spec.bins, spec.frame_length, spec.hop, spec.signal_length}) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  }
  put<float>(out, static_cast<float>(spec.sample_rate));
  for (const auto& z : spec.values) {
    put<float>(out, static_cast<float>(z.real()));
    put<float>(out, static_cast<float>(z.imag()));
  }
}

Spectrogram read_spectrogram_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open spectrogram dump: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDumpMagic, 4) != 0) throw DomainError("not a spectrogram dump");
  if (get<std::uint32_t>(in) != kDumpVersion) throw DomainError("unsupported spectrogram dump version");
  Spectrogram spec;
  spec.channels = get<std::uint32_t>(in);
  spec.frames = get<std::uint32_t>(in);
  spec.bins = get<std::uint32_t>(in);
  spec.frame_length = get<std::uint32_t>(in);
  spec.hop = get<std::uint32_t>(in);
  spec.signal_length = get<std::uint32_t>(in);
  spec.sample_rate = get<float>(in);
  spec.values.resize(spec.channels * spec.frames * spec.bins);
  for (auto& z : spec.values) {
    const float re = get<float>(in);
    const float im = get<float>(in);
    z = {re, im};
  }
  return spec;
}

} // namespace audionav::dsp
