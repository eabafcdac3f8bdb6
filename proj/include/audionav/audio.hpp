#pragma once

#include <cstddef>
#include <vector>

namespace audionav {

/// Multichannel audio with planar channel storage.
struct AudioBuffer {
  double sample_rate = 8000.0;
  std::vector<std::vector<double>> channels;

  static AudioBuffer zeros(std::size_t channel_count, std::size_t frames, double sample_rate) {
    AudioBuffer buf;
    buf.sample_rate = sample_rate;
    buf.channels.assign(channel_count, std::vector<double>(frames, 0.0));
    return buf;
  }

  std::size_t channel_count() const { return channels.size(); }
  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
  bool empty() const { return frames() == 0; }
};

} // namespace audionav
