#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace audionav {

/// Real-to-complex transform of fixed size backed by FFTW. Plans are built
/// with FFTW_ESTIMATE so results do not depend on planner timing.
class RealFft {
public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// `in` is zero-padded up to size(); `out` must hold bins() values.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Inverse transform scaled by 1/size(); `out` receives min(size, out.size()) samples.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
  void release();

  std::size_t size_ = 0;
  double* real_ = nullptr;
  std::complex<double>* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Per-thread cache of transforms keyed by size.
RealFft& cached_fft(std::size_t size);

/// Smallest size >= n of the form 2^a 3^b 5^c.
std::size_t good_fft_size(std::size_t n);

/// Linear convolution of x with h computed via FFT, truncated to `out_length`.
std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h,
                                 std::size_t out_length);

} // namespace audionav
