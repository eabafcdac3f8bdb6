#include "audionav/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "audionav/errors.hpp"

namespace audionav {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

} // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size == 0) throw DomainError("RealFft: size must be positive");
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(size_);
  spectrum_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(bins()));
  if (!real_ || !spectrum_) throw std::bad_alloc();
  auto* spec = reinterpret_cast<fftw_complex*>(spectrum_);
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(size_), spec, real_,
                                       FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept { *this = std::move(other); }

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    size_ = std::exchange(other.size_, 0);
    real_ = std::exchange(other.real_, nullptr);
    spectrum_ = std::exchange(other.spectrum_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void RealFft::release() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  if (real_) fftw_free(real_);
  if (spectrum_) fftw_free(spectrum_);
  forward_plan_ = inverse_plan_ = nullptr;
  real_ = nullptr;
  spectrum_ = nullptr;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (out.size() < bins()) throw DomainError("RealFft::forward: output too small");
  const std::size_t n = std::min(in.size(), size_);
  std::copy_n(in.begin(), n, real_);
  std::fill(real_ + n, real_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::copy_n(spectrum_, bins(), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() < bins()) throw DomainError("RealFft::inverse: input too small");
  std::copy_n(in.begin(), bins(), spectrum_);
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(size_);
  const std::size_t n = std::min(out.size(), size_);
  for (std::size_t i = 0; i < n; ++i) out[i] = real_[i] * scale;
}

RealFft& cached_fft(std::size_t size) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[size];
  if (!slot) slot = std::make_unique<RealFft>(size);
  return *slot;
}

std::size_t good_fft_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h,
                                 std::size_t out_length) {
  std::vector<double> out(out_length, 0.0);
  if (x.empty() || h.empty() || out_length == 0) return out;
  const std::size_t xn = std::min(x.size(), out_length);
  const std::size_t hn = std::min(h.size(), out_length);
  const std::size_t n = good_fft_size(xn + hn - 1);
  RealFft& fft = cached_fft(n);
  std::vector<std::complex<double>> xs(fft.bins()), hs(fft.bins());
  fft.forward(x.first(xn), xs);
  fft.forward(h.first(hn), hs);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  std::vector<double> full(n);
  fft.inverse(xs, full);
  std::copy_n(full.begin(), std::min(out_length, n), out.begin());
  return out;
}

} // namespace audionav
