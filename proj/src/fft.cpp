#include "steerbeam/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace steerbeam {
namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct Fftw;

template <>
struct Fftw<double> {
  using Complex = fftw_complex;
  static double* alloc_real(std::size_t n) { return fftw_alloc_real(n); }
  static void* alloc_complex(std::size_t n) { return fftw_alloc_complex(n); }
  static void free(void* p) { fftw_free(p); }
  static void* plan_r2c(int n, double* in, void* out) {
    return fftw_plan_dft_r2c_1d(n, in, static_cast<Complex*>(out), FFTW_ESTIMATE);
  }
  static void* plan_c2r(int n, void* in, double* out) {
    return fftw_plan_dft_c2r_1d(n, static_cast<Complex*>(in), out, FFTW_ESTIMATE);
  }
  static void execute(void* plan) { fftw_execute(static_cast<fftw_plan>(plan)); }
  static void destroy(void* plan) { fftw_destroy_plan(static_cast<fftw_plan>(plan)); }
};

template <>
struct Fftw<float> {
  using Complex = fftwf_complex;
  static float* alloc_real(std::size_t n) { return fftwf_alloc_real(n); }
  static void* alloc_complex(std::size_t n) { return fftwf_alloc_complex(n); }
  static void free(void* p) { fftwf_free(p); }
  static void* plan_r2c(int n, float* in, void* out) {
    return fftwf_plan_dft_r2c_1d(n, in, static_cast<Complex*>(out), FFTW_ESTIMATE);
  }
  static void* plan_c2r(int n, void* in, float* out) {
    return fftwf_plan_dft_c2r_1d(n, static_cast<Complex*>(in), out, FFTW_ESTIMATE);
  }
  static void execute(void* plan) { fftwf_execute(static_cast<fftwf_plan>(plan)); }
  static void destroy(void* plan) { fftwf_destroy_plan(static_cast<fftwf_plan>(plan)); }
};

}  // namespace

template <typename T>
RealFft<T>::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("FFT length must be positive");
  time_ = Fftw<T>::alloc_real(n);
  freq_ = Fftw<T>::alloc_complex(n / 2 + 1);
  if (time_ == nullptr || freq_ == nullptr) {
    release();
    throw std::bad_alloc();
  }
  std::lock_guard lock(planner_mutex());
  forward_plan_ = Fftw<T>::plan_r2c(static_cast<int>(n), time_, freq_);
  inverse_plan_ = Fftw<T>::plan_c2r(static_cast<int>(n), freq_, time_);
}

template <typename T>
RealFft<T>::~RealFft() {
  release();
}

template <typename T>
RealFft<T>::RealFft(RealFft&& other) noexcept
    : n_(std::exchange(other.n_, 0)),
      time_(std::exchange(other.time_, nullptr)),
      freq_(std::exchange(other.freq_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

template <typename T>
RealFft<T>& RealFft<T>::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    n_ = std::exchange(other.n_, 0);
    time_ = std::exchange(other.time_, nullptr);
    freq_ = std::exchange(other.freq_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

template <typename T>
void RealFft<T>::release() {
  {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_ != nullptr) Fftw<T>::destroy(forward_plan_);
    if (inverse_plan_ != nullptr) Fftw<T>::destroy(inverse_plan_);
  }
  if (time_ != nullptr) Fftw<T>::free(time_);
  if (freq_ != nullptr) Fftw<T>::free(freq_);
  forward_plan_ = inverse_plan_ = nullptr;
  time_ = nullptr;
  freq_ = nullptr;
}

template <typename T>
void RealFft<T>::forward(std::span<const T> in, std::span<std::complex<T>> out) {
  if (in.size() != n_ || out.size() != bins())
    throw std::invalid_argument("RealFft::forward: buffer size mismatch");
  std::copy(in.begin(), in.end(), time_);
  Fftw<T>::execute(forward_plan_);
  const auto* spectrum = reinterpret_cast<const std::complex<T>*>(freq_);
  std::copy(spectrum, spectrum + bins(), out.begin());
}

template <typename T>
void RealFft<T>::inverse(std::span<const std::complex<T>> in, std::span<T> out) {
  if (in.size() != bins() || out.size() != n_)
    throw std::invalid_argument("RealFft::inverse: buffer size mismatch");
  auto* spectrum = reinterpret_cast<std::complex<T>*>(freq_);
  std::copy(in.begin(), in.end(), spectrum);
  // c2r ignores the imaginary part of DC and Nyquist, as required for a real signal.
  Fftw<T>::execute(inverse_plan_);
  const T scale = T(1) / static_cast<T>(n_);
  std::transform(time_, time_ + n_, out.begin(), [scale](T v) { return v * scale; });
}

template class RealFft<float>;
template class RealFft<double>;

std::size_t next_fast_fft_size(std::size_t min_size) {
  std::size_t n = std::max<std::size_t>(min_size, 1);
  for (;; ++n) {
    std::size_t m = n;
    for (std::size_t p : {2u, 3u, 5u}) {
      while (m % p == 0) m /= p;
    }
    if (m == 1) return n;
  }
}

std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t out_len = x.size() + h.size() - 1;
  const std::size_t n = next_fast_fft_size(out_len);
  RealFft<double> fft(n);
  std::vector<double> buf(n, 0.0);
  std::vector<std::complex<double>> xs(fft.bins()), hs(fft.bins());
  std::copy(x.begin(), x.end(), buf.begin());
  fft.forward(buf, xs);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(h.begin(), h.end(), buf.begin());
  fft.forward(buf, hs);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  fft.inverse(xs, buf);
  buf.resize(out_len);
  return buf;
}

}  // namespace steerbeam
