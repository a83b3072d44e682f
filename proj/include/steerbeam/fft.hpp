#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace steerbeam {

// Real-to-complex FFT of fixed length backed by FFTW. T is float or double.
// An instance owns its buffers and plans; it is not safe to share one
// instance between threads, but separate instances may run concurrently.
template <typename T>
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // out.size() == bins(). Unnormalized: X(k) = sum_n x(n) e^{-j 2 pi k n / N}.
  void forward(std::span<const T> in, std::span<std::complex<T>> out);
  // out.size() == size(). Includes the 1/N factor, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<T>> in, std::span<T> out);

 private:
  void release();

  std::size_t n_ = 0;
  T* time_ = nullptr;
  void* freq_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

extern template class RealFft<float>;
extern template class RealFft<double>;

// Linear convolution via a single zero-padded FFT. Output length x + h - 1.
std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h);

// Smallest n >= min_size of the form 2^a 3^b 5^c.
std::size_t next_fast_fft_size(std::size_t min_size);

}  // namespace steerbeam
