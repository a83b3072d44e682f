#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "steerbeam/audio.hpp"

namespace steerbeam {

enum class WindowKind { SqrtHann };

// 20 ms sqrt-Hann frames with 50% overlap and a 320-point FFT at 16 kHz.
struct StftConfig {
  int sample_rate = 16000;
  std::size_t window_len = 320;
  std::size_t hop = 160;
  std::size_t nfft = 320;
  WindowKind window_kind = WindowKind::SqrtHann;

  std::size_t num_bins() const { return nfft / 2 + 1; }
  // Throws std::invalid_argument when hop * 2 != window_len or nfft < window_len.
  void validate() const;
};

// Periodic sqrt-Hann window; w(n)^2 overlap-adds to exactly 1 at 50% overlap.
std::vector<double> sqrt_hann_window(std::size_t length);

// Frames are counted without padding: floor((len - window_len) / hop) + 1.
std::size_t frame_count(std::size_t num_samples, const StftConfig& cfg);

// Half-open sample range of a synthesized signal that received the full
// overlap-add (both contributing frames present).
struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
};
SampleRange reconstructed_interior(std::size_t num_frames, const StftConfig& cfg);

double bin_frequency(std::size_t k, const StftConfig& cfg);

// One-sided complex spectrogram, laid out [channel][frame][bin].
class Spectrogram {
 public:
  using value_type = std::complex<double>;

  Spectrogram() = default;
  Spectrogram(std::size_t channels, std::size_t frames, std::size_t bins)
      : channels_(channels), frames_(frames), bins_(bins), data_(channels * frames * bins) {}

  std::size_t num_channels() const { return channels_; }
  std::size_t num_frames() const { return frames_; }
  std::size_t num_bins() const { return bins_; }

  std::span<const value_type> frame(std::size_t m, std::size_t n) const {
    return {data_.data() + offset(m, n), bins_};
  }
  std::span<value_type> frame(std::size_t m, std::size_t n) {
    return {data_.data() + offset(m, n), bins_};
  }
  const value_type& at(std::size_t m, std::size_t n, std::size_t k) const {
    return data_[offset(m, n) + k];
  }
  value_type& at(std::size_t m, std::size_t n, std::size_t k) { return data_[offset(m, n) + k]; }

  // Single-channel copy of channel m.
  Spectrogram channel(std::size_t m) const;

 private:
  std::size_t offset(std::size_t m, std::size_t n) const { return (m * frames_ + n) * bins_; }

  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<value_type> data_;
};

Spectrogram stft(const MultichannelAudio& audio, const StftConfig& cfg);

// Overlap-add synthesis with the sqrt-Hann window and no edge normalization:
// the interior is an exact inverse of stft(), the first and last hop carry the
// squared-window taper. Output length (N - 1) * hop + window_len.
MultichannelAudio istft(const Spectrogram& spec, const StftConfig& cfg);

}  // namespace steerbeam
