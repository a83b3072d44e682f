#include "steerbeam/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "steerbeam/fft.hpp"

namespace steerbeam {

void StftConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("StftConfig: sample_rate must be positive");
  if (window_len == 0 || hop == 0) throw std::invalid_argument("StftConfig: empty window or hop");
  if (hop * 2 != window_len)
    throw std::invalid_argument("StftConfig: sqrt-Hann synthesis requires hop == window_len / 2");
  if (nfft < window_len) throw std::invalid_argument("StftConfig: nfft must be >= window_len");
}

std::vector<double> sqrt_hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = std::sin(std::numbers::pi * static_cast<double>(n) / static_cast<double>(length));
  return w;
}

std::size_t frame_count(std::size_t num_samples, const StftConfig& cfg) {
  if (num_samples < cfg.window_len) return 0;
  return (num_samples - cfg.window_len) / cfg.hop + 1;
}

SampleRange reconstructed_interior(std::size_t num_frames, const StftConfig& cfg) {
  if (num_frames < 2) return {};
  return {cfg.window_len - cfg.hop, (num_frames - 1) * cfg.hop + cfg.hop};
}

double bin_frequency(std::size_t k, const StftConfig& cfg) {
  if (k >= cfg.num_bins())
    throw std::out_of_range("bin index " + std::to_string(k) + " outside [0, " +
                            std::to_string(cfg.num_bins()) + ")");
  return static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.nfft);
}

Spectrogram Spectrogram::channel(std::size_t m) const {
  if (m >= channels_) throw std::out_of_range("spectrogram channel out of range");
  Spectrogram out(1, frames_, bins_);
  for (std::size_t n = 0; n < frames_; ++n) {
    auto src = frame(m, n);
    std::copy(src.begin(), src.end(), out.frame(0, n).begin());
  }
  return out;
}

Spectrogram stft(const MultichannelAudio& audio, const StftConfig& cfg) {
  cfg.validate();
  if (audio.num_channels() == 0 || audio.empty()) throw std::invalid_argument("stft: empty input");
  if (std::abs(audio.sample_rate() - cfg.sample_rate) > 1e-9)
    throw std::invalid_argument("stft: sample rate " + std::to_string(audio.sample_rate()) +
                                " does not match configured " + std::to_string(cfg.sample_rate));
  if (audio.num_samples() < cfg.window_len)
    throw std::invalid_argument("stft: input shorter than one window");

  const std::size_t frames = frame_count(audio.num_samples(), cfg);
  const auto window = sqrt_hann_window(cfg.window_len);
  RealFft<double> fft(cfg.nfft);
  std::vector<double> buf(cfg.nfft, 0.0);
  Spectrogram spec(audio.num_channels(), frames, cfg.num_bins());

  for (std::size_t m = 0; m < audio.num_channels(); ++m) {
    const auto x = audio.channel(m);
    for (std::size_t n = 0; n < frames; ++n) {
      const std::size_t start = n * cfg.hop;
      for (std::size_t i = 0; i < cfg.window_len; ++i) buf[i] = window[i] * x[start + i];
      fft.forward(buf, spec.frame(m, n));
    }
  }
  return spec;
}

MultichannelAudio istft(const Spectrogram& spec, const StftConfig& cfg) {
  cfg.validate();
  if (spec.num_bins() != cfg.num_bins())
    throw std::invalid_argument("istft: spectrogram has " + std::to_string(spec.num_bins()) +
                                " bins, config expects " + std::to_string(cfg.num_bins()));
  const std::size_t frames = spec.num_frames();
  const std::size_t length = frames == 0 ? 0 : (frames - 1) * cfg.hop + cfg.window_len;
  const auto window = sqrt_hann_window(cfg.window_len);
  RealFft<double> fft(cfg.nfft);
  std::vector<double> buf(cfg.nfft);

  std::vector<std::vector<double>> out(spec.num_channels(), std::vector<double>(length, 0.0));
  for (std::size_t m = 0; m < spec.num_channels(); ++m) {
    for (std::size_t n = 0; n < frames; ++n) {
      fft.inverse(spec.frame(m, n), buf);
      const std::size_t start = n * cfg.hop;
      for (std::size_t i = 0; i < cfg.window_len; ++i) out[m][start + i] += window[i] * buf[i];
    }
  }
  return {std::move(out), static_cast<double>(cfg.sample_rate)};
}

}  // namespace steerbeam
