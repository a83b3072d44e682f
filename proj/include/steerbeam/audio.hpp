#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace steerbeam {

// Multichannel time-domain audio. Channel 0 is the left/reference microphone,
// channel 1 the second microphone. Samples are nominally in [-1, 1].
class MultichannelAudio {
 public:
  MultichannelAudio() = default;
  MultichannelAudio(std::vector<std::vector<double>> channels, double sample_rate)
      : channels_(std::move(channels)), sample_rate_(sample_rate) {
    if (sample_rate_ <= 0.0) throw std::invalid_argument("sample rate must be positive");
    for (const auto& ch : channels_) {
      if (ch.size() != channels_.front().size())
        throw std::invalid_argument("all channels must have equal length");
    }
  }

  static MultichannelAudio zeros(std::size_t num_channels, std::size_t num_samples,
                                 double sample_rate) {
    return {std::vector<std::vector<double>>(num_channels, std::vector<double>(num_samples)),
            sample_rate};
  }

  std::size_t num_channels() const { return channels_.size(); }
  std::size_t num_samples() const { return channels_.empty() ? 0 : channels_.front().size(); }
  double sample_rate() const { return sample_rate_; }
  double duration_s() const { return static_cast<double>(num_samples()) / sample_rate_; }
  bool empty() const { return num_samples() == 0; }

  std::span<const double> channel(std::size_t m) const { return channels_.at(m); }
  const std::vector<std::vector<double>>& channels() const { return channels_; }

 private:
  std::vector<std::vector<double>> channels_;
  double sample_rate_ = 16000.0;
};

}  // namespace steerbeam
