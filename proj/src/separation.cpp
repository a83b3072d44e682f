#include "steerbeam/separation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace steerbeam {
namespace {

constexpr float kPi = std::numbers::pi_v<float>;
constexpr float kTwoPi = 2.0f * std::numbers::pi_v<float>;

void check_frame_sizes(std::size_t bins, std::span<const cfloat> reference,
                       std::span<const cfloat> steered, std::span<cfloat> mask) {
  if (reference.size() != bins || steered.size() != bins || mask.size() != bins)
    throw std::invalid_argument("mask estimator: expected " + std::to_string(bins) + " bins");
}

}  // namespace

void PhaseMaskConfig::validate() const {
  if (!(concentration > 0.0)) throw std::invalid_argument("phase mask: concentration must be > 0");
  if (!(mask_floor >= 0.0 && mask_floor < 1.0))
    throw std::invalid_argument("phase mask: floor must lie in [0, 1)");
}

PhaseMaskEstimator::PhaseMaskEstimator(const Roi& roi, const ArrayGeometry& geom,
                                       const StftConfig& stft, const PhaseMaskConfig& cfg)
    : cfg_(cfg) {
  cfg_.validate();
  roi.validate();
  geom.validate();
  stft.validate();
  const std::size_t bins = stft.num_bins();
  center_.resize(bins);
  half_width_.resize(bins);
  inv_scale_.resize(bins);
  passthrough_.resize(bins);
  const double cos_hi = cos_deg(roi.center_deg - roi.half_width_deg);
  const double cos_lo = cos_deg(roi.center_deg + roi.half_width_deg);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = bin_frequency(k, stft);
    const double scale = geom.phase_scale(f);
    center_[k] = static_cast<float>(scale * (cos_hi + cos_lo) / 2.0);
    half_width_[k] = static_cast<float>(scale * (cos_hi - cos_lo) / 2.0);
    inv_scale_[k] = scale > 0.0 ? static_cast<float>(1.0 / std::min(std::numbers::pi, scale)) : 0.0f;
    const bool above_alias = f > geom.aliasing_frequency();
    passthrough_[k] = k < cfg_.low_bin_cutoff || half_width_[k] >= kPi ||
                      (cfg_.aliasing_mode == AliasingMode::PassthroughAboveAlias && above_alias);
  }
  // Bin power of a full-scale sinusoid: (sum(w) / 2)^2.
  const auto window = sqrt_hann_window(stft.window_len);
  const double full_scale = std::pow(std::accumulate(window.begin(), window.end(), 0.0) / 2.0, 2);
  silence_power_ = static_cast<float>(full_scale * std::pow(10.0, cfg_.silence_dbfs / 10.0));
}

void PhaseMaskEstimator::estimate(std::span<const cfloat> reference, std::span<const cfloat> steered,
                                  std::span<cfloat> mask) {
  const std::size_t bins = center_.size();
  check_frame_sizes(bins, reference, steered, mask);
  const float kappa = static_cast<float>(cfg_.concentration);
  const float floor = static_cast<float>(cfg_.mask_floor);
  for (std::size_t k = 0; k < bins; ++k) {
    const cfloat r = reference[k];
    const cfloat s = steered[k];
    const float power = 0.5f * (std::norm(r) + std::norm(s));
    if (passthrough_[k] || power <= silence_power_) {
      mask[k] = 1.0f;
      continue;
    }
    const cfloat cross = s * std::conj(r);
    const float observed = std::atan2(cross.imag(), cross.real());
    float delta = observed - center_[k];
    delta -= kTwoPi * std::nearbyint(delta / kTwoPi);
    const float dist = std::max(0.0f, std::abs(delta) - half_width_[k]) * inv_scale_[k];
    mask[k] = std::max(floor, std::exp(-kappa * dist * dist));
  }
}

std::unique_ptr<MaskEstimator> PhaseMaskEstimator::clone() const {
  return std::make_unique<PhaseMaskEstimator>(*this);
}

void ConstantMaskEstimator::estimate(std::span<const cfloat> reference, std::span<const cfloat> steered,
                                     std::span<cfloat> mask) {
  check_frame_sizes(mask.size(), reference, steered, mask);
  std::fill(mask.begin(), mask.end(), value_);
}

std::unique_ptr<MaskEstimator> ConstantMaskEstimator::clone() const {
  return std::make_unique<ConstantMaskEstimator>(*this);
}

SeparationResult separate(const Spectrogram& mixture, MaskEstimator& estimator,
                          const SteeringState& steering, float mask_limit) {
  if (mixture.num_channels() != 2)
    throw std::invalid_argument("separate: expected a 2-channel mixture, got " +
                                std::to_string(mixture.num_channels()));
  const std::size_t bins = mixture.num_bins();
  if (steering.vector.size() != bins)
    throw std::invalid_argument("separate: steering vector has " +
                                std::to_string(steering.vector.size()) + " bins, mixture " +
                                std::to_string(bins));

  SeparationResult result{Spectrogram(1, mixture.num_frames(), bins),
                          ComplexMask(mixture.num_frames(), bins)};
  std::vector<cfloat> reference(bins), steered(bins);
  estimator.reset();
  for (std::size_t n = 0; n < mixture.num_frames(); ++n) {
    const auto y1 = mixture.frame(0, n);
    const auto y2 = mixture.frame(1, n);
    for (std::size_t k = 0; k < bins; ++k) {
      reference[k] = cfloat(y1[k]);
      steered[k] = cfloat(steering.vector[k] * y2[k]);
    }
    auto q = result.mask.frame(n);
    try {
      estimator.estimate(reference, steered, q);
    } catch (const std::exception& e) {
      throw std::runtime_error("mask estimator '" + estimator.info().name + "' failed at frame " +
                               std::to_string(n) + ": " + e.what());
    }
    auto out = result.target.frame(0, n);
    for (std::size_t k = 0; k < bins; ++k) {
      if (!std::isfinite(q[k].real()) || !std::isfinite(q[k].imag()))
        throw std::runtime_error("mask estimator '" + estimator.info().name +
                                 "' produced a non-finite mask at frame " + std::to_string(n));
      const float mag = std::abs(q[k]);
      if (mag > mask_limit) q[k] *= mask_limit / mag;
      out[k] = std::complex<double>(q[k]) * y1[k];
    }
  }
  return result;
}

Spectrogram apply_mask(const ComplexMask& mask, const Spectrogram& spec, std::size_t channel) {
  if (mask.frames != spec.num_frames() || mask.bins != spec.num_bins())
    throw std::invalid_argument("apply_mask: mask shape does not match spectrogram");
  Spectrogram out(1, spec.num_frames(), spec.num_bins());
  for (std::size_t n = 0; n < spec.num_frames(); ++n) {
    const auto q = mask.frame(n);
    const auto y = spec.frame(channel, n);
    auto o = out.frame(0, n);
    for (std::size_t k = 0; k < spec.num_bins(); ++k) o[k] = std::complex<double>(q[k]) * y[k];
  }
  return out;
}

AudioSeparation separate_audio(const MultichannelAudio& mixture, MaskEstimator& estimator,
                               const SteeringState& steering, const StftConfig& cfg) {
  const auto spec = stft(mixture, cfg);
  auto result = separate(spec, estimator, steering);
  const auto synthesized = istft(result.target, cfg);
  AudioSeparation out;
  out.frames = spec.num_frames();
  const auto ch = synthesized.channel(0);
  out.target.assign(mixture.num_samples(), 0.0);
  std::copy_n(ch.begin(), std::min(ch.size(), out.target.size()), out.target.begin());
  out.mask = std::move(result.mask);
  return out;
}

std::vector<double> apply_mask_audio(const ComplexMask& mask, const MultichannelAudio& audio,
                                     const StftConfig& cfg, std::size_t channel) {
  const auto spec = stft(audio, cfg);
  const auto synthesized = istft(apply_mask(mask, spec, channel), cfg);
  std::vector<double> out(audio.num_samples(), 0.0);
  const auto ch = synthesized.channel(0);
  std::copy_n(ch.begin(), std::min(ch.size(), out.size()), out.begin());
  return out;
}

}  // namespace steerbeam
