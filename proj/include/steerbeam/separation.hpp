#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "steerbeam/geometry.hpp"
#include "steerbeam/stft.hpp"

namespace steerbeam {

using cfloat = std::complex<float>;

// Per-(frame, bin) separation mask applied to the reference channel.
struct ComplexMask {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<cfloat> values;  // [frame][bin]

  ComplexMask() = default;
  ComplexMask(std::size_t n, std::size_t k) : frames(n), bins(k), values(n * k) {}
  std::span<const cfloat> frame(std::size_t n) const { return {values.data() + n * bins, bins}; }
  std::span<cfloat> frame(std::size_t n) { return {values.data() + n * bins, bins}; }
};

inline constexpr float kDefaultMaskLimit = 2.0f;

struct MaskEstimatorInfo {
  std::string name;
  std::size_t latency_frames = 0;
  std::size_t required_channels = 2;
};

// Contract for anything that turns a steered two-channel frame into a mask:
// the built-in phase-difference rule, or a learned model plugged in later.
// Implementations must be causal: the mask for frame n may only depend on
// frames up to n. estimate() is called once per frame in time order.
class MaskEstimator {
 public:
  virtual ~MaskEstimator() = default;
  virtual MaskEstimatorInfo info() const = 0;
  // reference = Y_1(n, :), steered = a(:) * Y_2(n, :); mask.size() == bins.
  virtual void estimate(std::span<const cfloat> reference, std::span<const cfloat> steered,
                        std::span<cfloat> mask) = 0;
  virtual void reset() {}
  virtual std::unique_ptr<MaskEstimator> clone() const = 0;
};

enum class AliasingMode { WrappedDistance, PassthroughAboveAlias };

struct PhaseMaskConfig {
  double concentration = 30.0;  // kappa
  double mask_floor = 0.05;
  std::size_t low_bin_cutoff = 2;  // bins k < cutoff pass through
  AliasingMode aliasing_mode = AliasingMode::WrappedDistance;
  double silence_dbfs = -80.0;  // bins at or below this level pass through

  void validate() const;
};

// Deterministic mask from the inter-microphone phase difference. For each bin
// the observed difference arg(steered * conj(reference)) is compared to the
// window the unsteered ROI produces at that frequency; the circular distance
// outside the window, in units of min(pi, 2 pi f d / c), maps to
// max(floor, exp(-kappa * dist^2)). Real-valued, memoryless.
class PhaseMaskEstimator final : public MaskEstimator {
 public:
  PhaseMaskEstimator(const Roi& roi, const ArrayGeometry& geom, const StftConfig& stft,
                     const PhaseMaskConfig& cfg = {});

  MaskEstimatorInfo info() const override { return {"phase-difference", 0, 2}; }
  void estimate(std::span<const cfloat> reference, std::span<const cfloat> steered,
                std::span<cfloat> mask) override;
  std::unique_ptr<MaskEstimator> clone() const override;

  const PhaseMaskConfig& config() const { return cfg_; }

 private:
  PhaseMaskConfig cfg_;
  std::vector<float> center_;      // window center per bin, radians
  std::vector<float> half_width_;  // window half-width per bin, radians
  std::vector<float> inv_scale_;   // 1 / min(pi, 2 pi f d / c)
  std::vector<unsigned char> passthrough_;
  float silence_power_ = 0.0f;
};

// Returns the same mask for every bin and frame (e.g. 1 for all-pass, 0 for mute).
class ConstantMaskEstimator final : public MaskEstimator {
 public:
  explicit ConstantMaskEstimator(cfloat value) : value_(value) {}
  MaskEstimatorInfo info() const override { return {"constant", 0, 2}; }
  void estimate(std::span<const cfloat>, std::span<const cfloat>, std::span<cfloat> mask) override;
  std::unique_ptr<MaskEstimator> clone() const override;

 private:
  cfloat value_;
};

struct SeparationResult {
  Spectrogram target;  // single channel: Q * Y_1
  ComplexMask mask;
};

// Steers channel 1 with a(k), runs the estimator frame by frame, clamps
// |Q| <= mask_limit and applies Q to the untouched reference channel.
SeparationResult separate(const Spectrogram& mixture, MaskEstimator& estimator,
                          const SteeringState& steering, float mask_limit = kDefaultMaskLimit);

// Q * spec(channel), single-channel result.
Spectrogram apply_mask(const ComplexMask& mask, const Spectrogram& spec, std::size_t channel = 0);

// Time-domain convenience: stft -> separate -> istft, returning a signal of the
// input length (samples beyond the last full frame are zero).
struct AudioSeparation {
  std::vector<double> target;
  ComplexMask mask;
  std::size_t frames = 0;
};
AudioSeparation separate_audio(const MultichannelAudio& mixture, MaskEstimator& estimator,
                               const SteeringState& steering, const StftConfig& cfg);

// Applies an existing mask to channel `channel` of audio, same length convention.
std::vector<double> apply_mask_audio(const ComplexMask& mask, const MultichannelAudio& audio,
                                     const StftConfig& cfg, std::size_t channel = 0);

}  // namespace steerbeam
