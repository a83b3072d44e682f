#include "steerbeam/streaming.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace steerbeam {

StreamingPipeline::StreamingPipeline(const StftConfig& stft, const ArrayGeometry& geom,
                                     const Roi& roi, std::unique_ptr<MaskEstimator> estimator,
                                     float mask_limit)
    : cfg_(stft), geom_(geom), roi_(roi), estimator_(std::move(estimator)),
      mask_limit_(mask_limit), fft_(stft.nfft) {
  cfg_.validate();
  geom_.validate();
  roi_.validate();
  if (!estimator_) throw std::invalid_argument("StreamingPipeline: estimator required");
  if (estimator_->info().latency_frames != 0)
    throw std::invalid_argument("StreamingPipeline: estimator '" + estimator_->info().name +
                                "' declares look-ahead; only causal zero-latency estimators are supported");

  const auto w = sqrt_hann_window(cfg_.window_len);
  window_.assign(w.begin(), w.end());
  history_ref_.assign(cfg_.window_len, 0.0f);
  history_sec_.assign(cfg_.window_len, 0.0f);
  scratch_.assign(cfg_.nfft, 0.0f);
  ola_.assign(cfg_.window_len, 0.0f);
  const std::size_t bins = cfg_.num_bins();
  spec_ref_.assign(bins, {});
  spec_sec_.assign(bins, {});
  mask_.assign(bins, {});
  spec_out_.assign(bins, {});

  bin_phase_step_ = geom_.phase_scale(static_cast<double>(cfg_.sample_rate) / cfg_.nfft);
  center_cos_ = cos_deg(roi_.center_deg);
  for (auto& slot : slots_) fill_steering(slot, 0.0);
}

namespace {

// w^0 .. w^(n-1) by repeated doubling, so the dependency depth is log2(n).
// On return (wr, wi) holds w^m for the first power of two m >= n.
inline void powers(double& wr, double& wi, std::size_t n, double* re, double* im) {
  re[0] = 1.0;
  im[0] = 0.0;
  for (std::size_t have = 1; have < n; have *= 2) {
    for (std::size_t i = 0; i < have && have + i < n; ++i) {
      re[have + i] = re[i] * wr - im[i] * wi;
      im[have + i] = re[i] * wi + im[i] * wr;
    }
    const double t = wr * wr - wi * wi;
    wi = 2.0 * wr * wi;
    wr = t;
  }
}

}  // namespace

void StreamingPipeline::fill_steering(SteeringSlot& slot, double gamma_deg) {
  // a(k) = exp(j k delta) with k = 16 q + r, so a(k) = Q[q] R[r]. Both tables are
  // short; the per-bin work is one complex multiply in float.
  constexpr std::size_t kBlock = 16;
  // The caller has checked that the steered center lies strictly inside (0, 180).
  const double theta2_rad = (roi_.center_deg - gamma_deg) * (std::numbers::pi / 180.0);
  const double delta = bin_phase_step_ * (center_cos_ - std::cos(theta2_rad));
  const std::size_t bins = cfg_.num_bins();
  const std::size_t blocks = bins / kBlock + 1;
  slot.vector.resize(bins);
  slot.gamma_deg = gamma_deg;

  std::array<double, kBlock> rre, rim;
  double wr = std::cos(delta), wi = std::sin(delta);
  powers(wr, wi, kBlock, rre.data(), rim.data());
  // Block factors; common frame sizes fit the stack table.
  std::array<double, kBlock> qre_small, qim_small;
  double* qre = qre_small.data();
  double* qim = qim_small.data();
  if (blocks <= kBlock) {
    powers(wr, wi, kBlock, qre, qim);
  } else {
    block_re_.resize(blocks);
    block_im_.resize(blocks);
    qre = block_re_.data();
    qim = block_im_.data();
    powers(wr, wi, blocks, qre, qim);
  }

  // Interleaved R and j R so each output float is fr * r_tab + fi * jr_tab.
  alignas(32) std::array<float, 2 * kBlock> r_tab, jr_tab;
  for (std::size_t r = 0; r < kBlock; ++r) {
    r_tab[2 * r] = static_cast<float>(rre[r]);
    r_tab[2 * r + 1] = static_cast<float>(rim[r]);
    jr_tab[2 * r] = static_cast<float>(-rim[r]);
    jr_tab[2 * r + 1] = static_cast<float>(rre[r]);
  }
  float* out = reinterpret_cast<float*>(slot.vector.data());
  std::size_t q = 0, k0 = 0;
  for (; k0 + kBlock <= bins; ++q, k0 += kBlock) {
    const float fr = static_cast<float>(qre[q]), fi = static_cast<float>(qim[q]);
    float* dst = out + 2 * k0;
    for (std::size_t j = 0; j < 2 * kBlock; ++j) dst[j] = fr * r_tab[j] + fi * jr_tab[j];
  }
  const float fr = static_cast<float>(qre[q]), fi = static_cast<float>(qim[q]);
  for (std::size_t j = 0; j < 2 * (bins - k0); ++j) out[2 * k0 + j] = fr * r_tab[j] + fi * jr_tab[j];
}

SteeringAck StreamingPipeline::set_steering(double gamma_deg) {
  if (!steering_is_valid(gamma_deg, roi_))
    throw std::invalid_argument("steering gamma=" + std::to_string(gamma_deg) +
                                " moves the ROI center beyond endfire");
  std::lock_guard lock(writer_mutex_);
  fill_steering(slots_[back_], gamma_deg);
  back_ = shared_.exchange(back_ | kDirty) & ~kDirty;
  acknowledged_gamma_.store(gamma_deg, std::memory_order_release);
  // A frame counted here may or may not have picked up the new slot; every
  // frame that starts later does.
  return {gamma_deg, roi_.center_deg - gamma_deg, frames_started_.load()};
}

void StreamingPipeline::acquire_steering() {
  frames_started_.fetch_add(1);
  if (shared_.load() & kDirty) front_ = shared_.exchange(front_) & ~kDirty;
}

void StreamingPipeline::reset() {
  std::fill(history_ref_.begin(), history_ref_.end(), 0.0f);
  std::fill(history_sec_.begin(), history_sec_.end(), 0.0f);
  std::fill(ola_.begin(), ola_.end(), 0.0f);
  estimator_->reset();
}

void StreamingPipeline::process_frame(std::span<const float> reference, std::span<const float> second,
                                      std::span<float> out, std::span<cfloat> mask_out) {
  const std::size_t hop = cfg_.hop, win = cfg_.window_len, bins = cfg_.num_bins();
  if (reference.size() != hop || second.size() != hop || out.size() != hop)
    throw std::invalid_argument("process_frame: expected " + std::to_string(hop) +
                                " samples per channel");
  if (!mask_out.empty() && mask_out.size() != bins)
    throw std::invalid_argument("process_frame: mask_out must hold " + std::to_string(bins) + " bins");

  acquire_steering();
  const auto& steering = slots_[front_].vector;

  std::copy(history_ref_.begin() + hop, history_ref_.end(), history_ref_.begin());
  std::copy(reference.begin(), reference.end(), history_ref_.end() - hop);
  std::copy(history_sec_.begin() + hop, history_sec_.end(), history_sec_.begin());
  std::copy(second.begin(), second.end(), history_sec_.end() - hop);

  for (std::size_t i = 0; i < win; ++i) scratch_[i] = window_[i] * history_ref_[i];
  fft_.forward(scratch_, spec_ref_);
  for (std::size_t i = 0; i < win; ++i) scratch_[i] = window_[i] * history_sec_[i];
  fft_.forward(scratch_, spec_sec_);
  for (std::size_t k = 0; k < bins; ++k) spec_sec_[k] *= steering[k];

  estimator_->estimate(spec_ref_, spec_sec_, mask_);
  for (std::size_t k = 0; k < bins; ++k) {
    const float mag = std::abs(mask_[k]);
    if (mag > mask_limit_) mask_[k] *= mask_limit_ / mag;
    spec_out_[k] = mask_[k] * spec_ref_[k];
  }
  if (!mask_out.empty()) std::copy(mask_.begin(), mask_.end(), mask_out.begin());

  fft_.inverse(spec_out_, scratch_);
  for (std::size_t i = 0; i < win; ++i) ola_[i] += window_[i] * scratch_[i];
  std::copy_n(ola_.begin(), hop, out.begin());
  std::copy(ola_.begin() + hop, ola_.end(), ola_.begin());
  std::fill(ola_.end() - hop, ola_.end(), 0.0f);

  frames_.fetch_add(1, std::memory_order_acq_rel);
}

}  // namespace steerbeam
