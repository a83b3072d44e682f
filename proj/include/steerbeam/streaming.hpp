#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "steerbeam/fft.hpp"
#include "steerbeam/separation.hpp"

namespace steerbeam {

struct SteeringAck {
  double gamma_deg = 0.0;
  double theta2_deg = 90.0;
  std::uint64_t effective_frame = 0;  // every frame from this index on uses the new vector
};

// Frame-by-frame causal separation: one hop of two-channel input in, one hop
// of separated reference-channel audio out, delayed by window_len - hop
// samples. Exactly one thread may call process_frame(); set_steering() may be
// called from any thread and becomes visible at the next frame boundary.
// A frame always sees one complete steering vector, never a mix.
class StreamingPipeline {
 public:
  StreamingPipeline(const StftConfig& stft, const ArrayGeometry& geom, const Roi& roi,
                    std::unique_ptr<MaskEstimator> estimator,
                    float mask_limit = kDefaultMaskLimit);

  std::size_t hop() const { return cfg_.hop; }
  std::size_t num_bins() const { return cfg_.num_bins(); }
  std::size_t latency_samples() const { return cfg_.window_len - cfg_.hop; }
  const StftConfig& stft_config() const { return cfg_; }
  const Roi& roi() const { return roi_; }

  // All spans hop-sized; mask_out (optional) receives this frame's mask.
  // Throws std::invalid_argument on a wrong frame size.
  void process_frame(std::span<const float> reference, std::span<const float> second,
                     std::span<float> out, std::span<cfloat> mask_out = {});

  // O(K) rebuild of a(k) into a spare buffer, then an atomic hand-over.
  // Throws std::invalid_argument for steering beyond endfire; the running
  // state is not touched in that case.
  SteeringAck set_steering(double gamma_deg);
  // Last acknowledged gamma.
  double gamma_deg() const { return acknowledged_gamma_.load(std::memory_order_acquire); }
  std::uint64_t frames_processed() const { return frames_.load(std::memory_order_acquire); }
  // Gamma of the vector used by the most recent frame; process_frame() thread only.
  double frame_gamma_deg() const { return slots_[front_].gamma_deg; }

  // Clears audio history; keeps the current steering.
  void reset();

 private:
  struct SteeringSlot {
    double gamma_deg = 0.0;
    std::vector<cfloat> vector;
  };
  static constexpr unsigned kDirty = 4;

  void acquire_steering();
  void fill_steering(SteeringSlot& slot, double gamma_deg);

  StftConfig cfg_;
  ArrayGeometry geom_;
  Roi roi_;
  std::unique_ptr<MaskEstimator> estimator_;
  float mask_limit_;

  std::vector<float> window_;
  RealFft<float> fft_;
  std::vector<float> history_ref_, history_sec_, scratch_, ola_;
  std::vector<cfloat> spec_ref_, spec_sec_, mask_, spec_out_;

  // Triple buffer: front_ is owned by the audio thread, back_ by writers,
  // the third slot index lives in shared_ together with a dirty flag.
  std::array<SteeringSlot, 3> slots_;
  unsigned front_ = 0;
  unsigned back_ = 1;
  std::atomic<unsigned> shared_{2};
  std::mutex writer_mutex_;
  double bin_phase_step_ = 0.0;  // 2 pi (fs / nfft) d / c
  double center_cos_ = 0.0;
  std::vector<double> block_re_, block_im_;  // writer scratch, guarded by writer_mutex_
  std::atomic<double> acknowledged_gamma_{0.0};
  std::atomic<std::uint64_t> frames_{0};
  std::atomic<std::uint64_t> frames_started_{0};
};

}  // namespace steerbeam
