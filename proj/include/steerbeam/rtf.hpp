#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "steerbeam/metrics.hpp"
#include "steerbeam/streaming.hpp"

namespace steerbeam {

// Real-time factor = wall-clock processing time / audio duration.
struct RtfOptions {
  std::size_t clips = 100;
  double clip_duration_s = 10.0;
  int sample_rate = 16000;
  std::uint64_t seed = 7;
};

struct RtfResult {
  Summary rtf;
  std::vector<double> per_clip;
};

// Processes one whole two-channel clip; only this call is timed.
using ClipProcessor = std::function<void(std::span<const float> reference, std::span<const float> second)>;

// Seeded two-source far-field clip used as timing material.
std::array<std::vector<float>, 2> rtf_clip(const RtfOptions& options, std::size_t index);

RtfResult measure_rtf(const ClipProcessor& process, const RtfOptions& options = {});

// Times two processors on the same clips, alternating per clip so that slow
// drifts of the machine affect both equally.
std::pair<RtfResult, RtfResult> measure_rtf_paired(const ClipProcessor& a, const ClipProcessor& b,
                                                   const RtfOptions& options = {});

// Streams a clip hop by hop through the pipeline.
ClipProcessor pipeline_processor(StreamingPipeline& pipeline);

}  // namespace steerbeam
