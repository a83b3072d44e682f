#include "steerbeam/rtf.hpp"

#include <chrono>
#include <stdexcept>

#include "steerbeam/scene.hpp"
#include "steerbeam/signals.hpp"

namespace steerbeam {
namespace {

void check(const RtfOptions& o) {
  if (o.clips == 0) throw std::invalid_argument("rtf: clip count must be positive");
  if (!(o.clip_duration_s > 0.0)) throw std::invalid_argument("rtf: clip duration must be positive");
  if (o.sample_rate <= 0) throw std::invalid_argument("rtf: sample rate must be positive");
}

double time_clip(const ClipProcessor& process, const std::array<std::vector<float>, 2>& clip,
                 double duration_s) {
  const auto t0 = std::chrono::steady_clock::now();
  process(clip[0], clip[1]);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / duration_s;
}

}  // namespace

std::array<std::vector<float>, 2> rtf_clip(const RtfOptions& options, std::size_t index) {
  check(options);
  const double fs = options.sample_rate;
  const auto n = static_cast<std::size_t>(options.clip_duration_s * fs);
  const std::uint64_t seed = derive_seed(options.seed, index);
  const ArrayGeometry geom;
  auto a = speech_shaped_noise(n, derive_seed(seed, 0), fs);
  auto b = speech_shaped_noise(n, derive_seed(seed, 1), fs);
  set_rms_dbfs(a, -26.0);
  set_rms_dbfs(b, -30.0);
  const auto sa = simulate_far_field(a, 90.0, geom, fs);
  const auto sb = simulate_far_field(b, 35.0, geom, fs);
  std::array<std::vector<float>, 2> clip;
  for (std::size_t m = 0; m < 2; ++m) {
    clip[m].resize(n);
    for (std::size_t i = 0; i < n; ++i)
      clip[m][i] = static_cast<float>(sa.channel(m)[i] + sb.channel(m)[i]);
  }
  return clip;
}

RtfResult measure_rtf(const ClipProcessor& process, const RtfOptions& options) {
  check(options);
  RtfResult r;
  for (std::size_t i = 0; i < options.clips; ++i)
    r.per_clip.push_back(time_clip(process, rtf_clip(options, i), options.clip_duration_s));
  r.rtf = summarize(r.per_clip);
  return r;
}

std::pair<RtfResult, RtfResult> measure_rtf_paired(const ClipProcessor& a, const ClipProcessor& b,
                                                   const RtfOptions& options) {
  check(options);
  RtfResult ra, rb;
  for (std::size_t i = 0; i < options.clips; ++i) {
    const auto clip = rtf_clip(options, i);
    if (i % 2 == 0) {
      ra.per_clip.push_back(time_clip(a, clip, options.clip_duration_s));
      rb.per_clip.push_back(time_clip(b, clip, options.clip_duration_s));
    } else {
      rb.per_clip.push_back(time_clip(b, clip, options.clip_duration_s));
      ra.per_clip.push_back(time_clip(a, clip, options.clip_duration_s));
    }
  }
  ra.rtf = summarize(ra.per_clip);
  rb.rtf = summarize(rb.per_clip);
  return {ra, rb};
}

ClipProcessor pipeline_processor(StreamingPipeline& pipeline) {
  return [&pipeline](std::span<const float> ref, std::span<const float> sec) {
    if (ref.size() != sec.size()) throw std::invalid_argument("rtf: channel length mismatch");
    const std::size_t hop = pipeline.hop();
    std::vector<float> out(hop);
    pipeline.reset();
    for (std::size_t pos = 0; pos + hop <= ref.size(); pos += hop)
      pipeline.process_frame(ref.subspan(pos, hop), sec.subspan(pos, hop), out);
  };
}

}  // namespace steerbeam
