#include "steerbeam/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "steerbeam/fft.hpp"
#include "steerbeam/signals.hpp"
#include "steerbeam/wav.hpp"

namespace steerbeam {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double wrap360(double deg) {
  double r = std::fmod(deg, 360.0);
  return r < 0.0 ? r + 360.0 : r;
}

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b, double gain) {
  std::vector<double> out(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gain * b[i];
  return out;
}

MultichannelAudio scaled(const MultichannelAudio& x, double gain) {
  auto channels = x.channels();
  for (auto& ch : channels)
    for (auto& v : ch) v *= gain;
  return {std::move(channels), x.sample_rate()};
}

}  // namespace

const char* to_string(SourceRole role) {
  switch (role) {
    case SourceRole::Target: return "target";
    case SourceRole::Interferer: return "interferer";
    case SourceRole::Noise: return "noise";
  }
  return "?";
}

std::optional<SourceRole> parse_role(std::string_view name) {
  if (name == "target") return SourceRole::Target;
  if (name == "interferer") return SourceRole::Interferer;
  if (name == "noise") return SourceRole::Noise;
  return std::nullopt;
}

std::array<Point3, 2> mic_positions(const ArrayPose& pose, const ArrayGeometry& geom) {
  const double ux = cos_deg(pose.orientation_deg), uy = sin_deg(pose.orientation_deg);
  const double h = geom.mic_spacing / 2.0;
  return {Point3{pose.x - h * ux, pose.y - h * uy, pose.z},
          Point3{pose.x + h * ux, pose.y + h * uy, pose.z}};
}

double source_local_angle(const SourceSpec& src, const ArrayPose& pose) {
  if (src.position) {
    const double dx = (*src.position)[0] - pose.x, dy = (*src.position)[1] - pose.y;
    return wrap360(std::atan2(dy, dx) / kDegToRad - pose.orientation_deg);
  }
  return wrap360(src.angle_deg.value_or(90.0));
}

Point3 source_position(const SourceSpec& src, const ArrayPose& pose) {
  if (src.position) return {(*src.position)[0], (*src.position)[1], pose.z};
  const double global = pose.orientation_deg + src.angle_deg.value_or(90.0);
  return {pose.x + src.distance_m * cos_deg(global), pose.y + src.distance_m * sin_deg(global),
          pose.z};
}

bool in_mirrored_roi(double phi_deg, const Roi& roi) {
  const double phi = wrap360(phi_deg);
  return phi > 180.0 && roi.contains(360.0 - phi);
}

void validate_scene(const Scene& scene) {
  scene.geometry.validate();
  scene.roi.validate();
  if (scene.sample_rate <= 0) throw SceneError("sample_rate must be positive");
  if (!(scene.duration_s > 0.0)) throw SceneError("duration_s must be positive");
  if (scene.sources.empty()) throw SceneError("scene has no sources");
  if (std::none_of(scene.sources.begin(), scene.sources.end(),
                   [](const SourceSpec& s) { return s.role == SourceRole::Target; }))
    throw SceneError("scene needs at least one target source");

  if (scene.room) {
    for (const auto& mic : mic_positions(scene.array, scene.geometry)) {
      if (!scene.room->contains(mic)) throw SceneError("array lies outside the room");
    }
    try {
      sabine_absorption(*scene.room, scene.geometry.speed_of_sound);
    } catch (const RoomError& e) {
      throw SceneError(e.what());
    }
  }
  for (const auto& src : scene.sources) {
    if (!src.angle_deg && !src.position)
      throw SceneError("source '" + src.name + "' needs angle_deg or position");
    if (scene.room && !scene.room->contains(source_position(src, scene.array)))
      throw SceneError("source '" + src.name + "' lies outside the room");
    if (scene.exclude_mirrored_roi && in_mirrored_roi(source_local_angle(src, scene.array), scene.roi))
      throw SceneError("source '" + src.name + "' lies in the mirrored ROI");
  }
}

std::vector<double> render_signal(const SignalSpec& spec, std::size_t num_samples,
                                  double sample_rate, std::uint64_t seed) {
  std::vector<double> x;
  switch (spec.kind) {
    case SignalSpec::Kind::WhiteNoise: x = white_noise(num_samples, seed); break;
    case SignalSpec::Kind::SpeechShaped: x = speech_shaped_noise(num_samples, seed, sample_rate); break;
    case SignalSpec::Kind::SpeechLike: x = speech_like(num_samples, seed, sample_rate); break;
    case SignalSpec::Kind::Tone: x = tone(num_samples, spec.freq_hz, sample_rate); break;
    case SignalSpec::Kind::Wav: {
      const auto audio = read_wav(spec.path);
      if (std::abs(audio.sample_rate() - sample_rate) > 1e-9)
        throw SceneError(spec.path.string() + ": sample rate " +
                         std::to_string(audio.sample_rate()) + " != scene rate " +
                         std::to_string(sample_rate));
      const auto ch = audio.channel(0);
      x.assign(num_samples, 0.0);
      std::copy_n(ch.begin(), std::min(num_samples, ch.size()), x.begin());
      return x;
    }
  }
  set_rms_dbfs(x, spec.level_dbfs);
  return x;
}

MultichannelAudio simulate_far_field(std::span<const double> signal, double theta_deg,
                                     const ArrayGeometry& geom, double sample_rate) {
  geom.validate();
  const double delay_samples =
      geom.mic_spacing * cos_deg(theta_deg) / geom.speed_of_sound * sample_rate;
  std::vector<double> second(signal.begin(), signal.end());
  auto reference = delay_samples == 0.0 ? second : fractional_delay(signal, delay_samples);
  return {{std::move(reference), std::move(second)}, sample_rate};
}

MultichannelAudio simulate_shoebox(std::span<const double> signal, const ShoeboxRoom& room,
                                   const Point3& source, const std::array<Point3, 2>& mics,
                                   double speed_of_sound, double sample_rate) {
  const auto rirs = compute_rirs(room, source, mics, speed_of_sound, sample_rate);
  std::vector<std::vector<double>> out;
  for (const auto& h : rirs) {
    auto y = fft_convolve(signal, h);
    y.resize(signal.size());
    out.push_back(std::move(y));
  }
  return {std::move(out), sample_rate};
}

MultichannelAudio render_source(const Scene& scene, std::size_t index) {
  const auto& src = scene.sources.at(index);
  const auto n = static_cast<std::size_t>(std::llround(scene.duration_s * scene.sample_rate));
  const auto signal = render_signal(src.signal, n, scene.sample_rate, derive_seed(scene.seed, index));
  if (!scene.room)
    return simulate_far_field(signal, source_local_angle(src, scene.array), scene.geometry,
                              scene.sample_rate);
  try {
    return simulate_shoebox(signal, *scene.room, source_position(src, scene.array),
                            mic_positions(scene.array, scene.geometry),
                            scene.geometry.speed_of_sound, scene.sample_rate);
  } catch (const RoomError& e) {
    throw SceneError("source '" + src.name + "': " + e.what());
  }
}

MixResult mix_scene(const Scene& scene) {
  validate_scene(scene);
  const auto n = static_cast<std::size_t>(std::llround(scene.duration_s * scene.sample_rate));
  const double fs = scene.sample_rate;

  std::vector<MultichannelAudio> rendered;
  for (std::size_t i = 0; i < scene.sources.size(); ++i) rendered.push_back(render_source(scene, i));

  auto sum_role = [&](SourceRole role) {
    auto acc = MultichannelAudio::zeros(2, n, fs).channels();
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      if (scene.sources[i].role != role) continue;
      for (std::size_t m = 0; m < 2; ++m) {
        const auto ch = rendered[i].channel(m);
        for (std::size_t t = 0; t < n; ++t) acc[m][t] += ch[t];
      }
    }
    return MultichannelAudio(std::move(acc), fs);
  };
  const auto target = sum_role(SourceRole::Target);
  const auto interferer = sum_role(SourceRole::Interferer);
  const auto noise = sum_role(SourceRole::Noise);

  const double e_target = energy(target.channel(0));
  if (e_target <= 0.0) throw SceneError("target is silent at the reference microphone; SIR undefined");

  MixResult result;
  const double e_interf = energy(interferer.channel(0));
  if (scene.sir_db && e_interf > 0.0)
    result.interferer_gain = std::sqrt(e_target / (e_interf * std::pow(10.0, *scene.sir_db / 10.0)));
  const double e_noise = energy(noise.channel(0));
  if (scene.snr_db && e_noise > 0.0)
    result.noise_gain = std::sqrt(e_target / (e_noise * std::pow(10.0, *scene.snr_db / 10.0)));

  std::vector<std::vector<double>> mix(2);
  for (std::size_t m = 0; m < 2; ++m) {
    const std::vector<double> t(target.channel(m).begin(), target.channel(m).end());
    const std::vector<double> i(interferer.channel(m).begin(), interferer.channel(m).end());
    const std::vector<double> z(noise.channel(m).begin(), noise.channel(m).end());
    mix[m] = add(add(t, i, result.interferer_gain), z, result.noise_gain);
  }
  if (scene.level_dbfs) {
    const double level = rms(mix[0]);
    if (level > 0.0) result.level_gain = std::pow(10.0, *scene.level_dbfs / 20.0) / level;
  }
  for (auto& ch : mix)
    for (auto& v : ch) v *= result.level_gain;

  result.mixture = MultichannelAudio(std::move(mix), fs);
  result.target = scaled(target, result.level_gain);
  result.interferer = scaled(interferer, result.level_gain * result.interferer_gain);
  result.noise = scaled(noise, result.level_gain * result.noise_gain);
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    double g = result.level_gain;
    if (scene.sources[i].role == SourceRole::Interferer) g *= result.interferer_gain;
    if (scene.sources[i].role == SourceRole::Noise) g *= result.noise_gain;
    result.sources.push_back(scaled(rendered[i], g));
  }
  return result;
}

Scene sample_training_scene(std::uint64_t seed, const Roi& roi, const SamplerOptions& options) {
  roi.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto gaussian = [&](double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng); };

  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    Scene scene;
    scene.seed = derive_seed(seed, 0x5CE4E);
    scene.duration_s = options.duration_s;
    scene.sample_rate = options.sample_rate;
    scene.geometry = options.geometry;
    scene.roi = roi;
    scene.exclude_mirrored_roi = options.exclude_mirrored_roi;

    ShoeboxRoom room;
    for (int i = 0; i < 3; ++i) room.dims[i] = uniform(options.min_dims[i], options.max_dims[i]);
    room.t60 = uniform(options.min_t60, options.max_t60);
    try {
      sabine_absorption(room, scene.geometry.speed_of_sound);
    } catch (const RoomError&) {
      continue;
    }
    if (room.dims[0] < 2.0 * options.wall_clearance || room.dims[1] < 2.0 * options.wall_clearance)
      continue;
    scene.room = room;

    // Same height for array and sources; wall clearance applies in the horizontal plane.
    scene.array.x = uniform(options.wall_clearance, room.dims[0] - options.wall_clearance);
    scene.array.y = uniform(options.wall_clearance, room.dims[1] - options.wall_clearance);
    scene.array.z = uniform(1.0, std::min(1.8, room.dims[2] - options.source_margin));
    scene.array.orientation_deg = uniform(0.0, 360.0);

    auto inside_with_margin = [&](const Point3& p) {
      return p[0] > options.source_margin && p[0] < room.dims[0] - options.source_margin &&
             p[1] > options.source_margin && p[1] < room.dims[1] - options.source_margin;
    };
    auto place = [&](SourceSpec& src, auto&& angle_ok, bool in_roi) {
      for (int tries = 0; tries < 200; ++tries) {
        const double angle = in_roi ? uniform(roi.center_deg - roi.half_width_deg,
                                              roi.center_deg + roi.half_width_deg)
                                    : uniform(0.0, 360.0);
        if (!angle_ok(angle)) continue;
        src.angle_deg = angle;
        src.distance_m = uniform(options.min_source_distance,
                                 std::max(room.dims[0], room.dims[1]));
        if (inside_with_margin(source_position(src, scene.array))) return true;
      }
      return false;
    };
    auto outside_roi = [&](double a) {
      return !roi.contains(a) && !(options.exclude_mirrored_roi && in_mirrored_roi(a, roi));
    };
    auto any_allowed = [&](double a) {
      return !(options.exclude_mirrored_roi && in_mirrored_roi(a, roi));
    };

    auto make_source = [](std::string name, SourceRole role, SignalSpec::Kind kind) {
      SourceSpec s;
      s.name = std::move(name);
      s.role = role;
      s.signal.kind = kind;
      s.distance_m = 1.0;
      return s;
    };
    auto target = make_source("target", SourceRole::Target, SignalSpec::Kind::SpeechShaped);
    auto interferer = make_source("interferer", SourceRole::Interferer, SignalSpec::Kind::SpeechShaped);
    if (!place(target, any_allowed, true) || !place(interferer, outside_roi, false)) continue;
    scene.sources = {target, interferer};

    if (options.include_noise) {
      auto noise = make_source("noise", SourceRole::Noise, SignalSpec::Kind::WhiteNoise);
      bool ok = false;
      switch (options.noise_placement) {
        case NoisePlacement::Anywhere:
          // Uniform over the floor plan rather than over angle.
          for (int tries = 0; tries < 200 && !ok; ++tries) {
            noise.position = std::array<double, 2>{
                uniform(options.source_margin, room.dims[0] - options.source_margin),
                uniform(options.source_margin, room.dims[1] - options.source_margin)};
            const double dx = (*noise.position)[0] - scene.array.x;
            const double dy = (*noise.position)[1] - scene.array.y;
            ok = std::hypot(dx, dy) >= options.min_source_distance &&
                 any_allowed(source_local_angle(noise, scene.array));
          }
          break;
        case NoisePlacement::InsideRoi: ok = place(noise, any_allowed, true); break;
        case NoisePlacement::OutsideRoi: ok = place(noise, outside_roi, false); break;
      }
      if (!ok) continue;
      scene.sources.push_back(noise);
    }

    scene.sir_db = uniform(0.0, 10.0);
    scene.snr_db = gaussian(7.0, 3.0);
    scene.level_dbfs = gaussian(-28.0, 10.0);
    return scene;
  }
  throw SceneError("sample_training_scene: constraints not met after " +
                   std::to_string(options.max_attempts) + " attempts");
}

}  // namespace steerbeam
