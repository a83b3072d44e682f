#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerbeam/audio.hpp"
#include "steerbeam/geometry.hpp"
#include "steerbeam/room.hpp"

namespace steerbeam {

enum class SourceRole { Target, Interferer, Noise };

const char* to_string(SourceRole role);
std::optional<SourceRole> parse_role(std::string_view name);

struct SignalSpec {
  enum class Kind { WhiteNoise, SpeechShaped, SpeechLike, Tone, Wav };
  Kind kind = Kind::SpeechShaped;
  double freq_hz = 440.0;          // Tone
  std::filesystem::path path;      // Wav, already resolved
  double level_dbfs = -20.0;       // RMS before mixing; ignored for Wav
};

struct SourceSpec {
  std::string name;
  SourceRole role = SourceRole::Target;
  SignalSpec signal;
  // Either an array-local direction (degrees) plus distance, or an absolute
  // (x, y) position in the room plane.
  std::optional<double> angle_deg;
  double distance_m = 1.5;
  std::optional<std::array<double, 2>> position;
};

// Array center and axis orientation in room coordinates. The reference
// microphone sits at -d/2 along the axis, the second microphone at +d/2;
// array-local angle 90 degrees points along the axis rotated counter-clockwise.
struct ArrayPose {
  double x = 3.0;
  double y = 3.0;
  double z = 1.5;
  double orientation_deg = 0.0;
};

struct Scene {
  std::optional<ShoeboxRoom> room;  // empty: anechoic free field (plane waves)
  ArrayPose array;
  ArrayGeometry geometry;
  Roi roi;
  bool exclude_mirrored_roi = false;
  std::vector<SourceSpec> sources;
  std::optional<double> sir_db;
  std::optional<double> snr_db;
  std::optional<double> level_dbfs;
  std::uint64_t seed = 0;
  double duration_s = 4.0;
  int sample_rate = 16000;
};

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::array<Point3, 2> mic_positions(const ArrayPose& pose, const ArrayGeometry& geom);
// Source direction in array-local degrees, [0, 360).
double source_local_angle(const SourceSpec& src, const ArrayPose& pose);
Point3 source_position(const SourceSpec& src, const ArrayPose& pose);
// True if phi (array-local, degrees) lies in the reflection of the ROI across the array axis.
bool in_mirrored_roi(double phi_deg, const Roi& roi);

// Throws SceneError naming the offending source.
void validate_scene(const Scene& scene);

std::vector<double> render_signal(const SignalSpec& spec, std::size_t num_samples,
                                  double sample_rate, std::uint64_t seed);

// Plane wave at theta: channel 1 carries the signal, channel 0 (reference) the
// same signal delayed by d cos(theta) / c via an exact frequency-domain delay.
MultichannelAudio simulate_far_field(std::span<const double> signal, double theta_deg,
                                     const ArrayGeometry& geom, double sample_rate);

// Two-channel image-source rendering, truncated to the input length.
MultichannelAudio simulate_shoebox(std::span<const double> signal, const ShoeboxRoom& room,
                                   const Point3& source, const std::array<Point3, 2>& mics,
                                   double speed_of_sound, double sample_rate);

// Renders source i of the scene at its raw level.
MultichannelAudio render_source(const Scene& scene, std::size_t index);

struct MixResult {
  MultichannelAudio mixture;
  MultichannelAudio target;
  MultichannelAudio interferer;
  MultichannelAudio noise;
  std::vector<MultichannelAudio> sources;  // per source, scaled exactly as in the mixture
  double interferer_gain = 1.0;
  double noise_gain = 1.0;
  double level_gain = 1.0;
};

// SIR and SNR are measured on the reference channel against the summed target.
MixResult mix_scene(const Scene& scene);

enum class NoisePlacement { Anywhere, InsideRoi, OutsideRoi };

struct SamplerOptions {
  double duration_s = 10.0;
  int sample_rate = 16000;
  ArrayGeometry geometry;
  Point3 min_dims{4.0, 4.0, 2.0};
  Point3 max_dims{8.0, 8.0, 4.0};
  double min_t60 = 0.25;
  double max_t60 = 0.7;
  double wall_clearance = 2.0;   // array to every side wall
  double source_margin = 0.3;    // sources to every wall
  double min_source_distance = 0.5;
  bool include_noise = true;
  NoisePlacement noise_placement = NoisePlacement::Anywhere;
  bool exclude_mirrored_roi = true;
  int max_attempts = 1000;
};

Scene sample_training_scene(std::uint64_t seed, const Roi& roi, const SamplerOptions& options = {});

}  // namespace steerbeam
