#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

namespace steerbeam {

using Point3 = std::array<double, 3>;

struct ShoeboxRoom {
  Point3 dims{6.0, 6.0, 3.0};  // meters
  double t60 = 0.5;            // seconds; 0 means fully absorbing walls
  int max_order = -1;          // -1: every image that arrives within the RIR length
  double rir_length_s = 0.0;   // 0: T60 plus the longest direct path
  // Removes the low-frequency build-up of the in-phase image sum; applied
  // only to responses that contain reflections. 0 disables.
  double high_pass_hz = 100.0;

  bool contains(const Point3& p) const;
};

class RoomError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sabine absorption coefficient shared by all six walls:
// alpha = 24 ln(10) V / (c S T60). Throws RoomError if alpha > 1.
double sabine_absorption(const ShoeboxRoom& room, double speed_of_sound);

// Taps of the windowed-sinc fractional-delay interpolator used for every image.
inline constexpr int kImageTapLength = 64;

// Image-source impulse responses from one source to each receiver (Allen & Berkley),
// with per-image gain beta^reflections / (4 pi r),
// beta = sqrt(1 - alpha).
std::vector<std::vector<double>> compute_rirs(const ShoeboxRoom& room, const Point3& source,
                                              std::span<const Point3> receivers,
                                              double speed_of_sound, double sample_rate);

}  // namespace steerbeam
