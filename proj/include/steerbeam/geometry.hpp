#pragma once

#include <complex>
#include <span>
#include <vector>

#include "steerbeam/stft.hpp"

namespace steerbeam {

// Two-microphone uniform linear array. The reference (left) microphone is
// channel 0. Angles are measured from the array axis pointing from the
// reference towards the second microphone, so a source at theta adds an
// extra travel path d*cos(theta) to the reference microphone.
struct ArrayGeometry {
  double mic_spacing = 0.05;     // meters
  double speed_of_sound = 343.0; // m/s

  void validate() const;
  // Above c / (2 d) the angle to phase-difference map is no longer injective.
  double aliasing_frequency() const { return speed_of_sound / (2.0 * mic_spacing); }
  // 2 pi f d / c
  double phase_scale(double freq_hz) const;
};

// Ratio between the ROI span alpha and its half-width beta.
inline constexpr double kRoiSpanPerHalfWidth = 2.0;

// Region of interest: boundaries at center +/- half_width (degrees).
struct Roi {
  double center_deg = 90.0;
  double half_width_deg = 10.0;

  static Roi from_span(double span_deg, double center_deg = 90.0) {
    return {center_deg, span_deg / kRoiSpanPerHalfWidth};
  }
  double span_deg() const { return kRoiSpanPerHalfWidth * half_width_deg; }
  void validate() const;
  bool contains(double theta_deg) const;
};

// cos/sin of an angle in degrees, exact at multiples of 90 degrees.
double cos_deg(double deg);
double sin_deg(double deg);

// Far-field inter-microphone phase difference 2 pi f d cos(theta) / c, unwrapped.
// Measured from a spectrum as arg(Y_2 * conj(Y_ref)).
double ipd_of_angle(double theta_deg, double freq_hz, const ArrayGeometry& geom);

// Phase shift that maps the steered direction theta2 = center - gamma onto the
// ROI center: 2 pi f d / c (cos(center) - cos(theta2)).
double steering_phase(double gamma_deg, double freq_hz, const Roi& roi, const ArrayGeometry& geom);

// theta2 = center - gamma must stay strictly between endfire directions.
bool steering_is_valid(double gamma_deg, const Roi& roi);

// Per-bin steering vector a(k) = exp(j * steering_phase(f_k)); |a(k)| == 1, a(0) == 1.
// Throws std::invalid_argument for steering beyond endfire.
std::vector<std::complex<double>> steering_vector(double gamma_deg, const Roi& roi,
                                                  const ArrayGeometry& geom, const StftConfig& cfg);

struct SteeringState {
  double gamma_deg = 0.0;
  double theta2_deg = 90.0;
  std::vector<std::complex<double>> vector;  // a(k)

  static SteeringState make(double gamma_deg, const Roi& roi, const ArrayGeometry& geom,
                            const StftConfig& cfg);
  // a(k) == 1 for every bin.
  static SteeringState identity(const StftConfig& cfg, const Roi& roi = {});
};

// Multiplies one channel frame by a(k) in place.
void apply_steering(std::span<std::complex<double>> frame,
                    std::span<const std::complex<double>> steering);
// Copy of spec with channel 1 multiplied by a(k); channel 0 is left untouched.
Spectrogram apply_steering(const Spectrogram& spec, const SteeringState& steering);

struct SteeredBoundaries {
  double phi_left_deg = 0.0;   // from center + half_width
  double phi_right_deg = 0.0;  // from center - half_width
  bool saturated_left = false;
  bool saturated_right = false;

  // Reflection across the array axis (front-back ambiguity).
  double mirrored_left_deg() const { return 360.0 - phi_left_deg; }
  double mirrored_right_deg() const { return 360.0 - phi_right_deg; }
  double width_deg() const { return phi_left_deg - phi_right_deg; }
  bool contains(double phi_deg) const;
};

// phi_{l,r} = arccos(cos(center +/- beta) - cos(center) + cos(center - gamma)).
// Arguments outside [-1, 1] are clamped and flagged as saturated.
SteeredBoundaries steered_boundaries(const Roi& roi, double gamma_deg);

// Naive rotation (center +/- beta - gamma) clipped to [0, 180], for comparison overlays.
SteeredBoundaries linear_boundaries(const Roi& roi, double gamma_deg);

// Direct membership test: does the steered phase difference of a far-field
// source at phi fall inside the phase-difference window of the unsteered ROI,
// evaluated at a single probe frequency below the aliasing limit.
bool sweep_membership_oracle(double phi_deg, const Roi& roi, double gamma_deg,
                             const ArrayGeometry& geom = {}, double probe_hz = 1000.0);

// Maps a direction observed under steering to the direction an unsteered
// array would need to see for the same phase difference, or NaN if none.
double equivalent_unsteered_angle(double phi_deg, const Roi& roi, double gamma_deg);

}  // namespace steerbeam
