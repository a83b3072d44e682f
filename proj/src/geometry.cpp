#include "steerbeam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace steerbeam {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double acos_deg(double x) { return std::acos(x) * kRadToDeg; }

}  // namespace

void ArrayGeometry::validate() const {
  if (!(mic_spacing > 0.0)) throw std::invalid_argument("mic spacing must be positive");
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("speed of sound must be positive");
}

double ArrayGeometry::phase_scale(double freq_hz) const {
  return 2.0 * std::numbers::pi * freq_hz * mic_spacing / speed_of_sound;
}

void Roi::validate() const {
  if (!(half_width_deg > 0.0 && half_width_deg < 90.0))
    throw std::invalid_argument("ROI half-width must lie in (0, 90) degrees, got " +
                                std::to_string(half_width_deg));
  if (!(center_deg - half_width_deg > 0.0 && center_deg + half_width_deg < 180.0))
    throw std::invalid_argument("ROI boundaries must lie in (0, 180) degrees");
}

bool Roi::contains(double theta_deg) const {
  return theta_deg >= center_deg - half_width_deg && theta_deg <= center_deg + half_width_deg;
}

double cos_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r == 0.0) return 1.0;
  if (r == 90.0 || r == 270.0) return 0.0;
  if (r == 180.0) return -1.0;
  return std::cos(r * kDegToRad);
}

double sin_deg(double deg) { return cos_deg(90.0 - deg); }

double ipd_of_angle(double theta_deg, double freq_hz, const ArrayGeometry& geom) {
  return geom.phase_scale(freq_hz) * cos_deg(theta_deg);
}

double steering_phase(double gamma_deg, double freq_hz, const Roi& roi, const ArrayGeometry& geom) {
  const double theta2 = roi.center_deg - gamma_deg;
  return geom.phase_scale(freq_hz) * (cos_deg(roi.center_deg) - cos_deg(theta2));
}

bool steering_is_valid(double gamma_deg, const Roi& roi) {
  const double theta2 = roi.center_deg - gamma_deg;
  return std::isfinite(theta2) && theta2 > 0.0 && theta2 < 180.0;
}

std::vector<std::complex<double>> steering_vector(double gamma_deg, const Roi& roi,
                                                  const ArrayGeometry& geom,
                                                  const StftConfig& cfg) {
  if (!steering_is_valid(gamma_deg, roi))
    throw std::invalid_argument("steering gamma=" + std::to_string(gamma_deg) +
                                " moves the ROI center beyond endfire");
  geom.validate();
  std::vector<std::complex<double>> a(cfg.num_bins());
  for (std::size_t k = 0; k < a.size(); ++k)
    a[k] = std::polar(1.0, steering_phase(gamma_deg, bin_frequency(k, cfg), roi, geom));
  return a;
}

SteeringState SteeringState::make(double gamma_deg, const Roi& roi, const ArrayGeometry& geom,
                                  const StftConfig& cfg) {
  return {gamma_deg, roi.center_deg - gamma_deg, steering_vector(gamma_deg, roi, geom, cfg)};
}

SteeringState SteeringState::identity(const StftConfig& cfg, const Roi& roi) {
  return {0.0, roi.center_deg, std::vector<std::complex<double>>(cfg.num_bins(), 1.0)};
}

void apply_steering(std::span<std::complex<double>> frame,
                    std::span<const std::complex<double>> steering) {
  if (frame.size() != steering.size())
    throw std::invalid_argument("apply_steering: frame has " + std::to_string(frame.size()) +
                                " bins, steering vector " + std::to_string(steering.size()));
  for (std::size_t k = 0; k < frame.size(); ++k) frame[k] *= steering[k];
}

Spectrogram apply_steering(const Spectrogram& spec, const SteeringState& steering) {
  if (spec.num_channels() < 2) throw std::invalid_argument("apply_steering: need two channels");
  Spectrogram out = spec;
  for (std::size_t n = 0; n < out.num_frames(); ++n) apply_steering(out.frame(1, n), steering.vector);
  return out;
}

bool SteeredBoundaries::contains(double phi_deg) const {
  return phi_deg >= phi_right_deg && phi_deg <= phi_left_deg;
}

SteeredBoundaries steered_boundaries(const Roi& roi, double gamma_deg) {
  const double shift = cos_deg(roi.center_deg - gamma_deg) - cos_deg(roi.center_deg);
  const double arg_left = cos_deg(roi.center_deg + roi.half_width_deg) + shift;
  const double arg_right = cos_deg(roi.center_deg - roi.half_width_deg) + shift;

  SteeredBoundaries b;
  b.saturated_left = arg_left > 1.0 || arg_left < -1.0;
  b.saturated_right = arg_right > 1.0 || arg_right < -1.0;
  b.phi_left_deg = acos_deg(std::clamp(arg_left, -1.0, 1.0));
  b.phi_right_deg = acos_deg(std::clamp(arg_right, -1.0, 1.0));
  return b;
}

SteeredBoundaries linear_boundaries(const Roi& roi, double gamma_deg) {
  const double left = roi.center_deg + roi.half_width_deg - gamma_deg;
  const double right = roi.center_deg - roi.half_width_deg - gamma_deg;
  SteeredBoundaries b;
  b.saturated_left = left < 0.0 || left > 180.0;
  b.saturated_right = right < 0.0 || right > 180.0;
  b.phi_left_deg = std::clamp(left, 0.0, 180.0);
  b.phi_right_deg = std::clamp(right, 0.0, 180.0);
  return b;
}

bool sweep_membership_oracle(double phi_deg, const Roi& roi, double gamma_deg,
                             const ArrayGeometry& geom, double probe_hz) {
  const auto a = std::polar(1.0, steering_phase(gamma_deg, probe_hz, roi, geom));
  const double steered_ipd = ipd_of_angle(phi_deg, probe_hz, geom) + std::arg(a);
  const double lo = ipd_of_angle(roi.center_deg + roi.half_width_deg, probe_hz, geom);
  const double hi = ipd_of_angle(roi.center_deg - roi.half_width_deg, probe_hz, geom);
  return steered_ipd >= lo && steered_ipd <= hi;
}

double equivalent_unsteered_angle(double phi_deg, const Roi& roi, double gamma_deg) {
  const double c =
      cos_deg(phi_deg) - cos_deg(roi.center_deg - gamma_deg) + cos_deg(roi.center_deg);
  if (c < -1.0 || c > 1.0) return std::numeric_limits<double>::quiet_NaN();
  return acos_deg(c);
}

}  // namespace steerbeam
