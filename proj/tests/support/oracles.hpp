#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

// Independent reference computations for tests. Nothing here calls into the
// library's FFT, steering or boundary code.
namespace oracle {

// One-sided DFT by direct summation: X(k) = sum_n x(n) exp(-j 2 pi k n / N), k = 0..N/2.
std::vector<std::complex<double>> direct_dft(std::span<const double> x);

// Reverberation time from a room impulse response: Schroeder backward
// integration, least-squares line over the -5..-35 dB part of the decay
// curve, extrapolated to -60 dB.
double schroeder_t60(std::span<const double> rir, double sample_rate);

// noise minus its projection onto ref, rescaled so that ||result||^2 = ratio * ||ref||^2.
std::vector<double> orthogonal_component(std::span<const double> ref, std::span<const double> noise,
                                         double energy_ratio);

// Steered ROI boundaries written straight from the arccos formula, in degrees.
// Returns {phi_left, phi_right, saturated_left, saturated_right}.
struct Boundaries {
  double left, right;
  bool sat_left, sat_right;
};
Boundaries arccos_boundaries(double theta1_deg, double beta_deg, double gamma_deg);

// Frame-averaged inter-channel phase: arg(sum_n X2(n,k) conj(X1(n,k))) per bin,
// using a Hann-windowed direct DFT with the given frame length and hop.
std::vector<double> averaged_ipd(std::span<const double> ch1, std::span<const double> ch2,
                                 std::size_t frame, std::size_t hop);

double energy(std::span<const double> x);
double db(double ratio);

}  // namespace oracle

namespace oracle {

// Scans phi over [0, 180] in `step` degrees and reports the extent of the set
// where member(phi) holds. Edges touching 0 or 180 are reported as saturated.
struct SweepExtent {
  bool any = false;
  double left = 0.0;   // largest member angle
  double right = 0.0;  // smallest member angle
  bool sat_left = false;
  bool sat_right = false;
};
template <typename Pred>
SweepExtent sweep_extent(Pred member, double step) {
  SweepExtent e;
  const int n = static_cast<int>(180.0 / step + 0.5);
  for (int i = 0; i <= n; ++i) {
    const double phi = i * step;
    if (!member(phi)) continue;
    if (!e.any) e.right = phi;
    e.left = phi;
    e.any = true;
    if (i == 0) e.sat_right = true;
    if (i == n) e.sat_left = true;
  }
  return e;
}

}  // namespace oracle
