#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace steerbeam {

// Deterministic test material. All generators return unit-RMS signals unless
// stated otherwise; rescale with set_rms_dbfs.
std::vector<double> white_noise(std::size_t n, std::uint64_t seed);
// White noise shaped to a long-term speech-like spectrum: first-order
// high-pass at 100 Hz, then -6 dB/octave above 500 Hz.
std::vector<double> speech_shaped_noise(std::size_t n, std::uint64_t seed, double sample_rate);
// Synthetic talker: voiced syllables (harmonics of a gliding 90-240 Hz
// fundamental under the speech-shaped envelope, plus a little breath noise)
// separated by pauses, so that energy is sparse in time and frequency.
std::vector<double> speech_like(std::size_t n, std::uint64_t seed, double sample_rate);
std::vector<double> tone(std::size_t n, double freq_hz, double sample_rate, double phase_rad = 0.0);

double energy(std::span<const double> x);
double rms(std::span<const double> x);
// Scales x so that 20 log10(rms) == dbfs. Silent input is left unchanged.
void set_rms_dbfs(std::vector<double>& x, double dbfs);

// Circular delay by a possibly fractional number of samples, applied as a
// linear phase ramp over the full-length spectrum (exact for periodic input).
std::vector<double> fractional_delay(std::span<const double> x, double delay_samples);

// SplitMix64 step, used to derive independent per-item seeds from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace steerbeam
