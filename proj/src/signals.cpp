#include "steerbeam/signals.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "steerbeam/fft.hpp"

namespace steerbeam {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  set_rms_dbfs(x, 0.0);
  return x;
}

std::vector<double> speech_shaped_noise(std::size_t n, std::uint64_t seed, double sample_rate) {
  constexpr std::size_t kWarmup = 4096;
  const auto raw = white_noise(n + kWarmup, seed);
  const double hp = 1.0 - std::exp(-2.0 * std::numbers::pi * 100.0 / sample_rate);
  const double lp = 1.0 - std::exp(-2.0 * std::numbers::pi * 500.0 / sample_rate);
  std::vector<double> out(n);
  double hp_state = 0.0, lp_state = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    hp_state += hp * (raw[i] - hp_state);
    lp_state += lp * ((raw[i] - hp_state) - lp_state);
    if (i >= kWarmup) out[i - kWarmup] = lp_state;
  }
  set_rms_dbfs(out, 0.0);
  return out;
}

std::vector<double> speech_like(std::size_t n, std::uint64_t seed, double sample_rate) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const auto breath = speech_shaped_noise(n, derive_seed(seed, 1), sample_rate);
  const double max_harmonic_hz = std::min(5000.0, 0.45 * sample_rate);
  const auto ramp = static_cast<std::size_t>(0.025 * sample_rate);

  std::vector<double> out(n, 0.0);
  std::vector<double> offsets;
  auto pos = static_cast<std::size_t>(uniform(0.0, 0.2) * sample_rate);
  while (pos < n) {
    const auto len = static_cast<std::size_t>(uniform(0.12, 0.35) * sample_rate);
    const double f0 = uniform(90.0, 240.0);
    const double glide = uniform(-0.15, 0.15);
    const double gain = std::pow(10.0, uniform(-6.0, 0.0) / 20.0);
    offsets.resize(static_cast<std::size_t>(max_harmonic_hz / 90.0) + 1);
    for (auto& o : offsets) o = uniform(0.0, 2.0 * std::numbers::pi);

    double phase = 0.0;
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double f = f0 * (1.0 + glide * static_cast<double>(i) / static_cast<double>(len));
      phase += 2.0 * std::numbers::pi * f / sample_rate;
      double voiced = 0.0;
      for (std::size_t h = 1; h * f < max_harmonic_hz; ++h) {
        const double fh = h * f;
        const double amp = (fh / (fh + 100.0)) / std::sqrt(1.0 + (fh / 500.0) * (fh / 500.0));
        voiced += amp * std::sin(h * phase + offsets[h - 1]);
      }
      const std::size_t edge = std::min(i, len - 1 - i);
      const double env = edge < ramp ? 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp) : 1.0;
      out[pos + i] = gain * env * (voiced + 0.1 * breath[pos + i]);
    }
    pos += len + static_cast<std::size_t>(uniform(0.05, 0.25) * sample_rate);
  }
  set_rms_dbfs(out, 0.0);
  return out;
}

std::vector<double> tone(std::size_t n, double freq_hz, double sample_rate, double phase_rad) {
  std::vector<double> x(n);
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sqrt(2.0) * std::sin(w * static_cast<double>(i) + phase_rad);
  return x;
}

double energy(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double rms(std::span<const double> x) {
  return x.empty() ? 0.0 : std::sqrt(energy(x) / static_cast<double>(x.size()));
}

void set_rms_dbfs(std::vector<double>& x, double dbfs) {
  const double current = rms(x);
  if (current <= 0.0) return;
  const double gain = std::pow(10.0, dbfs / 20.0) / current;
  for (auto& v : x) v *= gain;
}

std::vector<double> fractional_delay(std::span<const double> x, double delay_samples) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  RealFft<double> fft(n);
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) * delay_samples /
                         static_cast<double>(n);
    if (n % 2 == 0 && k == n / 2) {
      // Nyquist bin of a real signal must stay real.
      spec[k] *= std::cos(phase);
    } else {
      spec[k] *= std::polar(1.0, phase);
    }
  }
  std::vector<double> out(n);
  fft.inverse(spec, out);
  return out;
}

}  // namespace steerbeam
