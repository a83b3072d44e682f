#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "steerbeam/fft.hpp"
#include "steerbeam/signals.hpp"
#include "steerbeam/stft.hpp"
#include "steerbeam/wav.hpp"

using namespace steerbeam;

namespace {

MultichannelAudio mono(std::vector<double> x) { return MultichannelAudio({std::move(x)}, 16000.0); }

double interior_error_db(std::span<const double> x, std::span<const double> y, SampleRange r) {
  double num = 0, den = 0;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    num += (x[i] - y[i]) * (x[i] - y[i]);
    den += x[i] * x[i];
  }
  return 10.0 * std::log10(num / den);
}

}  // namespace

TEST_CASE("fft forward matches direct DFT") {
  for (std::size_t n : {8u, 30u, 320u}) {
    const auto x = white_noise(n, n);
    RealFft<double> fft(n);
    std::vector<std::complex<double>> out(fft.bins());
    fft.forward(x, out);
    const auto ref = oracle::direct_dft(x);
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(std::abs(out[k] - ref[k]) < 1e-9);
  }
}

TEST_CASE("fft inverse round trip in float and double") {
  const auto x = white_noise(320, 3);
  RealFft<double> d(320);
  std::vector<std::complex<double>> spec(d.bins());
  std::vector<double> back(320);
  d.forward(x, spec);
  d.inverse(spec, back);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));

  std::vector<float> xf(x.begin(), x.end()), backf(320);
  RealFft<float> f(320);
  std::vector<std::complex<float>> specf(f.bins());
  f.forward(xf, specf);
  f.inverse(specf, backf);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(backf[i] - xf[i]) < 1e-5f);

  RealFft<float> moved = std::move(f);
  CHECK(moved.size() == 320);
}

TEST_CASE("fft rejects wrong buffer sizes") {
  RealFft<double> fft(16);
  std::vector<double> x(15);
  std::vector<std::complex<double>> out(9);
  CHECK_THROWS_AS(fft.forward(x, out), std::invalid_argument);
}

TEST_CASE("fft_convolve matches direct convolution") {
  const auto x = white_noise(50, 1), h = white_noise(7, 2);
  const auto y = fft_convolve(x, h);
  REQUIRE(y.size() == 56);
  for (std::size_t n = 0; n < y.size(); ++n) {
    double acc = 0;
    for (std::size_t k = 0; k < h.size(); ++k)
      if (n >= k && n - k < x.size()) acc += h[k] * x[n - k];
    CHECK(y[n] == doctest::Approx(acc).epsilon(1e-9));
  }
}

TEST_CASE("next_fast_fft_size") {
  CHECK(next_fast_fft_size(1) == 1);
  CHECK(next_fast_fft_size(7) == 8);
  CHECK(next_fast_fft_size(321) == 324);
  CHECK(next_fast_fft_size(1000) == 1000);
}

TEST_CASE("stft config validation") {
  StftConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.hop = 100;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.nfft = 256;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sqrt-Hann window is COLA at half overlap") {
  const auto w = sqrt_hann_window(320);
  for (std::size_t n = 0; n < 160; ++n) CHECK(w[n] * w[n] + w[n + 160] * w[n + 160] == doctest::Approx(1.0));
}

TEST_CASE("bin frequencies") {
  StftConfig cfg;
  CHECK(bin_frequency(0, cfg) == 0.0);
  CHECK(bin_frequency(160, cfg) == 8000.0);
  CHECK(bin_frequency(20, cfg) == 1000.0);
  CHECK(cfg.num_bins() == 161);
}

TEST_CASE("frame count and interior") {
  StftConfig cfg;
  CHECK(frame_count(319, cfg) == 0);
  CHECK(frame_count(320, cfg) == 1);
  CHECK(frame_count(479, cfg) == 1);
  CHECK(frame_count(480, cfg) == 2);
  const auto r = reconstructed_interior(10, cfg);
  CHECK(r.begin == 160);
  CHECK(r.end == 9 * 160 + 160);
  CHECK(reconstructed_interior(1, cfg).size() == 0);
}

TEST_CASE("stft of silence is zero and istft of zero is zero") {
  StftConfig cfg;
  const auto spec = stft(MultichannelAudio::zeros(2, 3200, 16000), cfg);
  CHECK(spec.num_channels() == 2);
  CHECK(spec.num_bins() == 161);
  for (std::size_t n = 0; n < spec.num_frames(); ++n)
    for (auto v : spec.frame(1, n)) CHECK(v == std::complex<double>{});
  const auto back = istft(spec, cfg);
  for (double v : back.channel(1)) CHECK(v == 0.0);
}

TEST_CASE("tone at a bin frequency peaks at that bin; frame matches direct DFT") {
  StftConfig cfg;
  const std::size_t k0 = 20;
  const auto x = tone(3200, bin_frequency(k0, cfg), 16000.0);
  const auto spec = stft(mono(x), cfg);
  const auto w = sqrt_hann_window(cfg.window_len);
  for (std::size_t n = 0; n < spec.num_frames(); ++n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < spec.num_bins(); ++k)
      if (std::abs(spec.at(0, n, k)) > std::abs(spec.at(0, n, best))) best = k;
    CHECK(best == k0);
  }
  std::vector<double> frame(cfg.nfft);
  const std::size_t n = 3;
  for (std::size_t i = 0; i < cfg.window_len; ++i) frame[i] = w[i] * x[n * cfg.hop + i];
  const auto ref = oracle::direct_dft(frame);
  for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(spec.at(0, n, k) - ref[k]) < 1e-9);
}

TEST_CASE("Parseval per frame") {
  StftConfig cfg;
  const auto x = white_noise(1600, 11);
  const auto spec = stft(mono(x), cfg);
  const auto w = sqrt_hann_window(cfg.window_len);
  for (std::size_t n = 0; n < spec.num_frames(); ++n) {
    double time_energy = 0;
    for (std::size_t i = 0; i < cfg.window_len; ++i) time_energy += std::pow(w[i] * x[n * cfg.hop + i], 2);
    // Two-sided sum from the one-sided spectrum: DC and Nyquist once, the rest twice.
    double freq_energy = 0;
    for (std::size_t k = 0; k < spec.num_bins(); ++k) {
      const double m = std::norm(spec.at(0, n, k));
      freq_energy += (k == 0 || k == spec.num_bins() - 1) ? m : 2.0 * m;
    }
    CHECK(freq_energy / cfg.nfft == doctest::Approx(time_energy).epsilon(1e-6));
  }
}

TEST_CASE("single frame istft is the squared window times the frame") {
  StftConfig cfg;
  const auto x = white_noise(cfg.window_len, 5);
  const auto spec = stft(mono(x), cfg);
  REQUIRE(spec.num_frames() == 1);
  const auto y = istft(spec, cfg);
  REQUIRE(y.num_samples() == cfg.window_len);
  const auto w = sqrt_hann_window(cfg.window_len);
  for (std::size_t i = 0; i < cfg.window_len; ++i)
    CHECK(y.channel(0)[i] == doctest::Approx(w[i] * w[i] * x[i]).epsilon(1e-9));
}

TEST_CASE("COLA round trip on random signals") {
  StftConfig cfg;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t len = 10 * cfg.window_len + rng() % 1000;
    const auto x = white_noise(len, rng());
    const auto spec = stft(mono(x), cfg);
    const auto y = istft(spec, cfg);
    const auto r = reconstructed_interior(spec.num_frames(), cfg);
    CHECK(r.size() > 0);
    CHECK(interior_error_db(x, y.channel(0), r) <= -60.0);
  }
}

TEST_CASE("stft is linear") {
  StftConfig cfg;
  const auto x = white_noise(2000, 1), y = white_noise(2000, 2);
  std::vector<double> z(2000);
  const double a = 0.7, b = -2.5;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto sx = stft(mono(x), cfg), sy = stft(mono(y), cfg), sz = stft(mono(z), cfg);
  double num = 0, den = 0;
  for (std::size_t n = 0; n < sz.num_frames(); ++n)
    for (std::size_t k = 0; k < sz.num_bins(); ++k) {
      num += std::norm(sz.at(0, n, k) - (a * sx.at(0, n, k) + b * sy.at(0, n, k)));
      den += std::norm(sz.at(0, n, k));
    }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("spectrogram channel copy") {
  Spectrogram s(2, 3, 4);
  s.at(1, 2, 3) = {1.0, 2.0};
  const auto c = s.channel(1);
  CHECK(c.num_channels() == 1);
  CHECK(c.at(0, 2, 3) == std::complex<double>(1.0, 2.0));
}

TEST_CASE("multichannel audio validation") {
  CHECK_THROWS_AS(MultichannelAudio({{1.0}, {1.0, 2.0}}, 16000), std::invalid_argument);
  CHECK_THROWS_AS(MultichannelAudio({{1.0}}, 0.0), std::invalid_argument);
  CHECK(MultichannelAudio::zeros(2, 16000, 16000).duration_s() == 1.0);
}

TEST_CASE("signal generators") {
  const auto w = white_noise(48000, 9);
  CHECK(rms(w) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(white_noise(100, 9) == white_noise(100, 9));
  CHECK(white_noise(100, 9) != white_noise(100, 10));
  auto s = speech_shaped_noise(48000, 3, 16000);
  CHECK(rms(s) == doctest::Approx(1.0).epsilon(1e-9));
  set_rms_dbfs(s, -26.0);
  CHECK(20.0 * std::log10(rms(s)) == doctest::Approx(-26.0));
  std::vector<double> zero(10);
  set_rms_dbfs(zero, -20.0);
  CHECK(energy(zero) == 0.0);

  // Speech-shaped spectrum falls above 500 Hz: a 4 kHz band carries much less than a 500 Hz band.
  const auto spec = stft(mono(speech_shaped_noise(32000, 4, 16000)), StftConfig{});
  double low = 0, high = 0;
  for (std::size_t n = 0; n < spec.num_frames(); ++n) {
    low += std::norm(spec.at(0, n, 10));
    high += std::norm(spec.at(0, n, 80));
  }
  CHECK(10.0 * std::log10(low / high) > 12.0);

  // Talker signal: unit RMS, deterministic, and sparse in time (pauses of at least 50 ms).
  const auto talk = speech_like(80000, 7, 16000.0);
  CHECK(rms(talk) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(speech_like(80000, 7, 16000.0) == talk);
  CHECK(speech_like(80000, 8, 16000.0) != talk);
  std::size_t quiet_blocks = 0, blocks = 0;
  for (std::size_t i = 0; i + 160 <= talk.size(); i += 160, ++blocks)
    if (rms(std::span(talk).subspan(i, 160)) < 0.05) ++quiet_blocks;
  MESSAGE("quiet 10 ms blocks: " << quiet_blocks << " of " << blocks);
  CHECK(quiet_blocks > blocks / 10);
  CHECK(quiet_blocks < blocks / 2);

  const auto t = tone(16, 1000.0, 16000.0, std::numbers::pi / 2);
  CHECK(t[0] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("fractional delay") {
  // Odd length: no Nyquist bin, so fractional delays compose exactly.
  const auto x = white_noise(255, 4);
  const auto y = fractional_delay(x, 3.0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[(i + 3) % x.size()] == doctest::Approx(x[i]).epsilon(1e-9));
  const auto h1 = fractional_delay(fractional_delay(x, 0.4), 0.6);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(h1[(i + 1) % x.size()] == doctest::Approx(x[i]).epsilon(1e-9));
  // Tone phase shift equals 2 pi f tau.
  const auto tn = tone(1600, 1000.0, 16000.0);
  const auto td = fractional_delay(tn, 2.5);
  const auto ref = tone(1600, 1000.0, 16000.0, -2.0 * std::numbers::pi * 1000.0 * 2.5 / 16000.0);
  for (std::size_t i = 0; i < tn.size(); ++i) CHECK(td[i] == doctest::Approx(ref[i]).epsilon(1e-9));
}

TEST_CASE("derive_seed gives distinct streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

TEST_CASE("wav float32 round trip is bit identical") {
  const auto path = std::filesystem::temp_directory_path() / "steerbeam_test_f32.wav";
  std::vector<std::vector<double>> chans{white_noise(1000, 1), white_noise(1000, 2)};
  for (auto& ch : chans)
    for (double& v : ch) v = static_cast<float>(v * 0.25);
  const MultichannelAudio a(chans, 16000);
  write_wav(a, path);
  const auto b = read_wav(path);
  CHECK(b.num_channels() == 2);
  CHECK(b.sample_rate() == 16000.0);
  CHECK(b.channels() == a.channels());
  std::filesystem::remove(path);
}

TEST_CASE("wav pcm16 sine within one LSB") {
  auto s = tone(1600, 440.0, 16000.0);
  for (double& v : s) v /= std::sqrt(2.0);  // unit amplitude
  MultichannelAudio a({s}, 16000);
  const auto b = decode_wav(encode_wav(a, WavEncoding::Pcm16));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(b.channel(0)[i] - s[i]) <= 1.0 / 32768.0);
}

TEST_CASE("wav errors") {
  MultichannelAudio a({white_noise(100, 1)}, 16000);
  auto bytes = encode_wav(a);
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(decode_wav(truncated), WavError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_wav(bad), WavError);
  // Format tag 6 (A-law) is rejected with its name.
  auto alaw = bytes;
  alaw[20] = 6;
  alaw[21] = 0;
  try {
    decode_wav(alaw);
    FAIL("expected WavError");
  } catch (const WavError& e) {
    CHECK(std::string(e.what()).find("law") != std::string::npos);
  }
  CHECK_THROWS_AS(read_wav("/nonexistent/x.wav"), WavError);
}
