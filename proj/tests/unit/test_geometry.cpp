#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "steerbeam/geometry.hpp"
#include "steerbeam/scene.hpp"
#include "steerbeam/signals.hpp"

using namespace steerbeam;

TEST_CASE("array and roi validation") {
  CHECK_NOTHROW(ArrayGeometry{}.validate());
  CHECK_THROWS_AS((ArrayGeometry{0.0, 343.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ArrayGeometry{0.05, -1.0}.validate()), std::invalid_argument);
  CHECK(ArrayGeometry{}.aliasing_frequency() == doctest::Approx(3430.0));
  CHECK_NOTHROW(Roi{}.validate());
  CHECK_THROWS_AS((Roi{90.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Roi{20.0, 25.0}.validate()), std::invalid_argument);
  CHECK(Roi::from_span(40.0).half_width_deg == 20.0);
  CHECK(Roi{90.0, 10.0}.span_deg() == 20.0);
  CHECK(Roi{}.contains(80.0));
  CHECK_FALSE(Roi{}.contains(79.9));
}

TEST_CASE("exact trigonometry at quadrant angles") {
  CHECK(cos_deg(90.0) == 0.0);
  CHECK(cos_deg(-90.0) == 0.0);
  CHECK(cos_deg(180.0) == -1.0);
  CHECK(cos_deg(360.0) == 1.0);
  CHECK(sin_deg(90.0) == 1.0);
  CHECK(cos_deg(60.0) == doctest::Approx(0.5));
}

TEST_CASE("ipd of angle") {
  const ArrayGeometry g;
  for (double f : {0.0, 500.0, 3000.0, 7000.0}) CHECK(ipd_of_angle(90.0, f, g) == 0.0);
  CHECK(ipd_of_angle(60.0, 1000.0, g) == doctest::Approx(0.4580).epsilon(1e-4));
  CHECK(ipd_of_angle(0.0, 1000.0, g) == doctest::Approx(0.9159).epsilon(1e-4));
  CHECK(ipd_of_angle(0.0, 1000.0, g) == doctest::Approx(2.0 * ipd_of_angle(60.0, 1000.0, g)));
  CHECK(ipd_of_angle(120.0, 1000.0, g) == doctest::Approx(-ipd_of_angle(60.0, 1000.0, g)));
}

TEST_CASE("steering vector") {
  const ArrayGeometry g;
  const StftConfig cfg;
  const Roi roi;
  const auto id = steering_vector(0.0, roi, g, cfg);
  for (auto v : id) CHECK(v == std::complex<double>(1.0, 0.0));

  const auto a = steering_vector(25.0, roi, g, cfg);
  CHECK(a.size() == cfg.num_bins());
  CHECK(a[0] == std::complex<double>(1.0, 0.0));
  for (auto v : a) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::arg(a[20]) == doctest::Approx(-0.3871).epsilon(1e-4));
  CHECK(steering_phase(25.0, 1000.0, roi, g) ==
        doctest::Approx(-2.0 * std::numbers::pi * 1000.0 * 0.05 * std::cos(65.0 * std::numbers::pi / 180) / 343.0));

  for (double gamma : {90.0, 95.0, -90.0, 180.0})
    CHECK_THROWS_AS(steering_vector(gamma, roi, g, cfg), std::invalid_argument);
  CHECK(steering_is_valid(89.9, roi));
  CHECK_FALSE(steering_is_valid(90.0, roi));
  CHECK_FALSE(steering_is_valid(std::nan(""), roi));
}

TEST_CASE("phase shift restores the ROI center phase at every frequency and spacing") {
  const Roi roi;
  for (double d : {0.02, 0.05, 0.1}) {
    const ArrayGeometry g{d, 343.0};
    for (double gamma : {-40.0, -10.0, 5.0, 25.0, 45.0, 70.0})
      for (double f : {100.0, 1000.0, 2500.0, 6000.0}) {
        const double theta2 = roi.center_deg - gamma;
        CHECK(ipd_of_angle(theta2, f, g) + steering_phase(gamma, f, roi, g) ==
              doctest::Approx(ipd_of_angle(roi.center_deg, f, g)).epsilon(1e-12).scale(1.0));
      }
  }
}

TEST_CASE("apply steering") {
  std::vector<std::complex<double>> frame{{1, 2}, {3, 4}};
  const std::vector<std::complex<double>> ones(2, 1.0);
  apply_steering(frame, ones);
  CHECK(frame[1] == std::complex<double>(3, 4));
  const std::vector<std::complex<double>> j{{0, 1}, {0, 1}};
  apply_steering(frame, j);
  CHECK(frame[0] == std::complex<double>(-2, 1));
  CHECK_THROWS_AS(apply_steering(frame, std::vector<std::complex<double>>(3)), std::invalid_argument);

  Spectrogram s(2, 2, 3);
  s.at(0, 1, 2) = 5.0;
  s.at(1, 1, 2) = 7.0;
  StftConfig tiny;
  const SteeringState st{0, 90, {{0, 1}, {0, 1}, {0, 1}}};
  const auto out = apply_steering(s, st);
  CHECK(out.at(0, 1, 2) == std::complex<double>(5.0, 0.0));
  CHECK(out.at(1, 1, 2) == std::complex<double>(0.0, 7.0));
  CHECK_THROWS_AS(apply_steering(Spectrogram(1, 2, 3), st), std::invalid_argument);
  const auto ident = SteeringState::identity(tiny);
  CHECK(ident.vector.size() == tiny.num_bins());
  CHECK(ident.theta2_deg == 90.0);
}

TEST_CASE("steered boundaries worked values") {
  auto b = steered_boundaries({90.0, 15.0}, 30.0);
  CHECK(b.phi_left_deg == doctest::Approx(76.04).epsilon(1e-4));
  CHECK(b.phi_right_deg == doctest::Approx(std::acos(0.758819) * 180 / std::numbers::pi).epsilon(1e-5));
  CHECK(b.phi_right_deg == doctest::Approx(40.64).epsilon(2e-4));
  CHECK_FALSE(b.saturated_left);
  CHECK_FALSE(b.saturated_right);

  b = steered_boundaries({90.0, 10.0}, 0.0);
  CHECK(b.phi_left_deg == doctest::Approx(100.0));
  CHECK(b.phi_right_deg == doctest::Approx(80.0));

  b = steered_boundaries({90.0, 20.0}, 60.0);
  CHECK(b.phi_right_deg == 0.0);
  CHECK(b.saturated_right);
  CHECK_FALSE(b.saturated_left);
  CHECK(b.phi_left_deg == doctest::Approx(58.40).epsilon(1e-4));

  b = steered_boundaries({90.0, 10.0}, 25.0);
  CHECK(b.phi_left_deg == doctest::Approx(75.58).epsilon(1e-4));
  CHECK(b.phi_right_deg == doctest::Approx(53.40).epsilon(1e-4));

  // Negative gamma saturates the left side towards 180 degrees.
  b = steered_boundaries({90.0, 20.0}, -60.0);
  CHECK(b.phi_left_deg == 180.0);
  CHECK(b.saturated_left);
  CHECK(b.mirrored_left_deg() == 180.0);
}

TEST_CASE("steered boundaries match the arccos oracle for general ROI centers") {
  for (double theta1 : {60.0, 90.0, 110.0})
    for (double beta : {5.0, 10.0, 20.0})
      for (double gamma = -50.0; gamma <= 50.0; gamma += 2.5) {
        const Roi roi{theta1, beta};
        if (!steering_is_valid(gamma, roi)) continue;
        const auto b = steered_boundaries(roi, gamma);
        const auto o = oracle::arccos_boundaries(theta1, beta, gamma);
        CHECK(b.phi_left_deg == doctest::Approx(o.left).epsilon(1e-9).scale(1.0));
        CHECK(b.phi_right_deg == doctest::Approx(o.right).epsilon(1e-9).scale(1.0));
        CHECK(b.saturated_left == o.sat_left);
        CHECK(b.saturated_right == o.sat_right);
      }
}

TEST_CASE("linear boundaries") {
  auto b = linear_boundaries({90.0, 10.0}, 25.0);
  CHECK(b.phi_left_deg == 75.0);
  CHECK(b.phi_right_deg == 55.0);
  b = linear_boundaries({90.0, 20.0}, 80.0);
  CHECK(b.phi_right_deg == 0.0);
  CHECK(b.saturated_right);
  const auto e = steered_boundaries({90.0, 10.0}, 0.0);
  const auto l = linear_boundaries({90.0, 10.0}, 0.0);
  CHECK(e.phi_left_deg == doctest::Approx(l.phi_left_deg));
  CHECK(e.phi_right_deg == doctest::Approx(l.phi_right_deg));
}

TEST_CASE("membership sweep flips at the boundary formula") {
  const ArrayGeometry g;
  for (double beta : {10.0, 20.0})
    for (double gamma : {0.0, 10.0, 25.0, 40.0}) {
      const Roi roi{90.0, beta};
      const auto b = steered_boundaries(roi, gamma);
      const auto e = oracle::sweep_extent([&](double phi) { return sweep_membership_oracle(phi, roi, gamma, g); }, 0.05);
      REQUIRE(e.any);
      CHECK(std::abs(e.left - b.phi_left_deg) <= 0.1);
      CHECK(std::abs(e.right - b.phi_right_deg) <= 0.1);
      CHECK(e.sat_left == b.saturated_left);
      CHECK(e.sat_right == b.saturated_right);
    }
}

TEST_CASE("membership is frequency independent below aliasing") {
  const ArrayGeometry g;
  const Roi roi{90.0, 10.0};
  for (double gamma : {0.0, 25.0, 45.0})
    for (double phi = 0.0; phi <= 180.0; phi += 0.5) {
      const bool ref = sweep_membership_oracle(phi, roi, gamma, g, 1000.0);
      for (double f : {200.0, 500.0, 2000.0, 3000.0, 3400.0})
        CHECK(sweep_membership_oracle(phi, roi, gamma, g, f) == ref);
    }
}

TEST_CASE("steered center is always inside") {
  const ArrayGeometry g;
  for (double beta : {1.0, 10.0, 30.0})
    for (double gamma = -60.0; gamma <= 60.0; gamma += 7.5) {
      const Roi roi{90.0, beta};
      CHECK(sweep_membership_oracle(90.0 - gamma, roi, gamma, g));
      CHECK(steered_boundaries(roi, gamma).contains(90.0 - gamma));
    }
}

TEST_CASE("steering widens the ROI") {
  for (double beta : {5.0, 10.0, 20.0})
    for (double gamma = -45.0; gamma <= 45.0; gamma += 5.0) {
      const auto b = steered_boundaries({90.0, beta}, gamma);
      if (b.saturated_left || b.saturated_right) continue;
      if (gamma == 0.0)
        CHECK(b.width_deg() == doctest::Approx(2.0 * beta));
      else
        CHECK(b.width_deg() > 2.0 * beta + 1e-9);
    }
}

TEST_CASE("equivalent unsteered angle maps steered boundaries back to the ROI") {
  const Roi roi{90.0, 10.0};
  for (double gamma : {5.0, 25.0, 40.0}) {
    const auto b = steered_boundaries(roi, gamma);
    CHECK(equivalent_unsteered_angle(b.phi_left_deg, roi, gamma) == doctest::Approx(100.0));
    CHECK(equivalent_unsteered_angle(b.phi_right_deg, roi, gamma) == doctest::Approx(80.0));
    CHECK(equivalent_unsteered_angle(90.0 - gamma, roi, gamma) == doctest::Approx(90.0));
  }
  CHECK(std::isnan(equivalent_unsteered_angle(0.0, roi, -60.0)));
}

TEST_CASE("steered plane wave has zero phase difference below aliasing") {
  const ArrayGeometry g;
  const StftConfig cfg;
  const Roi roi;
  const auto x = white_noise(160000, 21);
  for (auto [theta2, gamma] : {std::pair{65.0, 25.0}, std::pair{45.0, 45.0}, std::pair{120.0, -30.0}}) {
    const auto audio = simulate_far_field(x, theta2, g, 16000.0);
    auto spec = stft(audio, cfg);
    spec = apply_steering(spec, SteeringState::make(gamma, roi, g, cfg));
    for (std::size_t k = 1; k < cfg.num_bins(); ++k) {
      if (bin_frequency(k, cfg) >= 3000.0) break;
      std::complex<double> cross = 0.0;
      for (std::size_t n = 0; n < spec.num_frames(); ++n) cross += spec.at(1, n, k) * std::conj(spec.at(0, n, k));
      CHECK(std::abs(std::arg(cross)) <= 1e-3);
    }
  }
}
