#include "steerbeam/room.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace steerbeam {

bool ShoeboxRoom::contains(const Point3& p) const {
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] > 0.0 && p[i] < dims[i])) return false;
  }
  return true;
}

double sabine_absorption(const ShoeboxRoom& room, double speed_of_sound) {
  const auto [lx, ly, lz] = room.dims;
  if (!(lx > 0 && ly > 0 && lz > 0)) throw RoomError("room dimensions must be positive");
  if (room.t60 == 0.0) return 1.0;
  if (room.t60 < 0.0) throw RoomError("T60 must be non-negative");
  const double volume = lx * ly * lz;
  const double surface = 2.0 * (lx * ly + lx * lz + ly * lz);
  const double alpha = 24.0 * std::numbers::ln10 * volume / (speed_of_sound * surface * room.t60);
  if (alpha > 1.0)
    throw RoomError("T60=" + std::to_string(room.t60) +
                    " s is unachievable for this room (Sabine absorption " + std::to_string(alpha) +
                    " > 1)");
  return alpha;
}

namespace {

// Adds gain * windowed-sinc(n - t) around fractional position t.
void add_image(std::vector<double>& h, double t, double gain) {
  constexpr int half = kImageTapLength / 2;
  const double base = std::floor(t);
  const double frac = t - base;
  const auto n0 = static_cast<long>(base) - half + 1;
  const double sin_frac = std::sin(std::numbers::pi * frac);

  // Hann window 0.5 (1 + cos(2 pi u / L)) with u = m - frac, rotated per tap.
  const double step = 2.0 * std::numbers::pi / kImageTapLength;
  std::complex<double> rot = std::polar(1.0, step * (static_cast<double>(1 - half) - frac));
  const std::complex<double> inc = std::polar(1.0, step);

  for (int i = 0; i < kImageTapLength; ++i, rot *= inc) {
    const long n = n0 + i;
    if (n < 0 || n >= static_cast<long>(h.size())) continue;
    const int m = i + 1 - half;  // n - floor(t)
    const double u = m - frac;
    double sinc;
    if (std::abs(u) < 1e-12) {
      sinc = 1.0;
    } else {
      const double sign = (m % 2 == 0) ? -1.0 : 1.0;  // -(-1)^m
      sinc = sign * sin_frac / (std::numbers::pi * u);
    }
    const double window = 0.5 * (1.0 + rot.real());
    h[static_cast<std::size_t>(n)] += gain * window * sinc;
  }
}

// Calls fn(distance, reflections) for every image closer than max_dist.
template <typename Fn>
void for_each_image(const ShoeboxRoom& room, const Point3& source, const Point3& mic,
                    double max_dist, Fn&& fn) {
  int n[3];
  for (int i = 0; i < 3; ++i) n[i] = static_cast<int>(std::ceil(max_dist / (2.0 * room.dims[i])));
  if (room.max_order >= 0) {
    for (int& v : n) v = std::min(v, room.max_order);
  }
  for (int mx = -n[0]; mx <= n[0]; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * source[0] + 2.0 * mx * room.dims[0] - mic[0];
      const int rx = std::abs(mx - qx) + std::abs(mx);
      for (int my = -n[1]; my <= n[1]; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * source[1] + 2.0 * my * room.dims[1] - mic[1];
          const int ry = std::abs(my - qy) + std::abs(my);
          for (int mz = -n[2]; mz <= n[2]; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const int order = rx + ry + std::abs(mz - qz) + std::abs(mz);
              if (room.max_order >= 0 && order > room.max_order) continue;
              const double dz = (1 - 2 * qz) * source[2] + 2.0 * mz * room.dims[2] - mic[2];
              const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
              if (dist < max_dist) fn(dist, order);
            }
          }
        }
      }
    }
  }
}

// Second-order DC-blocking high-pass of Allen and Berkley, in place.
void high_pass(std::vector<double>& h, double cutoff_hz, double sample_rate) {
  const double w = 2.0 * std::numbers::pi * cutoff_hz / sample_rate;
  const double r1 = std::exp(-w);
  const double b1 = 2.0 * r1 * std::cos(w);
  const double b2 = -r1 * r1;
  const double a1 = -(1.0 + r1);
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& x : h) {
    y2 = y1;
    y1 = y0;
    y0 = b1 * y1 + b2 * y2 + x;
    x = y0 + a1 * y1 + r1 * y2;
  }
}

}  // namespace

std::vector<std::vector<double>> compute_rirs(const ShoeboxRoom& room, const Point3& source,
                                              std::span<const Point3> receivers,
                                              double speed_of_sound, double sample_rate) {
  const double beta = std::sqrt(1.0 - sabine_absorption(room, speed_of_sound));
  if (!room.contains(source)) throw RoomError("source lies outside the room");
  double max_direct = 0.0;
  for (const auto& r : receivers) {
    if (!room.contains(r)) throw RoomError("receiver lies outside the room");
    const double dx = r[0] - source[0], dy = r[1] - source[1], dz = r[2] - source[2];
    max_direct = std::max(max_direct, std::sqrt(dx * dx + dy * dy + dz * dz));
  }

  const double length_s = room.rir_length_s > 0.0
                              ? room.rir_length_s
                              : room.t60 + max_direct / speed_of_sound;
  const auto taps = static_cast<std::size_t>(std::ceil(length_s * sample_rate)) + kImageTapLength;
  const double max_dist = static_cast<double>(taps) * speed_of_sound / sample_rate;
  const double samples_per_meter = sample_rate / speed_of_sound;

  std::vector<double> beta_pow(1, 1.0);
  std::vector<std::vector<double>> rirs(receivers.size(), std::vector<double>(taps, 0.0));
  for (std::size_t r = 0; r < receivers.size(); ++r) {
    auto& h = rirs[r];
    for_each_image(room, source, receivers[r], max_dist, [&](double dist, int order) {
      if (order > 0 && beta == 0.0) return;
      while (beta_pow.size() <= static_cast<std::size_t>(order)) beta_pow.push_back(beta_pow.back() * beta);
      add_image(h, dist * samples_per_meter, beta_pow[order] / (4.0 * std::numbers::pi * dist));
    });
    if (beta > 0.0 && room.max_order != 0 && room.high_pass_hz > 0.0) high_pass(h, room.high_pass_hz, sample_rate);
  }
  return rirs;
}

}  // namespace steerbeam
