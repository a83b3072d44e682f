#include "steerbeam/heatmap.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "steerbeam/metrics.hpp"
#include "steerbeam/parallel.hpp"
#include "steerbeam/signals.hpp"

namespace steerbeam {
namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

void validate_config(const HeatmapConfig& c) {
  if (!(c.cell_size > 0.0)) throw std::invalid_argument("heatmap: cell_size must be positive");
  if (!(c.probe_duration_s > 0.0)) throw std::invalid_argument("heatmap: probe duration must be positive");
  if (c.min_distance < 0.0) throw std::invalid_argument("heatmap: min_distance must be non-negative");
  for (double d : c.room_dims)
    if (!(d > 0.0)) throw std::invalid_argument("heatmap: room dimensions must be positive");
  if (c.array.x <= 0.0 || c.array.y <= 0.0 || c.array.x >= c.room_dims[0] || c.array.y >= c.room_dims[1])
    throw std::invalid_argument("heatmap: array lies outside the room");
  c.geometry.validate();
  c.roi.validate();
  c.stft.validate();
}

// Cell centers on a lattice through the array center, kept wall_margin inside the room.
std::vector<HeatmapCell> lay_out_cells(const HeatmapConfig& c) {
  const double s = c.cell_size;
  const double ox = c.array.x, oy = c.array.y;
  const auto lo = [&](double center) { return static_cast<long>(std::ceil((c.wall_margin - center) / s)); };
  const auto hi = [&](double center, double dim) {
    return static_cast<long>(std::floor((dim - c.wall_margin - center) / s));
  };
  std::vector<HeatmapCell> cells;
  for (long j = lo(oy); j <= hi(oy, c.room_dims[1]); ++j) {
    for (long i = lo(ox); i <= hi(ox, c.room_dims[0]); ++i) {
      HeatmapCell cell;
      cell.x = ox + static_cast<double>(i) * s;
      cell.y = oy + static_cast<double>(j) * s;
      const double dx = cell.x - c.array.x, dy = cell.y - c.array.y;
      cell.distance_m = std::hypot(dx, dy);
      double a = std::atan2(dy, dx) * kRadToDeg - c.array.orientation_deg;
      a = std::fmod(a, 360.0);
      if (a < 0.0) a += 360.0;
      cell.angle_deg = a;
      cell.valid = cell.distance_m >= c.min_distance && cell.distance_m > 0.0;
      cell.pr_db = std::numeric_limits<double>::quiet_NaN();
      cells.push_back(cell);
    }
  }
  return cells;
}

std::array<double, 2> ray_to_wall(const HeatmapConfig& c, double local_deg) {
  const double g = c.array.orientation_deg + local_deg;
  const double ux = cos_deg(g), uy = sin_deg(g);
  double t = std::numeric_limits<double>::infinity();
  if (ux > 0.0) t = std::min(t, (c.room_dims[0] - c.array.x) / ux);
  if (ux < 0.0) t = std::min(t, -c.array.x / ux);
  if (uy > 0.0) t = std::min(t, (c.room_dims[1] - c.array.y) / uy);
  if (uy < 0.0) t = std::min(t, -c.array.y / uy);
  return {c.array.x + t * ux, c.array.y + t * uy};
}

Polyline wedge(const HeatmapConfig& c, std::string name, double a_deg, double b_deg) {
  return {std::move(name), {ray_to_wall(c, a_deg), {c.array.x, c.array.y}, ray_to_wall(c, b_deg)}};
}

nlohmann::json boundaries_json(const SteeredBoundaries& b) {
  return {{"phi_left_deg", b.phi_left_deg},
          {"phi_right_deg", b.phi_right_deg},
          {"saturated_left", b.saturated_left},
          {"saturated_right", b.saturated_right}};
}

}  // namespace

const HeatmapCell* HeatmapGrid::cell_near(double phi_deg, double distance_m) const {
  const double g = config.array.orientation_deg + phi_deg;
  const double px = config.array.x + distance_m * cos_deg(g);
  const double py = config.array.y + distance_m * sin_deg(g);
  const HeatmapCell* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& cell : cells) {
    if (!cell.valid) continue;
    const double d = std::hypot(cell.x - px, cell.y - py);
    if (d < best_d) {
      best_d = d;
      best = &cell;
    }
  }
  return best;
}

ProbeGrid render_probe_grid(const HeatmapConfig& config) {
  validate_config(config);
  ProbeGrid grid{config, lay_out_cells(config), {}};
  grid.mixtures.resize(grid.cells.size());

  const double fs = config.stft.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(config.probe_duration_s * fs));
  if (n < config.stft.window_len * 3) throw std::invalid_argument("heatmap: probe duration too short");
  const auto probe = speech_shaped_noise(n, derive_seed(config.seed, 0), fs);
  const ShoeboxRoom room{config.room_dims, config.t60, config.t60 == 0.0 ? 0 : -1, 0.0};
  const auto mics = mic_positions(config.array, config.geometry);
  for (const auto& mic : mics)
    if (!room.contains(mic)) throw std::invalid_argument("heatmap: array lies outside the room");
  sabine_absorption(room, config.geometry.speed_of_sound);

  parallel_for(grid.cells.size(), [&](std::size_t i) {
    const auto& cell = grid.cells[i];
    if (!cell.valid) return;
    MultichannelAudio mix;
    try {
      mix = simulate_shoebox(probe, room, {cell.x, cell.y, config.array.z}, mics,
                             config.geometry.speed_of_sound, fs);
    } catch (const std::exception&) {
      return;  // cell stays invalid
    }
    const double ref_rms = rms(mix.channel(0));
    if (ref_rms <= 0.0) return;
    const double gain = std::pow(10.0, config.probe_level_dbfs / 20.0) / ref_rms;
    auto chans = mix.channels();
    for (auto& ch : chans)
      for (double& v : ch) v *= gain;
    grid.mixtures[i] = MultichannelAudio(std::move(chans), fs);
  });
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (!grid.mixtures[i]) grid.cells[i].valid = false;
  return grid;
}

HeatmapGrid pr_heatmap(const ProbeGrid& probes, const MaskEstimator& estimator, double gamma_deg) {
  const auto& c = probes.config;
  const auto steering = SteeringState::make(gamma_deg, c.roi, c.geometry, c.stft);

  HeatmapGrid grid;
  grid.config = c;
  grid.gamma_deg = gamma_deg;
  grid.cells = probes.cells;
  grid.initial = steered_boundaries(c.roi, 0.0);
  grid.linear = linear_boundaries(c.roi, gamma_deg);
  grid.steered = steered_boundaries(c.roi, gamma_deg);

  parallel_for(grid.cells.size(), [&](std::size_t i) {
    auto& cell = grid.cells[i];
    if (!cell.valid) return;
    const auto& mix = *probes.mixtures[i];
    auto est = estimator.clone();
    const auto sep = separate_audio(mix, *est, steering, c.stft);
    const auto range = reconstructed_interior(sep.frames, c.stft);
    const auto y = mix.channel(0).subspan(range.begin, range.size());
    const auto t = std::span<const double>(sep.target).subspan(range.begin, range.size());
    cell.pr_db = power_reduction(y, t);
  });
  for (auto& cell : grid.cells) cell.inside_roi = grid.steered.contains(cell.folded_angle_deg());

  const auto& roi = c.roi;
  grid.overlays.push_back(wedge(c, "initial", roi.center_deg + roi.half_width_deg,
                                roi.center_deg - roi.half_width_deg));
  grid.overlays.push_back(wedge(c, "linear", grid.linear.phi_left_deg, grid.linear.phi_right_deg));
  grid.overlays.push_back(wedge(c, "steered", grid.steered.phi_left_deg, grid.steered.phi_right_deg));
  grid.overlays.push_back(wedge(c, "steered_mirrored", grid.steered.mirrored_left_deg(),
                                grid.steered.mirrored_right_deg()));
  return grid;
}

HeatmapGrid pr_heatmap(const HeatmapConfig& config, const MaskEstimator& estimator, double gamma_deg) {
  return pr_heatmap(render_probe_grid(config), estimator, gamma_deg);
}

double delta_pr(const HeatmapGrid& grid, const SteeredBoundaries& boundaries, bool include_mirrored) {
  double in_sum = 0.0, out_sum = 0.0;
  std::size_t in_n = 0, out_n = 0;
  for (const auto& cell : grid.cells) {
    if (!cell.valid) continue;
    if (cell.mirrored() && !include_mirrored) continue;
    if (boundaries.contains(cell.folded_angle_deg())) {
      in_sum += cell.pr_db;
      ++in_n;
    } else {
      out_sum += cell.pr_db;
      ++out_n;
    }
  }
  if (in_n == 0 || out_n == 0)
    throw std::runtime_error("delta_pr: need valid cells both inside and outside the boundaries");
  return out_sum / static_cast<double>(out_n) - in_sum / static_cast<double>(in_n);
}

std::vector<double> default_sweep_angles() {
  std::vector<double> g;
  for (int i = 0; i <= 45; i += 5) g.push_back(i);
  return g;
}

std::vector<SweepPoint> steering_sweep(const ProbeGrid& probes, const MaskEstimator& estimator,
                                       std::span<const double> gammas) {
  std::vector<SweepPoint> out;
  for (double gamma : gammas) {
    const auto grid = pr_heatmap(probes, estimator, gamma);
    out.push_back({gamma, delta_pr(grid, grid.steered), grid.steered});
  }
  return out;
}

void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out) {
  out << "x_m,y_m,angle_deg,pr_db,inside_roi,valid\n";
  out << std::setprecision(10);
  for (const auto& c : grid.cells) {
    out << c.x << ',' << c.y << ',' << c.angle_deg << ',';
    if (c.valid) out << c.pr_db;
    out << ',' << (c.inside_roi ? 1 : 0) << ',' << (c.valid ? 1 : 0) << '\n';
  }
}

nlohmann::json heatmap_sidecar(const HeatmapGrid& grid) {
  const auto& c = grid.config;
  nlohmann::json overlays = nlohmann::json::array();
  for (const auto& p : grid.overlays) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& pt : p.points) pts.push_back({pt[0], pt[1]});
    overlays.push_back({{"name", p.name}, {"points", pts}});
  }
  return {{"gamma_deg", grid.gamma_deg},
          {"roi", {{"theta1_deg", c.roi.center_deg}, {"beta_deg", c.roi.half_width_deg}}},
          {"room", {{"dims", c.room_dims}, {"t60", c.t60}}},
          {"array", {{"position", {c.array.x, c.array.y, c.array.z}},
                     {"orientation_deg", c.array.orientation_deg},
                     {"mic_spacing", c.geometry.mic_spacing}}},
          {"cell_size_m", c.cell_size},
          {"probe_level_dbfs", c.probe_level_dbfs},
          {"seed", c.seed},
          {"boundaries", {{"initial", boundaries_json(grid.initial)},
                          {"linear", boundaries_json(grid.linear)},
                          {"steered", boundaries_json(grid.steered)}}},
          {"overlays", overlays}};
}

}  // namespace steerbeam
