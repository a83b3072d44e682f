#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "steerbeam/geometry.hpp"
#include "steerbeam/room.hpp"
#include "steerbeam/scene.hpp"
#include "steerbeam/separation.hpp"

namespace steerbeam {

// Spatial power-reduction map: a probe source is placed at every cell center
// of a grid aligned on the array, simulated, separated and scored.
struct HeatmapConfig {
  Point3 room_dims{6.0, 6.0, 3.0};
  double t60 = 0.5;            // 0: direct path only (anechoic)
  ArrayPose array{3.0, 3.0, 1.5, 0.0};
  double cell_size = 0.25;
  double min_distance = 0.3;   // cells closer to the array are invalid
  double wall_margin = 0.1;
  double probe_duration_s = 2.0;
  double probe_level_dbfs = -28.0;  // reference-channel RMS of every cell mixture
  std::uint64_t seed = 1;
  ArrayGeometry geometry;
  Roi roi;
  StftConfig stft;
};

struct HeatmapCell {
  double x = 0.0;
  double y = 0.0;
  double angle_deg = 0.0;   // array-local, [0, 360)
  double distance_m = 0.0;
  double pr_db = 0.0;       // NaN when invalid
  bool valid = false;
  bool inside_roi = false;  // against the steered (arccos) boundaries, mirror folded in

  // Angle reflected into [0, 180] (front-back ambiguity).
  double folded_angle_deg() const { return angle_deg <= 180.0 ? angle_deg : 360.0 - angle_deg; }
  bool mirrored() const { return angle_deg > 180.0; }
};

struct Polyline {
  std::string name;
  std::vector<std::array<double, 2>> points;
};

struct HeatmapGrid {
  HeatmapConfig config;
  double gamma_deg = 0.0;
  std::vector<HeatmapCell> cells;
  SteeredBoundaries initial;
  SteeredBoundaries linear;
  SteeredBoundaries steered;
  std::vector<Polyline> overlays;

  // Valid cell whose center is closest to array-local direction phi at the
  // given distance.
  const HeatmapCell* cell_near(double phi_deg, double distance_m) const;
};

// Cell geometry plus the simulated two-channel mixture for every valid cell.
// Independent of steering, so one probe grid serves a whole sweep.
struct ProbeGrid {
  HeatmapConfig config;
  std::vector<HeatmapCell> cells;
  std::vector<std::optional<MultichannelAudio>> mixtures;
};

ProbeGrid render_probe_grid(const HeatmapConfig& config);
HeatmapGrid pr_heatmap(const ProbeGrid& probes, const MaskEstimator& estimator, double gamma_deg);
HeatmapGrid pr_heatmap(const HeatmapConfig& config, const MaskEstimator& estimator, double gamma_deg);

// Mean PR outside [phi_r, phi_l] minus mean PR inside, over valid cells.
// Mirrored cells count as inside their folded angle unless excluded.
double delta_pr(const HeatmapGrid& grid, const SteeredBoundaries& boundaries,
                bool include_mirrored = true);

struct SweepPoint {
  double gamma_deg = 0.0;
  double delta_pr_db = 0.0;
  SteeredBoundaries boundaries;
};
std::vector<double> default_sweep_angles();  // 0, 5, ..., 45
std::vector<SweepPoint> steering_sweep(const ProbeGrid& probes, const MaskEstimator& estimator,
                                       std::span<const double> gammas);

// CSV columns: x_m,y_m,angle_deg,pr_db,inside_roi,valid
void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out);
// Overlay polylines and run metadata.
nlohmann::json heatmap_sidecar(const HeatmapGrid& grid);

}  // namespace steerbeam
