#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "steerbeam/heatmap.hpp"
#include "steerbeam/metrics.hpp"
#include "steerbeam/parallel.hpp"
#include "steerbeam/rtf.hpp"
#include "steerbeam/signals.hpp"
#include "steerbeam/streaming.hpp"

using namespace steerbeam;

namespace {

std::vector<double> gaussian(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

std::vector<double> scaled(std::span<const double> x, double g) {
  std::vector<double> y(x.begin(), x.end());
  for (auto& v : y) v *= g;
  return y;
}

// Small anechoic grid: 4 x 4 m room, 0.75 m cells, half-second probe.
HeatmapConfig small_config() {
  HeatmapConfig c;
  c.room_dims = {4.0, 4.0, 2.5};
  c.array = {2.0, 2.0, 1.2, 0.0};
  c.t60 = 0.0;
  c.cell_size = 0.75;
  c.probe_duration_s = 0.5;
  c.roi = {90.0, 10.0};
  return c;
}

HeatmapCell fixture_cell(double angle, double pr, bool valid = true) {
  HeatmapCell c;
  c.angle_deg = angle;
  c.pr_db = pr;
  c.valid = valid;
  c.distance_m = 1.0;
  return c;
}

}  // namespace

TEST_CASE("power reduction follows the gain scaling law") {
  const auto y = gaussian(4000, 1);
  for (double g : {1.0, 0.5, 0.1, 2.0, 1e-3, 37.0}) {
    const double expected = -20.0 * std::log10(g);
    CHECK(std::abs(power_reduction(y, scaled(y, g)) - expected) <= 1e-9);
  }
  // Only energies matter: a time-reversed copy has the same PR as the original.
  auto rev = y;
  std::reverse(rev.begin(), rev.end());
  CHECK(power_reduction(y, rev) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(power_reduction(y, std::vector<double>(y.size(), 0.0)) == kMetricCapDb);
  CHECK_THROWS_AS(power_reduction(y, std::vector<double>(3)), std::invalid_argument);
  CHECK_THROWS_AS(power_reduction(std::vector<double>(4), std::vector<double>(4, 1.0)), std::invalid_argument);
}

TEST_CASE("SI-SDR of reference plus orthogonal noise at -10 dB is 10 dB") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto ref = gaussian(16000, 100 + seed);
    const auto noise = gaussian(16000, 200 + seed);
    const auto w = oracle::orthogonal_component(ref, noise, 0.1);
    std::vector<double> est(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) est[i] = ref[i] + w[i];
    CHECK(std::abs(si_sdr(est, ref) - 10.0) <= 0.01);
  }
}

TEST_CASE("SI-SDR is invariant to scaling of the estimate and the reference") {
  const auto ref = gaussian(8000, 3);
  auto est = gaussian(8000, 4);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] = 0.3 * est[i] + ref[i];
  const double base = si_sdr(est, ref);
  for (double g : {1e-3, 0.25, 7.0, 1e3, -2.0}) {
    CHECK(std::abs(si_sdr(scaled(est, g), ref) - base) <= 1e-6);
    CHECK(std::abs(si_sdr(est, scaled(ref, std::abs(g))) - base) <= 1e-6);
  }
  CHECK(si_sdr(ref, ref) == kMetricCapDb);
  CHECK(si_sdr(std::vector<double>(ref.size(), 0.0), ref) == -kMetricCapDb);
  CHECK_THROWS_AS(si_sdr(est, std::vector<double>(est.size(), 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(si_sdr(est, std::vector<double>(5)), std::invalid_argument);
}

TEST_CASE("summary statistics and metrics report") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = summarize(v);
  CHECK(s.count == 4);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(summarize(std::vector<double>{}).count == 0);

  MetricsReport r;
  r.pr_db = 12.5;
  r.rtf = s;
  const auto j = r.to_json();
  CHECK(j["pr_db"] == 12.5);
  CHECK(j["si_sdr_db"].is_null());
  CHECK(j["dnsmos"]["ovrl"].is_null());
  CHECK(j["rtf"]["count"] == 4);
}

TEST_CASE("heatmap grid layout is centred on the array") {
  HeatmapConfig c;  // 6 x 6 m room, array in the middle
  CHECK(c.cell_size == 0.25);
  c.cell_size = 0.5;
  c.probe_duration_s = 0.2;
  c.t60 = 0.0;
  const auto probes = render_probe_grid(c);
  CHECK(probes.cells.size() == 121);
  std::size_t valid = 0;
  for (const auto& cell : probes.cells) {
    valid += cell.valid;
    CHECK(std::abs(std::remainder(cell.x - c.array.x, c.cell_size)) < 1e-12);
    CHECK(std::abs(std::remainder(cell.y - c.array.y, c.cell_size)) < 1e-12);
    CHECK(cell.x >= c.wall_margin);
    CHECK(cell.x <= c.room_dims[0] - c.wall_margin);
    if (cell.distance_m < c.min_distance) CHECK_FALSE(cell.valid);
  }
  CHECK(valid == 120);

  c.array.orientation_deg = 30.0;
  const auto rotated = render_probe_grid(c);
  const auto* on_axis = &rotated.cells.front();
  for (const auto& cell : rotated.cells)
    if (std::abs(cell.x - 4.0) < 1e-9 && std::abs(cell.y - 3.0) < 1e-9) on_axis = &cell;
  CHECK(on_axis->angle_deg == doctest::Approx(330.0));

  HeatmapConfig bad;
  bad.cell_size = 0.0;
  CHECK_THROWS_AS(render_probe_grid(bad), std::invalid_argument);
  bad = HeatmapConfig{};
  bad.array.x = 7.0;
  CHECK_THROWS_AS(render_probe_grid(bad), std::invalid_argument);
  bad = HeatmapConfig{};
  bad.probe_duration_s = 0.01;
  CHECK_THROWS_AS(render_probe_grid(bad), std::invalid_argument);
}

TEST_CASE("all-pass estimator gives a zero heatmap") {
  const auto probes = render_probe_grid(small_config());
  ConstantMaskEstimator pass(1.0f);
  for (double gamma : {0.0, 25.0}) {
    const auto grid = pr_heatmap(probes, pass, gamma);
    for (const auto& cell : grid.cells)
      if (cell.valid) CHECK(std::abs(cell.pr_db) < 1e-4);
  }
}

TEST_CASE("anechoic heatmap: ROI cells pass, off-axis cells are suppressed") {
  const auto c = small_config();
  PhaseMaskEstimator est(c.roi, c.geometry, c.stft);
  const auto grid = pr_heatmap(c, est, 0.0);
  CHECK(grid.steered.phi_left_deg == doctest::Approx(100.0));
  CHECK(grid.steered.phi_right_deg == doctest::Approx(80.0));
  std::size_t inside = 0, far = 0;
  for (const auto& cell : grid.cells) {
    if (!cell.valid) continue;
    CHECK(cell.inside_roi == grid.steered.contains(cell.folded_angle_deg()));
    const double off = std::abs(cell.folded_angle_deg() - 90.0);
    if (cell.inside_roi) {
      ++inside;
      CHECK(cell.pr_db < 1.0);
    } else if (off > 40.0) {
      ++far;
      CHECK(cell.pr_db > 6.0);
    }
  }
  CHECK(inside >= 2);
  CHECK(far >= 4);
  CHECK(delta_pr(grid, grid.steered) > 5.0);

  // Mirrored cells are folded: 90 deg in front and behind both count as inside.
  const auto* front = grid.cell_near(90.0, 1.5);
  const auto* back = grid.cell_near(270.0, 1.5);
  REQUIRE(front != nullptr);
  REQUIRE(back != nullptr);
  CHECK(front->inside_roi);
  CHECK(back->inside_roi);
  CHECK(back->mirrored());
}

TEST_CASE("heatmap is deterministic and steering moves the pass region") {
  const auto c = small_config();
  PhaseMaskEstimator est(c.roi, c.geometry, c.stft);
  const auto probes = render_probe_grid(c);
  const auto a = pr_heatmap(probes, est, 25.0);
  const auto b = pr_heatmap(c, est, 25.0);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    if (a.cells[i].valid) CHECK(a.cells[i].pr_db == b.cells[i].pr_db);

  CHECK(a.steered.phi_left_deg == doctest::Approx(75.58).epsilon(1e-4));
  CHECK(a.steered.phi_right_deg == doctest::Approx(53.40).epsilon(1e-4));
  const auto* steered_center = a.cell_near(65.0, 1.5);
  REQUIRE(steered_center != nullptr);
  CHECK(steered_center->pr_db < 1.0);

  std::ostringstream csv;
  write_heatmap_csv(a, csv);
  const auto text = csv.str();
  CHECK(text.rfind("x_m,y_m,angle_deg,pr_db,inside_roi,valid\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == a.cells.size() + 1);
  const auto side = heatmap_sidecar(a);
  CHECK(side["gamma_deg"] == 25.0);
  CHECK(side["overlays"].size() == 4);
  CHECK(side["boundaries"]["steered"]["phi_left_deg"].get<double>() == doctest::Approx(75.58).epsilon(1e-4));
}

TEST_CASE("delta PR on hand-built grids") {
  HeatmapGrid g;
  const auto b = steered_boundaries(Roi{90.0, 10.0}, 0.0);
  g.cells = {fixture_cell(90.0, 5.0), fixture_cell(30.0, 5.0), fixture_cell(150.0, 5.0)};
  CHECK(delta_pr(g, b) == doctest::Approx(0.0));

  g.cells = {fixture_cell(85.0, 2.0), fixture_cell(95.0, 2.0), fixture_cell(20.0, 20.0),
             fixture_cell(160.0, 20.0), fixture_cell(45.0, 999.0, false)};
  CHECK(delta_pr(g, b) == doctest::Approx(18.0));

  // A mirrored cell folds onto 90 deg; excluding it changes the inside mean.
  g.cells.push_back(fixture_cell(270.0, 8.0));
  CHECK(delta_pr(g, b) == doctest::Approx(20.0 - 4.0));
  CHECK(delta_pr(g, b, false) == doctest::Approx(18.0));

  g.cells = {fixture_cell(30.0, 5.0), fixture_cell(150.0, 5.0)};
  CHECK_THROWS_AS(delta_pr(g, b), std::runtime_error);
  g.cells = {fixture_cell(90.0, 5.0)};
  CHECK_THROWS_AS(delta_pr(g, b), std::runtime_error);

  const auto angles = default_sweep_angles();
  CHECK(angles.size() == 10);
  CHECK(angles.front() == 0.0);
  CHECK(angles.back() == 45.0);
}

TEST_CASE("steering sweep reports steered boundaries per angle") {
  const auto c = small_config();
  PhaseMaskEstimator est(c.roi, c.geometry, c.stft);
  const auto probes = render_probe_grid(c);
  const std::vector<double> gammas{0.0, 20.0};
  const auto sweep = steering_sweep(probes, est, gammas);
  REQUIRE(sweep.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto grid = pr_heatmap(probes, est, gammas[i]);
    CHECK(sweep[i].gamma_deg == gammas[i]);
    CHECK(sweep[i].delta_pr_db == delta_pr(grid, grid.steered));
    CHECK(sweep[i].boundaries.phi_left_deg == grid.steered.phi_left_deg);
  }
}

TEST_CASE("real-time factor of a sleeping processor") {
  RtfOptions o;
  o.clips = 4;
  o.clip_duration_s = 0.2;
  const auto sleeper = [](std::span<const float>, std::span<const float>) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  };
  const auto r = measure_rtf(sleeper, o);
  CHECK(r.per_clip.size() == 4);
  CHECK(r.rtf.count == 4);
  CHECK(r.rtf.mean >= 0.1);
  CHECK(r.rtf.mean < 0.2);

  std::size_t calls = 0;
  std::size_t length = 0;
  const auto counter = [&](std::span<const float> a, std::span<const float> b) {
    ++calls;
    length = a.size();
    CHECK(a.size() == b.size());
  };
  const auto [ra, rb] = measure_rtf_paired(counter, counter, o);
  CHECK(calls == 8);
  CHECK(length == 3200);
  CHECK(ra.per_clip.size() == 4);
  CHECK(rb.per_clip.size() == 4);

  CHECK(rtf_clip(o, 1)[0] == rtf_clip(o, 1)[0]);
  CHECK(rtf_clip(o, 1)[0] != rtf_clip(o, 2)[0]);
  CHECK(rtf_clip(o, 1)[0] != rtf_clip(o, 1)[1]);
  o.clips = 0;
  CHECK_THROWS_AS(measure_rtf(sleeper, o), std::invalid_argument);
}

TEST_CASE("streaming pipeline as an RTF processor") {
  StreamingPipeline p(StftConfig{}, ArrayGeometry{}, Roi{}, std::make_unique<ConstantMaskEstimator>(1.0f));
  RtfOptions o;
  o.clips = 2;
  o.clip_duration_s = 1.0;
  const auto r = measure_rtf(pipeline_processor(p), o);
  CHECK(r.rtf.mean > 0.0);
  CHECK(r.rtf.mean < 1.0);
  CHECK(p.frames_processed() == 200);  // the frame counter survives reset()
  std::vector<float> a(320), b(160);
  CHECK_THROWS_AS(pipeline_processor(p)(a, b), std::invalid_argument);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](const auto& h) { return h.load() == 1; }));

  std::atomic<int> done{0};
  CHECK_THROWS_WITH(parallel_for(50,
                                 [&](std::size_t i) {
                                   ++done;
                                   if (i == 7) throw std::runtime_error("cell 7");
                                 }),
                    "cell 7");
  CHECK(done == 50);

  ::setenv("STEERBEAM_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  std::set<std::thread::id> ids;
  std::mutex m;
  parallel_for(30, [&](std::size_t) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    std::lock_guard lock(m);
    ids.insert(std::this_thread::get_id());
  });
  CHECK(ids.size() <= 3);
  ::setenv("STEERBEAM_THREADS", "junk", 1);
  CHECK(worker_count() >= 1);
  ::unsetenv("STEERBEAM_THREADS");
  parallel_for(0, [](std::size_t) { FAIL("called"); });
}
