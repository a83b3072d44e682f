#include <pthread.h>
#include <signal.h>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "steerbeam/heatmap.hpp"
#include "steerbeam/metrics.hpp"
#include "steerbeam/rtf.hpp"
#include "steerbeam/scene_io.hpp"
#include "steerbeam/service/session.hpp"
#include "steerbeam/service/ws_server.hpp"
#include "steerbeam/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace steerbeam;

namespace {

struct CliError : std::runtime_error {
  CliError(std::string kind, const std::string& msg) : std::runtime_error(msg), kind(std::move(kind)) {}
  std::string kind;
};

bool g_verbose = false;

void log(const std::string& msg) {
  if (g_verbose) std::cerr << msg << '\n';
}

struct RoiFlags {
  double theta1 = 90.0;
  double beta = 10.0;
  double d = 0.05;
  double c = 343.0;

  void add(CLI::App* app) {
    app->add_option("--theta1", theta1, "ROI center (deg)")->capture_default_str();
    app->add_option("--beta", beta, "ROI half-width (deg)")->capture_default_str();
    app->add_option("--d", d, "microphone spacing (m)")->capture_default_str();
    app->add_option("--c", c, "speed of sound (m/s)")->capture_default_str();
  }
  Roi roi() const {
    Roi r{theta1, beta};
    r.validate();
    return r;
  }
  ArrayGeometry geometry() const {
    ArrayGeometry g{d, c};
    g.validate();
    return g;
  }
};

struct MaskFlags {
  std::string estimator = "phase";
  PhaseMaskConfig phase;

  void add(CLI::App* app) {
    app->add_option("--estimator", estimator, "phase | allpass")
        ->check(CLI::IsMember({"phase", "allpass"}))
        ->capture_default_str();
    app->add_option("--kappa", phase.concentration, "phase-mask concentration")->capture_default_str();
    app->add_option("--floor", phase.mask_floor, "phase-mask floor")->capture_default_str();
  }
  std::unique_ptr<MaskEstimator> make(const Roi& roi, const ArrayGeometry& geom, const StftConfig& cfg) const {
    if (estimator == "allpass") return std::make_unique<ConstantMaskEstimator>(cfloat(1.0f, 0.0f));
    return std::make_unique<PhaseMaskEstimator>(roi, geom, cfg, phase);
  }
};

// "start:stop:step", inclusive of stop.
std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError("usage", "bad range '" + text + "': expected start:stop:step");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    throw CliError("usage", "bad range '" + text + "': expected start:stop:step with step > 0");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = parts[0] + i * parts[2];
    if (v > parts[1] + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw CliError("io", "cannot write " + path.string());
  out << text;
}

MultichannelAudio channel_of(const MultichannelAudio& a, std::size_t m) {
  return MultichannelAudio({std::vector<double>(a.channel(m).begin(), a.channel(m).end())}, a.sample_rate());
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  fs::path scene;
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  bool pcm16 = false;
};

void cmd_simulate(const SimulateArgs& a) {
  Scene scene = load_scene(a.scene);
  if (a.seed) scene.seed = *a.seed;
  const auto enc = a.pcm16 ? WavEncoding::Pcm16 : WavEncoding::Float32;
  log("rendering " + std::to_string(scene.sources.size()) + " sources");
  const auto mix = mix_scene(scene);
  fs::create_directories(a.out);
  write_wav(mix.mixture, a.out / "mixture.wav", enc);
  write_wav(mix.target, a.out / "target.wav", enc);
  write_wav(mix.interferer, a.out / "interferer.wav", enc);
  write_wav(mix.noise, a.out / "noise.wav", enc);
  json stems = json::array();
  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& src = scene.sources[i];
    const auto file = "source_" + std::to_string(i) + "_" + src.name + ".wav";
    write_wav(mix.sources[i], a.out / file, enc);
    stems.push_back({{"name", src.name},
                     {"role", to_string(src.role)},
                     {"angle_deg", source_local_angle(src, scene.array)},
                     {"file", file}});
  }
  json manifest{{"seed", scene.seed},
                {"scene", scene_to_json(scene)},
                {"files", {{"mixture", "mixture.wav"}, {"target", "target.wav"},
                           {"interferer", "interferer.wav"}, {"noise", "noise.wav"}}},
                {"sources", stems},
                {"gains", {{"interferer", mix.interferer_gain}, {"noise", mix.noise_gain},
                           {"level", mix.level_gain}}},
                {"encoding", a.pcm16 ? "pcm16" : "float32"}};
  write_text(a.out / "manifest.json", manifest.dump(2) + "\n");
}

// ---- separate -------------------------------------------------------------

struct SeparateArgs {
  fs::path input;
  fs::path output = "separated.wav";
  std::optional<fs::path> metrics;
  std::optional<fs::path> target_stem;
  double gamma = 0.0;
  RoiFlags roi;
  MaskFlags mask;
  std::uint64_t seed = 0;
  bool pcm16 = false;
};

void cmd_separate(const SeparateArgs& a) {
  const auto audio = read_wav(a.input);
  if (audio.num_channels() != 2)
    throw CliError("input", "expected a 2-channel recording, got " + std::to_string(audio.num_channels()) +
                                " channel(s) in " + a.input.string());
  StftConfig cfg;
  if (audio.sample_rate() != cfg.sample_rate)
    throw CliError("input", "sample-rate mismatch: expected " + std::to_string(cfg.sample_rate) + " Hz, got " +
                                std::to_string(static_cast<long>(audio.sample_rate())) + " Hz");
  const Roi roi = a.roi.roi();
  const ArrayGeometry geom = a.roi.geometry();
  const auto steering = SteeringState::make(a.gamma, roi, geom, cfg);
  auto est = a.mask.make(roi, geom, cfg);
  const auto sep = separate_audio(audio, *est, steering, cfg);
  write_wav(MultichannelAudio({sep.target}, audio.sample_rate()), a.output,
            a.pcm16 ? WavEncoding::Pcm16 : WavEncoding::Float32);

  const auto range = reconstructed_interior(sep.frames, cfg);
  const auto y = audio.channel(0).subspan(range.begin, range.size());
  const auto t = std::span<const double>(sep.target).subspan(range.begin, range.size());
  MetricsReport report;
  report.pr_db = power_reduction(y, t);
  json extra{{"gamma_deg", a.gamma}, {"theta2_deg", steering.theta2_deg},
             {"frames", sep.frames}, {"output", a.output.string()}};
  if (a.target_stem) {
    const auto stem = read_wav(*a.target_stem);
    if (stem.num_samples() != audio.num_samples() || stem.sample_rate() != audio.sample_rate())
      throw CliError("input", "target stem must match the mixture length and sample rate");
    const auto ref = stem.channel(0).subspan(range.begin, range.size());
    report.si_sdr_db = si_sdr(t, ref);
    report.si_sdr_input_db = si_sdr(y, ref);
    report.si_sdr_improvement_db = *report.si_sdr_db - *report.si_sdr_input_db;
    // Suppression the mask applies to the target alone.
    const auto masked = apply_mask_audio(sep.mask, channel_of(stem, 0), cfg);
    extra["target_pr_db"] = power_reduction(ref, std::span<const double>(masked).subspan(range.begin, range.size()));
  }
  json j = report.to_json();
  j.update(extra);
  if (a.metrics) write_text(*a.metrics, j.dump(2) + "\n");
  else std::cout << j.dump(2) << '\n';
}

// ---- boundary ---------------------------------------------------------------

struct BoundaryArgs {
  RoiFlags roi;
  std::vector<double> gammas;
  std::string range = "0:45:5";
  std::uint64_t seed = 0;
};

const char* saturation_label(const SteeredBoundaries& b) {
  if (b.saturated_left && b.saturated_right) return "both";
  if (b.saturated_left) return "left";
  if (b.saturated_right) return "right";
  return "none";
}

void cmd_boundary(const BoundaryArgs& a) {
  const Roi roi = a.roi.roi();
  const auto gammas = a.gammas.empty() ? parse_range(a.range) : a.gammas;
  std::printf("gamma_deg,phi_l_deg,phi_r_deg,saturated\n");
  for (double g : gammas) {
    const auto b = steered_boundaries(roi, g);
    std::printf("%.2f,%.2f,%.2f,%s\n", g, b.phi_left_deg, b.phi_right_deg, saturation_label(b));
  }
}

// ---- heatmap / sweep ------------------------------------------------------

struct GridArgs {
  RoiFlags roi;
  MaskFlags mask;
  std::vector<double> room{6.0, 6.0, 3.0};
  std::vector<double> array{3.0, 3.0, 1.5};
  double orientation = 0.0;
  double t60 = 0.5;
  double cell = 0.25;
  double probe_s = 2.0;
  double level = -28.0;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    roi.add(app);
    mask.add(app);
    app->add_option("--room", room, "room dimensions x y z (m)")->expected(3)->capture_default_str();
    app->add_option("--array", array, "array center x y z (m)")->expected(3)->capture_default_str();
    app->add_option("--orientation", orientation, "array axis orientation (deg)")->capture_default_str();
    app->add_option("--t60", t60, "reverberation time (s); 0 = anechoic")->capture_default_str();
    app->add_option("--cell", cell, "grid cell size (m)")->capture_default_str();
    app->add_option("--probe-s", probe_s, "probe duration (s)")->capture_default_str();
    app->add_option("--level", level, "probe level at the reference mic (dBFS)")->capture_default_str();
    app->add_option("--seed", seed, "probe signal seed")->capture_default_str();
  }
  HeatmapConfig config() const {
    HeatmapConfig c;
    c.room_dims = {room[0], room[1], room[2]};
    c.array = {array[0], array[1], array[2], orientation};
    c.t60 = t60;
    c.cell_size = cell;
    c.probe_duration_s = probe_s;
    c.probe_level_dbfs = level;
    c.seed = seed;
    c.roi = roi.roi();
    c.geometry = roi.geometry();
    return c;
  }
};

struct HeatmapArgs {
  GridArgs grid;
  double gamma = 0.0;
  fs::path out = "heatmap.csv";
};

void cmd_heatmap(const HeatmapArgs& a) {
  const auto cfg = a.grid.config();
  const auto est = a.grid.mask.make(cfg.roi, cfg.geometry, cfg.stft);
  log("rendering probe grid");
  const auto probes = render_probe_grid(cfg);
  const auto grid = pr_heatmap(probes, *est, a.gamma);
  std::ostringstream csv;
  write_heatmap_csv(grid, csv);
  write_text(a.out, csv.str());
  auto sidecar = heatmap_sidecar(grid);
  sidecar["estimator"] = est->info().name;
  auto side_path = a.out;
  side_path.replace_extension(".json");
  write_text(side_path, sidecar.dump(2) + "\n");
}

struct SweepArgs {
  GridArgs grid;
  std::string range = "0:45:5";
  std::optional<fs::path> out;
  bool exclude_mirrored = false;
};

void cmd_sweep(const SweepArgs& a) {
  auto cfg = a.grid.config();
  const auto est = a.grid.mask.make(cfg.roi, cfg.geometry, cfg.stft);
  const auto gammas = parse_range(a.range);
  log("rendering probe grid");
  const auto probes = render_probe_grid(cfg);
  std::ostringstream csv;
  csv << "gamma_deg,delta_pr_db,phi_l_deg,phi_r_deg\n";
  char line[128];
  for (double g : gammas) {
    const auto grid = pr_heatmap(probes, *est, g);
    const double d = delta_pr(grid, grid.steered, !a.exclude_mirrored);
    std::snprintf(line, sizeof line, "%.2f,%.4f,%.2f,%.2f\n", g, d, grid.steered.phi_left_deg,
                  grid.steered.phi_right_deg);
    csv << line;
    log(line);
  }
  if (a.out) write_text(*a.out, csv.str());
  else std::cout << csv.str();
}

// ---- rtf --------------------------------------------------------------------

struct RtfArgs {
  RoiFlags roi;
  MaskFlags mask;
  double gamma = 0.0;
  std::size_t clips = 100;
  double clip_s = 10.0;
  std::uint64_t seed = 7;
  std::optional<fs::path> out;
};

void cmd_rtf(const RtfArgs& a) {
  StftConfig cfg;
  const Roi roi = a.roi.roi();
  const ArrayGeometry geom = a.roi.geometry();
  StreamingPipeline pipeline(cfg, geom, roi, a.mask.make(roi, geom, cfg));
  pipeline.set_steering(a.gamma);
  RtfOptions opt;
  opt.clips = a.clips;
  opt.clip_duration_s = a.clip_s;
  opt.seed = a.seed;
  const auto r = measure_rtf(pipeline_processor(pipeline), opt);
  json j{{"mean", r.rtf.mean}, {"std", r.rtf.std}, {"count", r.rtf.count},
         {"clip_s", a.clip_s}, {"gamma_deg", a.gamma}, {"seed", a.seed}};
  if (a.out) write_text(*a.out, j.dump(2) + "\n");
  else std::cout << j.dump(2) << '\n';
}

// ---- serve ----------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
  fs::path scene_dir = ".";
  std::optional<fs::path> scene;
  std::optional<fs::path> output_dir;
  double rate = 1.0;
  std::uint64_t seed = 0;
};

void cmd_serve(const ServeArgs& a) {
  // Signals are taken synchronously below; every thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  service::SessionOptions opt;
  opt.scene_dir = a.scene_dir;
  opt.playback_rate = a.rate;
  opt.output_dir = a.output_dir;
  service::SessionController controller(opt);
  if (a.scene) {
    auto box = std::make_shared<service::Outbox>();
    controller.submit(json{{"v", 1}, {"type", "load_scene"}, {"scene", a.scene->string()}}, box);
    controller.flush();
    while (auto m = box->try_pop()) {
      const auto j = json::parse(*m);
      if (j.value("type", "") == "error") throw CliError("scene", j.value("msg", ""));
    }
  }
  service::WsServer server(controller, a.host, a.port);
  server.start();
  std::cerr << json{{"listening", "ws://" + a.host + ":" + std::to_string(server.port()) + "/session"}}.dump()
            << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
}

void print_error(const std::string& kind, const std::string& msg) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", msg}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steerbeam: steerable two-microphone region-of-interest separation"};
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", g_verbose, "progress on stderr");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "render a scene file to mixture, stems and manifest");
  c_sim->add_option("scene", sim.scene, "scene JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("-o,--out", sim.out, "output directory")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "override the scene seed");
  c_sim->add_flag("--pcm16", sim.pcm16, "write 16-bit PCM instead of float32");

  SeparateArgs sep;
  auto* c_sep = app.add_subcommand("separate", "separate a 2-channel recording");
  c_sep->add_option("input", sep.input, "2-channel 16 kHz WAV")->required()->check(CLI::ExistingFile);
  c_sep->add_option("-o,--out", sep.output, "separated mono WAV")->capture_default_str();
  c_sep->add_option("--gamma", sep.gamma, "steering angle (deg)")->capture_default_str();
  c_sep->add_option("--metrics", sep.metrics, "metrics JSON path (default stdout)");
  c_sep->add_option("--target-stem", sep.target_stem, "target stem WAV for SI-SDR and target PR")
      ->check(CLI::ExistingFile);
  c_sep->add_option("--seed", sep.seed, "unused; accepted for uniformity")->capture_default_str();
  c_sep->add_flag("--pcm16", sep.pcm16, "write 16-bit PCM instead of float32");
  sep.roi.add(c_sep);
  sep.mask.add(c_sep);

  BoundaryArgs bnd;
  auto* c_bnd = app.add_subcommand("boundary", "print steered ROI boundaries as CSV");
  bnd.roi.add(c_bnd);
  c_bnd->add_option("--gamma", bnd.gammas, "steering angle(s) (deg)");
  c_bnd->add_option("--gamma-range", bnd.range, "start:stop:step when --gamma is absent")->capture_default_str();
  c_bnd->add_option("--seed", bnd.seed, "unused; accepted for uniformity")->capture_default_str();

  HeatmapArgs hm;
  auto* c_hm = app.add_subcommand("heatmap", "power-reduction heatmap (CSV + sidecar JSON)");
  hm.grid.add(c_hm);
  c_hm->add_option("--gamma", hm.gamma, "steering angle (deg)")->capture_default_str();
  c_hm->add_option("-o,--out", hm.out, "CSV path; sidecar uses .json")->capture_default_str();

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "delta-PR versus steering angle (CSV)");
  sw.grid.add(c_sw);
  c_sw->add_option("--gamma-range", sw.range, "start:stop:step")->capture_default_str();
  c_sw->add_option("-o,--out", sw.out, "CSV path (default stdout)");
  c_sw->add_flag("--exclude-mirrored", sw.exclude_mirrored, "drop cells behind the array axis");

  RtfArgs rtf;
  auto* c_rtf = app.add_subcommand("rtf", "real-time factor of the streaming pipeline");
  rtf.roi.add(c_rtf);
  rtf.mask.add(c_rtf);
  c_rtf->add_option("--gamma", rtf.gamma, "steering angle (deg)")->capture_default_str();
  c_rtf->add_option("--clips", rtf.clips, "number of clips")->capture_default_str()->check(CLI::PositiveNumber);
  c_rtf->add_option("--clip-s", rtf.clip_s, "clip duration (s)")->capture_default_str()->check(CLI::PositiveNumber);
  c_rtf->add_option("--seed", rtf.seed, "clip material seed")->capture_default_str();
  c_rtf->add_option("-o,--out", rtf.out, "JSON path (default stdout)");

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "WebSocket session server on /session");
  c_srv->add_option("--host", srv.host)->capture_default_str();
  c_srv->add_option("--port", srv.port)->capture_default_str();
  c_srv->add_option("--scene-dir", srv.scene_dir, "base directory for scene paths")->capture_default_str();
  c_srv->add_option("--scene", srv.scene, "scene to load at startup");
  c_srv->add_option("--output-dir", srv.output_dir, "write separated audio here on stop");
  c_srv->add_option("--rate", srv.rate, "playback rate; 1 = real time")->capture_default_str();
  c_srv->add_option("--seed", srv.seed, "unused; accepted for uniformity")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (c_sim->parsed()) cmd_simulate(sim);
    else if (c_sep->parsed()) cmd_separate(sep);
    else if (c_bnd->parsed()) cmd_boundary(bnd);
    else if (c_hm->parsed()) cmd_heatmap(hm);
    else if (c_sw->parsed()) cmd_sweep(sw);
    else if (c_rtf->parsed()) cmd_rtf(rtf);
    else if (c_srv->parsed()) cmd_serve(srv);
  } catch (const CliError& e) {
    print_error(e.kind, e.what());
    return e.kind == "usage" ? 2 : 1;
  } catch (const SceneError& e) {
    print_error("scene", e.what());
    return 1;
  } catch (const WavError& e) {
    print_error("wav", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 0;
}
