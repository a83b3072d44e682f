#include "steerbeam/service/session.hpp"

#include <algorithm>
#include <cmath>

#include "steerbeam/geometry.hpp"
#include "steerbeam/metrics.hpp"
#include "steerbeam/scene_io.hpp"
#include "steerbeam/signals.hpp"
#include "steerbeam/stft.hpp"
#include "steerbeam/wav.hpp"

namespace steerbeam::service {

using nlohmann::json;

bool Outbox::push(std::string text, bool droppable) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    if (droppable && pending_droppable_ >= max_droppable_) {
      ++dropped_;
      return false;
    }
    queue_.push_back({std::move(text), droppable});
    if (droppable) ++pending_droppable_;
  }
  cv_.notify_one();
  std::lock_guard lock(notify_mutex_);
  if (notify_) notify_();
  return true;
}

std::optional<std::string> Outbox::try_pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  auto item = std::move(queue_.front());
  queue_.pop_front();
  if (item.droppable) --pending_droppable_;
  return std::move(item.text);
}

std::optional<std::string> Outbox::pop_wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; }) || queue_.empty())
    return std::nullopt;
  auto item = std::move(queue_.front());
  queue_.pop_front();
  if (item.droppable) --pending_droppable_;
  return std::move(item.text);
}

void Outbox::set_notify(std::function<void()> fn) {
  std::lock_guard lock(notify_mutex_);
  notify_ = std::move(fn);
}

void Outbox::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
  // Waits for a notification in flight on another thread.
  std::lock_guard lock(notify_mutex_);
  notify_ = nullptr;
}

bool Outbox::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Idle: return "idle";
    case SessionStatus::Running: return "running";
    case SessionStatus::Stopped: return "stopped";
  }
  return "idle";
}

// Everything derived from a scene at load time; immutable afterwards.
struct SessionController::LoadedScene {
  struct Source {
    std::string name;
    SourceRole role;
    double angle_deg;
    std::vector<cfloat> spectrum;  // reference channel, [offline frame][bin]
  };
  Scene scene;
  StftConfig stft;
  std::vector<float> reference, second;
  std::vector<double> mixture_ref, target_ref;
  std::vector<Source> sources;
  std::size_t frames = 0;          // streaming frames
  std::size_t offline_frames = 0;
};

namespace {

json boundary_pair(double l, double r, bool sat_l, bool sat_r) {
  return {{"phi_l", l}, {"phi_r", r}, {"saturated", {sat_l, sat_r}}};
}

std::string dump(const json& j) { return j.dump(); }

}  // namespace

SessionController::SessionController(SessionOptions options) : options_(std::move(options)) {
  command_thread_ = std::thread([this] { command_loop(); });
}

SessionController::~SessionController() {
  {
    std::lock_guard lock(queue_mutex_);
    shutting_down_ = true;
  }
  queue_cv_.notify_all();
  command_thread_.join();
  run_flag_ = false;
  metrics_wait_cv_.notify_all();
  if (driver_.joinable()) driver_.join();
  if (metrics_.joinable()) metrics_.join();
  std::lock_guard lock(publish_mutex_);
  for (auto& box : subscribers_) box->close();
}

std::shared_ptr<Outbox> SessionController::subscribe() {
  auto box = std::make_shared<Outbox>(options_.max_pending_metrics);
  std::lock_guard lock(publish_mutex_);
  box->push(dump(state_json()));
  box->push(dump(boundaries_json()));
  subscribers_.push_back(box);
  return box;
}

void SessionController::unsubscribe(const std::shared_ptr<Outbox>& box) {
  std::lock_guard lock(publish_mutex_);
  std::erase(subscribers_, box);
  box->close();
}

void SessionController::submit(std::string_view text, std::shared_ptr<Outbox> reply) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    send_error(reply, std::string("malformed JSON: ") + e.what());
    return;
  }
  submit(std::move(msg), std::move(reply));
}

void SessionController::submit(json msg, std::shared_ptr<Outbox> reply) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back({std::move(msg), std::move(reply), 0});
  }
  queue_cv_.notify_all();
}

void SessionController::flush() {
  std::unique_lock lock(queue_mutex_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

SessionStatus SessionController::status() const {
  std::lock_guard lock(publish_mutex_);
  return status_;
}

double SessionController::gamma_deg() const {
  std::lock_guard lock(publish_mutex_);
  return gamma_deg_;
}

void SessionController::command_loop() {
  for (;;) {
    Command cmd;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [&] { return shutting_down_ || !queue_.empty(); });
      if (queue_.empty()) return;
      cmd = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    try {
      handle(cmd);
    } catch (const std::exception& e) {
      send_error(cmd.reply, e.what());
    }
    {
      std::lock_guard lock(queue_mutex_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void SessionController::handle(const Command& cmd) {
  if (cmd.finished_run) {
    if (cmd.finished_run == run_id_) handle_stop(nullptr, true);
    return;
  }
  const json& msg = cmd.msg;
  if (!msg.is_object()) return send_error(cmd.reply, "message must be a JSON object");
  if (msg.contains("v") && msg["v"] != kProtocolVersion)
    return send_error(cmd.reply, "unsupported protocol version " + msg["v"].dump() + " (expected 1)");
  if (!msg.contains("type") || !msg["type"].is_string())
    return send_error(cmd.reply, "message needs a string field 'type'");
  const auto type = msg["type"].get<std::string>();
  if (type == "steer") return handle_steer(msg, cmd.reply);
  if (type == "load_scene") return handle_load(msg, cmd.reply);
  if (type == "start") return handle_start(cmd.reply);
  if (type == "stop") return handle_stop(cmd.reply, false);
  send_error(cmd.reply, "unknown message type '" + type + "'");
}

void SessionController::handle_steer(const json& msg, const std::shared_ptr<Outbox>& reply) {
  if (!msg.contains("gamma_deg") || !msg["gamma_deg"].is_number())
    return send_error(reply, "steer: gamma_deg must be a number");
  const double gamma = msg["gamma_deg"].get<double>();
  std::lock_guard lock(publish_mutex_);
  auto rebroadcast = [&](const std::string& why) {
    send_error(reply, why);
    broadcast(state_json());
    broadcast(boundaries_json());
  };
  if (!scene_) return rebroadcast("steer: no scene loaded");
  if (!std::isfinite(gamma) || !steering_is_valid(gamma, scene_->scene.roi))
    return rebroadcast("steer: gamma_deg=" + msg["gamma_deg"].dump() +
                       " puts the steered direction outside (0, 180) degrees");
  const auto ack = pipeline_->set_steering(gamma);
  gamma_deg_ = ack.gamma_deg;
  theta2_deg_ = ack.theta2_deg;
  effective_frame_ = ack.effective_frame;
  broadcast(boundaries_json());
  broadcast(state_json());
}

void SessionController::handle_load(const json& msg, const std::shared_ptr<Outbox>& reply) {
  {
    std::lock_guard lock(publish_mutex_);
    if (status_ == SessionStatus::Running)
      return send_error(reply, "load_scene: not allowed while running; stop first");
  }
  if (!msg.contains("scene")) return send_error(reply, "load_scene: missing field 'scene'");
  Scene scene;
  try {
    const auto& s = msg["scene"];
    if (s.is_string()) {
      auto path = std::filesystem::path(s.get<std::string>());
      if (path.is_relative()) path = options_.scene_dir / path;
      scene = load_scene(path);
    } else if (s.is_object()) {
      scene = parse_scene(s, options_.scene_dir);
    } else {
      return send_error(reply, "load_scene: 'scene' must be an object or a path");
    }
  } catch (const std::exception& e) {
    return send_error(reply, std::string("load_scene: ") + e.what());
  }

  auto loaded = std::make_shared<LoadedScene>();
  const auto mix = mix_scene(scene);
  loaded->stft = StftConfig{};
  loaded->stft.sample_rate = scene.sample_rate;
  const auto& cfg = loaded->stft;
  const std::size_t n = mix.mixture.num_samples();
  if (n < cfg.window_len) return send_error(reply, "load_scene: scene shorter than one STFT window");
  loaded->frames = n / cfg.hop;
  loaded->offline_frames = frame_count(n, cfg);
  loaded->reference.assign(mix.mixture.channel(0).begin(), mix.mixture.channel(0).end());
  loaded->second.assign(mix.mixture.channel(1).begin(), mix.mixture.channel(1).end());
  loaded->mixture_ref.assign(mix.mixture.channel(0).begin(), mix.mixture.channel(0).end());
  loaded->target_ref.assign(mix.target.channel(0).begin(), mix.target.channel(0).end());
  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& src = scene.sources[i];
    const auto& stem = mix.sources[i];
    const auto spec = stft(MultichannelAudio({std::vector<double>(stem.channel(0).begin(), stem.channel(0).end())},
                                             stem.sample_rate()),
                           cfg);
    LoadedScene::Source s{src.name, src.role, source_local_angle(src, scene.array), {}};
    s.spectrum.reserve(spec.num_frames() * spec.num_bins());
    for (std::size_t f = 0; f < spec.num_frames(); ++f)
      for (const auto& v : spec.frame(0, f)) s.spectrum.emplace_back(v);
    loaded->sources.push_back(std::move(s));
  }
  loaded->scene = std::move(scene);

  auto pipeline = std::make_unique<StreamingPipeline>(
      cfg, loaded->scene.geometry, loaded->scene.roi,
      std::make_unique<PhaseMaskEstimator>(loaded->scene.roi, loaded->scene.geometry, cfg));

  std::lock_guard lock(publish_mutex_);
  double gamma = gamma_deg_;
  if (!steering_is_valid(gamma, loaded->scene.roi)) gamma = 0.0;
  const auto ack = pipeline->set_steering(gamma);
  gamma_deg_ = ack.gamma_deg;
  theta2_deg_ = ack.theta2_deg;
  effective_frame_ = 0;
  scene_ = std::move(loaded);
  pipeline_ = std::move(pipeline);
  status_ = SessionStatus::Idle;
  frames_done_ = 0;
  segments_.clear();
  broadcast(state_json());
  broadcast(boundaries_json());
}

void SessionController::handle_start(const std::shared_ptr<Outbox>& reply) {
  std::lock_guard lock(publish_mutex_);
  if (!scene_) return send_error(reply, "start: no scene loaded");
  if (status_ == SessionStatus::Running) return send_error(reply, "start: already running");
  if (driver_.joinable()) driver_.join();
  if (metrics_.joinable()) metrics_.join();

  pipeline_ = std::make_unique<StreamingPipeline>(
      scene_->stft, scene_->scene.geometry, scene_->scene.roi,
      std::make_unique<PhaseMaskEstimator>(scene_->scene.roi, scene_->scene.geometry, scene_->stft));
  pipeline_->set_steering(gamma_deg_);
  effective_frame_ = 0;
  const std::size_t hop = scene_->stft.hop, bins = scene_->stft.num_bins();
  output_.assign(scene_->frames * hop, 0.0f);
  masks_.assign(scene_->frames * bins, cfloat{});
  segments_.clear();
  frames_done_ = 0;
  ++run_id_;
  run_flag_ = true;
  status_ = SessionStatus::Running;
  driver_ = std::thread([this, scene = scene_, p = pipeline_.get(), id = run_id_] { drive(scene, p, id); });
  metrics_ = std::thread([this] { publish_metrics_loop(); });
  broadcast(state_json());
}

void SessionController::handle_stop(const std::shared_ptr<Outbox>& reply, bool finished) {
  {
    std::lock_guard lock(publish_mutex_);
    if (status_ != SessionStatus::Running) {
      if (!finished) send_error(reply, "stop: not running");
      return;
    }
  }
  run_flag_ = false;
  metrics_wait_cv_.notify_all();
  if (driver_.joinable()) driver_.join();
  if (metrics_.joinable()) metrics_.join();

  std::lock_guard lock(publish_mutex_);
  status_ = SessionStatus::Stopped;
  const auto& sc = *scene_;
  const std::size_t hop = sc.stft.hop;
  const std::size_t latency = pipeline_->latency_samples();
  const std::uint64_t done = frames_done_.load();

  // Segments from the per-frame gamma record: consecutive frames sharing a gamma.
  json segments = json::array();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const std::uint64_t begin = segments_[i].start_frame;
    const std::uint64_t end = i + 1 < segments_.size() ? segments_[i + 1].start_frame : done;
    if (end <= begin) continue;
    // Output frame j holds input samples delayed by the pipeline latency.
    const std::size_t out_begin = std::max<std::size_t>(begin * hop, latency);
    const std::size_t out_end = end * hop;
    json seg{{"gamma_deg", segments_[i].gamma_deg},
             {"start_s", static_cast<double>(begin * hop) / sc.scene.sample_rate},
             {"end_s", static_cast<double>(end * hop) / sc.scene.sample_rate},
             {"si_sdr_db", nullptr},
             {"si_sdr_input_db", nullptr}};
    if (out_end > out_begin + sc.stft.window_len) {
      const std::size_t len = out_end - out_begin;
      std::vector<double> est(output_.begin() + out_begin, output_.begin() + out_end);
      std::span<const double> ref(sc.target_ref.data() + out_begin - latency, len);
      std::span<const double> mix(sc.mixture_ref.data() + out_begin - latency, len);
      if (energy(ref) > 0.0) {
        seg["si_sdr_db"] = si_sdr(est, ref);
        seg["si_sdr_input_db"] = si_sdr(mix, ref);
      }
    }
    segments.push_back(std::move(seg));
  }
  json summary{{"v", kProtocolVersion},
               {"type", "summary"},
               {"frames", done},
               {"duration_s", static_cast<double>(done * hop) / sc.scene.sample_rate},
               {"segments", segments},
               {"output_path", nullptr}};
  if (options_.output_dir) {
    std::vector<double> out(output_.begin(), output_.begin() + done * hop);
    const auto path = *options_.output_dir / "separated.wav";
    try {
      std::filesystem::create_directories(*options_.output_dir);
      write_wav(MultichannelAudio({std::move(out)}, sc.scene.sample_rate), path);
      summary["output_path"] = path.string();
    } catch (const std::exception& e) {
      send_error(reply, std::string("stop: could not write separated audio: ") + e.what());
    }
  }
  broadcast(state_json());
  broadcast(summary);
}

void SessionController::drive(std::shared_ptr<const LoadedScene> scene, StreamingPipeline* pipeline,
                              std::uint64_t run_id) {
  const std::size_t hop = scene->stft.hop, bins = scene->stft.num_bins();
  const double frame_s = static_cast<double>(hop) / scene->scene.sample_rate;
  const double rate = options_.playback_rate;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Segment> segments;
  std::size_t j = 0;
  for (; j < scene->frames && run_flag_.load(std::memory_order_relaxed); ++j) {
    if (rate > 0.0) {
      const auto due = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(static_cast<double>(j) * frame_s / rate));
      std::this_thread::sleep_until(due);
    }
    pipeline->process_frame(std::span<const float>(scene->reference).subspan(j * hop, hop),
                            std::span<const float>(scene->second).subspan(j * hop, hop),
                            std::span<float>(output_).subspan(j * hop, hop),
                            std::span<cfloat>(masks_).subspan(j * bins, bins));
    const double g = pipeline->frame_gamma_deg();
    if (segments.empty() || segments.back().gamma_deg != g) segments.push_back({g, j});
    frames_done_.store(j + 1, std::memory_order_release);
  }
  {
    std::lock_guard lock(publish_mutex_);
    segments_ = std::move(segments);
  }
  if (j == scene->frames) {
    {
      std::lock_guard lock(queue_mutex_);
      queue_.push_back({json{}, nullptr, run_id});
    }
    queue_cv_.notify_all();
  }
}

void SessionController::publish_metrics_loop() {
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / options_.metrics_hz));
  auto next = std::chrono::steady_clock::now() + period;
  for (;;) {
    {
      std::unique_lock lock(metrics_wait_mutex_);
      if (metrics_wait_cv_.wait_until(lock, next, [&] { return !run_flag_.load(); })) return;
    }
    next += period;
    std::lock_guard lock(publish_mutex_);
    if (auto m = metrics_json()) broadcast(*m, true);
  }
}

json SessionController::state_json() const {
  json scene = nullptr;
  if (scene_) {
    json sources = json::array();
    for (const auto& s : scene_->sources)
      sources.push_back({{"name", s.name}, {"role", to_string(s.role)}, {"angle_deg", s.angle_deg}});
    scene = {{"duration_s", static_cast<double>(scene_->reference.size()) / scene_->scene.sample_rate},
             {"sources", sources}};
  }
  const Roi roi = scene_ ? scene_->scene.roi : Roi{};
  return {{"v", kProtocolVersion},
          {"type", "state"},
          {"status", to_string(status_)},
          {"scene_loaded", scene_ != nullptr},
          {"gamma_deg", gamma_deg_},
          {"theta2_deg", theta2_deg_},
          {"roi", {{"theta1_deg", roi.center_deg}, {"beta_deg", roi.half_width_deg}}},
          {"frames_processed", frames_done_.load()},
          {"scene", scene}};
}

json SessionController::boundaries_json() const {
  const Roi roi = scene_ ? scene_->scene.roi : Roi{};
  const auto eq = steered_boundaries(roi, gamma_deg_);
  const auto lin = linear_boundaries(roi, gamma_deg_);
  return {{"v", kProtocolVersion},
          {"type", "boundaries"},
          {"gamma_deg", gamma_deg_},
          {"theta2_deg", theta2_deg_},
          {"effective_frame", effective_frame_},
          {"initial", boundary_pair(roi.center_deg + roi.half_width_deg, roi.center_deg - roi.half_width_deg,
                                    false, false)},
          {"eq12", boundary_pair(eq.phi_left_deg, eq.phi_right_deg, eq.saturated_left, eq.saturated_right)},
          {"linear", boundary_pair(lin.phi_left_deg, lin.phi_right_deg, lin.saturated_left, lin.saturated_right)},
          {"mirrored", boundary_pair(eq.mirrored_left_deg(), eq.mirrored_right_deg(), eq.saturated_left,
                                     eq.saturated_right)}};
}

std::optional<json> SessionController::metrics_json() const {
  if (!scene_ || status_ != SessionStatus::Running) return std::nullopt;
  const auto& sc = *scene_;
  const std::uint64_t done = frames_done_.load(std::memory_order_acquire);
  if (done < 2) return std::nullopt;
  const std::size_t bins = sc.stft.num_bins();
  const auto window = static_cast<std::uint64_t>(
      std::max(1.0, std::round(options_.metrics_window_s * sc.scene.sample_rate / sc.stft.hop)));
  // Streaming frame j analyses the same samples as offline frame j - 1.
  const std::uint64_t last = std::min<std::uint64_t>(done, sc.offline_frames + 1);
  const std::uint64_t first = std::max<std::uint64_t>(1, last > window ? last - window : 1);

  const auto eq = steered_boundaries(sc.scene.roi, gamma_deg_);
  json per_source = json::array();
  double in_sum = 0.0, out_sum = 0.0;
  int in_n = 0, out_n = 0;
  for (const auto& s : sc.sources) {
    double num = 0.0, den = 0.0;
    for (std::uint64_t j = first; j < last; ++j) {
      const cfloat* q = masks_.data() + j * bins;
      const cfloat* x = s.spectrum.data() + (j - 1) * bins;
      for (std::size_t k = 0; k < bins; ++k) {
        num += std::norm(x[k]);
        den += std::norm(q[k] * x[k]);
      }
    }
    json pr = nullptr;
    if (num > 0.0) {
      const double v = den > 0.0 ? std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb)
                                 : kMetricCapDb;
      pr = v;
      const double folded = s.angle_deg <= 180.0 ? s.angle_deg : 360.0 - s.angle_deg;
      if (eq.contains(folded)) {
        in_sum += v;
        ++in_n;
      } else {
        out_sum += v;
        ++out_n;
      }
    }
    per_source.push_back({{"name", s.name}, {"role", to_string(s.role)}, {"angle_deg", s.angle_deg}, {"pr_db", pr}});
  }
  json delta = nullptr;
  if (in_n > 0 && out_n > 0) delta = out_sum / out_n - in_sum / in_n;
  return json{{"v", kProtocolVersion},
              {"type", "metrics"},
              {"t_s", static_cast<double>(done * sc.stft.hop) / sc.scene.sample_rate},
              {"gamma_deg", gamma_deg_},
              {"per_source", per_source},
              {"delta_pr_db", delta}};
}

void SessionController::broadcast(const json& msg, bool droppable) {
  const auto text = dump(msg);
  for (auto& box : subscribers_) box->push(text, droppable);
}

void SessionController::send_error(const std::shared_ptr<Outbox>& reply, const std::string& msg) {
  if (!reply) return;
  reply->push(dump(json{{"v", kProtocolVersion}, {"type", "error"}, {"msg", msg}}));
}

}  // namespace steerbeam::service
