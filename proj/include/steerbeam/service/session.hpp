#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "steerbeam/scene.hpp"
#include "steerbeam/separation.hpp"
#include "steerbeam/streaming.hpp"

namespace steerbeam::service {

inline constexpr int kProtocolVersion = 1;

// Per-client queue of outgoing JSON text. State messages are always queued;
// droppable (metrics) messages are discarded while too many are pending.
class Outbox {
 public:
  explicit Outbox(std::size_t max_pending_droppable = 8) : max_droppable_(max_pending_droppable) {}

  bool push(std::string text, bool droppable = false);
  std::optional<std::string> try_pop();
  std::optional<std::string> pop_wait(std::chrono::milliseconds timeout);
  // Called after every successful push, from the pushing thread. Once close()
  // returns the callback is never invoked again.
  void set_notify(std::function<void()> fn);
  void close();
  bool closed() const;
  std::size_t dropped() const { return dropped_.load(); }

 private:
  struct Item {
    std::string text;
    bool droppable;
  };
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Item> queue_;
  std::size_t pending_droppable_ = 0;
  std::size_t max_droppable_;
  std::mutex notify_mutex_;
  std::function<void()> notify_;
  bool closed_ = false;
  std::atomic<std::size_t> dropped_{0};
};

enum class SessionStatus { Idle, Running, Stopped };
const char* to_string(SessionStatus s);

struct SessionOptions {
  std::filesystem::path scene_dir = ".";       // base for scene paths and relative wav paths
  double playback_rate = 1.0;                   // 1 = real time; <= 0 = as fast as possible
  double metrics_hz = 10.0;
  double metrics_window_s = 0.5;
  std::optional<std::filesystem::path> output_dir;  // separated audio written here on stop
  std::size_t max_pending_metrics = 8;
};

// The single session of a server instance. All mutations run on one command
// thread in submission order; the pipeline driver and the metrics publisher
// run on their own threads while the session is running.
class SessionController {
 public:
  explicit SessionController(SessionOptions options = {});
  ~SessionController();
  SessionController(const SessionController&) = delete;
  SessionController& operator=(const SessionController&) = delete;

  // New client: the outbox receives a full snapshot before any later message.
  std::shared_ptr<Outbox> subscribe();
  void unsubscribe(const std::shared_ptr<Outbox>& box);

  // Queues a client message; errors are sent to `reply` only.
  void submit(std::string_view text, std::shared_ptr<Outbox> reply);
  void submit(nlohmann::json msg, std::shared_ptr<Outbox> reply);
  // Blocks until every message submitted so far has been handled.
  void flush();

  SessionStatus status() const;
  double gamma_deg() const;

 private:
  struct LoadedScene;
  struct Command {
    nlohmann::json msg;
    std::shared_ptr<Outbox> reply;
    std::uint64_t finished_run = 0;  // internal: that run reached the end of the scene
  };
  struct Segment {
    double gamma_deg;
    std::uint64_t start_frame;
  };

  void command_loop();
  void handle(const Command& cmd);
  void handle_steer(const nlohmann::json& msg, const std::shared_ptr<Outbox>& reply);
  void handle_load(const nlohmann::json& msg, const std::shared_ptr<Outbox>& reply);
  void handle_start(const std::shared_ptr<Outbox>& reply);
  void handle_stop(const std::shared_ptr<Outbox>& reply, bool finished);
  void drive(std::shared_ptr<const LoadedScene> scene, StreamingPipeline* pipeline, std::uint64_t run_id);
  void publish_metrics_loop();

  // publish_mutex_ must be held.
  nlohmann::json state_json() const;
  nlohmann::json boundaries_json() const;
  std::optional<nlohmann::json> metrics_json() const;
  void broadcast(const nlohmann::json& msg, bool droppable = false);
  void send_error(const std::shared_ptr<Outbox>& reply, const std::string& msg);

  SessionOptions options_;

  mutable std::mutex publish_mutex_;
  std::vector<std::shared_ptr<Outbox>> subscribers_;
  SessionStatus status_ = SessionStatus::Idle;
  double gamma_deg_ = 0.0;
  double theta2_deg_ = 90.0;
  std::uint64_t effective_frame_ = 0;
  std::shared_ptr<const LoadedScene> scene_;
  std::unique_ptr<StreamingPipeline> pipeline_;
  std::vector<Segment> segments_;  // per-frame gamma record of the last run
  std::uint64_t run_id_ = 0;       // command thread only

  // Filled by the driver; frames_done_ publishes them.
  std::vector<float> output_;
  std::vector<cfloat> masks_;
  std::atomic<std::uint64_t> frames_done_{0};
  std::atomic<bool> run_flag_{false};
  std::thread driver_;
  std::thread metrics_;
  std::mutex metrics_wait_mutex_;
  std::condition_variable metrics_wait_cv_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<Command> queue_;
  bool busy_ = false;
  bool shutting_down_ = false;
  std::thread command_thread_;
};

}  // namespace steerbeam::service
