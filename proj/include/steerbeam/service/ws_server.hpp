#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "steerbeam/service/session.hpp"

namespace steerbeam::service {

// WebSocket front end for a SessionController. Clients connect to /session;
// each text frame carries one JSON message. Other paths get HTTP 404.
class WsServer {
 public:
  WsServer(SessionController& controller, const std::string& address, std::uint16_t port);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  // Bound port (useful when constructed with port 0).
  std::uint16_t port() const;
  // Serves on a background thread until stop().
  void start();
  // Serves on the calling thread until stop() is called from elsewhere.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace steerbeam::service
