#include "steerbeam/service/ws_server.hpp"

#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace steerbeam::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, SessionController& controller)
      : ws_(std::move(socket)), controller_(controller) {}

  ~WsSession() {
    if (box_) controller_.unsubscribe(box_);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_accept();
    });
  }

  void close_box() {
    if (box_) box_->close();
  }

 private:
  void on_accept() {
    box_ = controller_.subscribe();
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto exec = ws_.get_executor();
    box_->set_notify([weak, exec] {
      net::post(exec, [weak] {
        if (auto self = weak.lock()) self->pump();
      });
    });
    pump();
    read();
  }

  void pump() {
    if (writing_ || !box_) return;
    auto msg = box_->try_pop();
    if (!msg) return;
    writing_ = true;
    current_ = std::move(*msg);
    ws_.text(true);
    ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->close_box();
      self->pump();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close_box();
      self->controller_.submit(std::string_view(beast::buffers_to_string(self->buffer_.data())), self->box_);
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  SessionController& controller_;
  std::shared_ptr<Outbox> box_;
  beast::flat_buffer buffer_;
  std::string current_;
  bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, SessionController& controller,
              std::function<void(const std::shared_ptr<WsSession>&)> on_ws)
      : stream_(std::move(socket)), controller_(controller), on_ws_(std::move(on_ws)) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->on_request();
    });
  }

 private:
  void on_request() {
    if (websocket::is_upgrade(req_) && req_.target() == "/session") {
      stream_.expires_never();
      auto ws = std::make_shared<WsSession>(stream_.release_socket(), controller_);
      on_ws_(ws);
      ws->run(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, req_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = "WebSocket endpoint is /session\n";
    res->keep_alive(false);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  SessionController& controller_;
  std::function<void(const std::shared_ptr<WsSession>&)> on_ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct WsServer::Impl {
  SessionController& controller;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::mutex sessions_mutex;
  std::vector<std::weak_ptr<WsSession>> sessions;

  Impl(SessionController& c, const std::string& address, std::uint16_t port) : controller(c) {
    const tcp::endpoint ep{net::ip::make_address(address), port};
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(net::socket_base::max_listen_connections);
    accept();
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), controller, [this](const std::shared_ptr<WsSession>& ws) {
        std::lock_guard lock(sessions_mutex);
        std::erase_if(sessions, [](const auto& w) { return w.expired(); });
        sessions.push_back(ws);
      })->run();
      accept();
    });
  }

  void stop() {
    ioc.stop();
    if (thread.joinable() && thread.get_id() != std::this_thread::get_id()) thread.join();
    // Detach every outbox from the io_context before it goes away.
    std::lock_guard lock(sessions_mutex);
    for (auto& w : sessions)
      if (auto s = w.lock()) s->close_box();
  }
};

WsServer::WsServer(SessionController& controller, const std::string& address, std::uint16_t port)
    : impl_(std::make_unique<Impl>(controller, address, port)) {}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::start() {
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WsServer::run() { impl_->ioc.run(); }

void WsServer::stop() { impl_->stop(); }

}  // namespace steerbeam::service
