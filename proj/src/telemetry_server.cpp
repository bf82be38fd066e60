#include "formplan/telemetry_server.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include "formplan/errors.hpp"

namespace formplan {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

using Message = std::shared_ptr<const std::string>;

Message makeMessage(const json& j) { return std::make_shared<const std::string>(j.dump()); }

json errorReply(const json& request_id, const std::string& reason) {
  return {{"type", "error"}, {"version", kWireVersion}, {"request_id", request_id}, {"reason", reason}};
}

}  // namespace

namespace detail {

class WsSession;

class ServerImpl {
 public:
  ServerImpl(Scenario scenario, ServerOptions options) : scenario_(std::move(scenario)), options_(std::move(options)) {}

  void start();
  void stop();
  void wait();

  unsigned short port() const { return port_; }
  std::size_t clientCount() const { return client_count_.load(); }
  LoopStats stats() const {
    std::lock_guard lock(stats_mutex_);
    return {cycles_, cycles_ ? busy_seconds_ / static_cast<double>(cycles_) : 0.0};
  }

  // Called on the network thread.
  void addSession(const std::shared_ptr<WsSession>& s);
  void removeSession(const std::shared_ptr<WsSession>& s);
  void submit(ControlCommand cmd) {
    std::lock_guard lock(command_mutex_);
    pending_.push_back(std::move(cmd));
  }
  json hello(int client_id) const {
    return {{"type", "hello"},
            {"version", kWireVersion},
            {"client_id", client_id},
            {"scenario", scenario_.name},
            {"robots", scenario_.formation.size()},
            {"map_digest", digest_},
            {"cycle", cycle_.load()},
            {"paused", paused_.load()}};
  }
  const Message& mapMessage() const { return map_message_; }
  net::io_context& ioc() { return ioc_; }
  int nextClientId() { return ++client_counter_; }

 private:
  void acceptLoop();
  void simLoop();
  void publish(const Message& text);

  Scenario scenario_;
  ServerOptions options_;
  net::io_context ioc_{1};
  net::executor_work_guard<net::io_context::executor_type> work_{ioc_.get_executor()};
  tcp::acceptor acceptor_{ioc_};
  unsigned short port_ = 0;
  std::unique_ptr<Simulation> sim_;
  std::string digest_;
  Message map_message_;

  std::thread io_thread_;
  std::thread sim_thread_;
  std::atomic<bool> running_{false};
  bool started_ = false;
  std::mutex lifecycle_mutex_;
  std::condition_variable stopped_cv_;
  bool stopped_ = false;

  std::mutex command_mutex_;
  std::vector<ControlCommand> pending_;

  std::set<std::shared_ptr<WsSession>> sessions_;  // network thread only
  std::atomic<std::size_t> client_count_{0};
  int client_counter_ = 0;

  std::atomic<std::uint64_t> cycle_{0};
  std::atomic<bool> paused_{false};

  mutable std::mutex stats_mutex_;
  std::uint64_t cycles_ = 0;
  double busy_seconds_ = 0.0;
};

// ---------------------------------------------------------------------------

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, ServerImpl& server)
      : ws_(std::move(socket)), server_(server), id_(server.nextClientId()) {}

  void run(const http::request<http::string_body>& req) {
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::onAccept, shared_from_this()));
  }

  void send(Message text) {
    replies_.push_back(std::move(text));
    flush();
  }

  // Keeps only the newest frame; an unsent older one is dropped.
  void offerFrame(Message text) {
    latest_frame_ = std::move(text);
    flush();
  }

  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void onAccept(beast::error_code ec) {
    if (ec) return;
    server_.addSession(shared_from_this());
    send(makeMessage(server_.hello(id_)));
    read();
  }

  void read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::onRead, shared_from_this())); }

  void onRead(beast::error_code ec, std::size_t) {
    if (ec) {
      server_.removeSession(shared_from_this());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle(text);
    read();
  }

  void handle(const std::string& text) {
    json msg;
    try {
      msg = json::parse(text);
    } catch (const json::parse_error& e) {
      send(makeMessage(errorReply(nullptr, std::string("malformed JSON: ") + e.what())));
      return;
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      send(makeMessage(errorReply(nullptr, "message must be an object with a string 'type'")));
      return;
    }
    const json request_id = msg.value("request_id", json(nullptr));
    if (msg.contains("version") && msg["version"] != kWireVersion) {
      send(makeMessage(errorReply(request_id, "unsupported version")));
      return;
    }
    const std::string type = msg["type"];
    if (type == "get_map") {
      send(server_.mapMessage());
    } else if (type == "ping") {
      send(makeMessage({{"type", "pong"}, {"version", kWireVersion}, {"request_id", request_id}}));
    } else if (type == "goal") {
      const json& pose = msg.contains("pose") ? msg["pose"] : json();
      if (!pose.is_array() || pose.size() != 3 ||
          !std::all_of(pose.begin(), pose.end(), [](const json& v) { return v.is_number(); })) {
        send(makeMessage(errorReply(request_id, "goal needs 'pose': [x, y, heading]")));
        return;
      }
      const Pose2 goal{{pose[0].get<double>(), pose[1].get<double>()}, pose[2].get<double>()};
      if (!std::isfinite(goal.position.x) || !std::isfinite(goal.position.y) || !std::isfinite(goal.heading)) {
        send(makeMessage(errorReply(request_id, "goal pose must be finite")));
        return;
      }
      ControlCommand cmd;
      cmd.kind = ControlCommand::Kind::Goal;
      cmd.goal = goal;
      cmd.on_applied = replyHandler(request_id, "goal");
      server_.submit(std::move(cmd));
    } else if (type == "pause" || type == "resume" || type == "reset") {
      ControlCommand cmd;
      cmd.kind = type == "pause"    ? ControlCommand::Kind::Pause
                 : type == "resume" ? ControlCommand::Kind::Resume
                                    : ControlCommand::Kind::Reset;
      cmd.on_applied = replyHandler(request_id, type);
      server_.submit(std::move(cmd));
    } else {
      send(makeMessage(errorReply(request_id, "unknown message type '" + type + "'")));
    }
  }

  // Runs on the simulation thread; hops back to the network thread to reply.
  std::function<void(std::uint64_t, const std::string&)> replyHandler(json request_id, std::string command) {
    return [weak = weak_from_this(), &ioc = server_.ioc(), request_id = std::move(request_id),
            command = std::move(command), client = id_](std::uint64_t cycle, const std::string& error) {
      json reply = error.empty() ? json{{"type", "ack"}, {"cycle", cycle}}
                                 : json{{"type", "reject"}, {"cycle", cycle}, {"reason", error}};
      reply["version"] = kWireVersion;
      reply["request_id"] = request_id;
      reply["command"] = command;
      reply["client_id"] = client;
      net::post(ioc, [weak, text = makeMessage(reply)] {
        if (auto self = weak.lock()) self->send(text);
      });
    };
  }

  void flush() {
    if (writing_) return;
    Message next;
    if (!replies_.empty()) {
      next = std::move(replies_.front());
      replies_.pop_front();
    } else if (latest_frame_) {
      next = std::move(latest_frame_);
      latest_frame_.reset();
    } else {
      return;
    }
    writing_ = true;
    ws_.async_write(net::buffer(*next), [self = shared_from_this(), next](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->server_.removeSession(self);
        return;
      }
      self->flush();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  ServerImpl& server_;
  const int id_;
  std::deque<Message> replies_;
  Message latest_frame_;
  bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, ServerImpl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::onRead, shared_from_this()));
  }

 private:
  void onRead(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      std::make_shared<WsSession>(stream_.release_socket(), server_)->run(req_);
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    res->set(http::field::access_control_allow_origin, "*");
    if (req_.method() == http::verb::get && req_.target() == "/map") {
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->body() = *server_.mapMessage();
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "endpoints: GET /map, websocket upgrade for the message stream\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  ServerImpl& server_;
};

// ---------------------------------------------------------------------------

void ServerImpl::start() {
  if (started_) return;
  sim_ = std::make_unique<Simulation>(scenario_);
  sim_->setUseSchedule(false);
  if (options_.start_paused) sim_->enqueue({ControlCommand::Kind::Pause, {}, nullptr});
  paused_ = options_.start_paused;
  digest_ = mapDigest(sim_->maps().grid);
  map_message_ = makeMessage(mapToJson(sim_->maps().grid));

  try {
    const tcp::endpoint endpoint(net::ip::make_address(options_.bind_address), options_.port);
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen(net::socket_base::max_listen_connections);
    port_ = acceptor_.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw Error("cannot listen on " + options_.bind_address + ":" + std::to_string(options_.port) + ": " +
                e.code().message());
  }
  spdlog::info("telemetry server listening on {}:{}", options_.bind_address, port_);

  started_ = true;
  running_ = true;
  acceptLoop();
  io_thread_ = std::thread([this] { ioc_.run(); });
  sim_thread_ = std::thread([this] { simLoop(); });
}

void ServerImpl::stop() {
  if (!started_) return;
  if (running_.exchange(false)) {
    sim_thread_.join();
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      for (const auto& s : sessions_) s->close();
      sessions_.clear();
      client_count_ = 0;
    });
    work_.reset();
    io_thread_.join();
    spdlog::info("telemetry server stopped");
  }
  std::lock_guard lock(lifecycle_mutex_);
  stopped_ = true;
  stopped_cv_.notify_all();
}

void ServerImpl::wait() {
  std::unique_lock lock(lifecycle_mutex_);
  stopped_cv_.wait(lock, [this] { return stopped_; });
}

void ServerImpl::acceptLoop() {
  acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this)->run();
    acceptLoop();
  });
}

void ServerImpl::addSession(const std::shared_ptr<WsSession>& s) {
  sessions_.insert(s);
  client_count_ = sessions_.size();
  spdlog::debug("client connected ({} total)", sessions_.size());
}

void ServerImpl::removeSession(const std::shared_ptr<WsSession>& s) {
  if (sessions_.erase(s)) {
    client_count_ = sessions_.size();
    spdlog::debug("client disconnected ({} left)", sessions_.size());
  }
}

void ServerImpl::publish(const Message& text) {
  net::post(ioc_, [this, text] {
    for (const auto& s : sessions_) s->offerFrame(text);
  });
}

void ServerImpl::simLoop() {
  const auto period = options_.realtime_factor > 0.0
                          ? std::chrono::duration_cast<Clock::duration>(
                                std::chrono::duration<double>(sim_->dt() / options_.realtime_factor))
                          : Clock::duration::zero();
  auto deadline = Clock::now();
  while (running_) {
    {
      std::lock_guard lock(command_mutex_);
      for (auto& cmd : pending_) sim_->enqueue(std::move(cmd));
      pending_.clear();
    }
    const auto t0 = Clock::now();
    std::optional<Simulation::Tick> tick;
    try {
      tick = sim_->tick();
    } catch (const Error& e) {
      spdlog::error("cycle {}: {}", sim_->cycle(), e.what());
      publish(makeMessage(errorReply(nullptr, std::string("simulation paused after error: ") + e.what())));
      sim_->enqueue({ControlCommand::Kind::Pause, {}, nullptr});
    }
    if (tick) {
      const WireFrame frame = makeWireFrame(tick->output.frame, tick->states, tick->metrics.time, digest_);
      if (options_.on_frame) options_.on_frame(frame);
      const auto busy_start = Clock::now();
      publish(makeMessage(toJson(frame)));
      const auto t1 = Clock::now();
      std::lock_guard lock(stats_mutex_);
      ++cycles_;
      busy_seconds_ += std::chrono::duration<double>((busy_start - t0) + (t1 - busy_start)).count();
    }
    cycle_ = sim_->cycle();
    paused_ = sim_->paused();

    if (!tick) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      deadline = Clock::now();
    } else if (period > Clock::duration::zero()) {
      deadline += period;
      const auto now = Clock::now();
      if (deadline < now) deadline = now;  // overran; do not try to catch up
      std::this_thread::sleep_until(deadline);
    }
  }
}

}  // namespace detail

TelemetryServer::TelemetryServer(Scenario scenario, ServerOptions options)
    : impl_(std::make_shared<detail::ServerImpl>(std::move(scenario), std::move(options))) {}

TelemetryServer::~TelemetryServer() { impl_->stop(); }

void TelemetryServer::start() { impl_->start(); }
void TelemetryServer::stop() { impl_->stop(); }
void TelemetryServer::wait() { impl_->wait(); }
unsigned short TelemetryServer::port() const { return impl_->port(); }
std::size_t TelemetryServer::clientCount() const { return impl_->clientCount(); }
LoopStats TelemetryServer::stats() const { return impl_->stats(); }

}  // namespace formplan
