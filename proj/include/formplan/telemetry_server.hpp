#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "formplan/scenario.hpp"
#include "formplan/wire.hpp"

namespace formplan {

namespace detail {
class ServerImpl;
}

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  /// 0 picks an ephemeral port; see TelemetryServer::port().
  unsigned short port = 0;
  /// Simulated seconds per wall-clock second. 0 runs cycles back to back.
  double realtime_factor = 1.0;
  bool start_paused = true;
  /// Called on the simulation thread with every frame, before it is broadcast.
  std::function<void(const WireFrame&)> on_frame;
};

struct LoopStats {
  std::uint64_t cycles = 0;
  /// Mean busy time per cycle, from the start of the tick until the frame is
  /// handed to the network thread. Pacing sleeps are not counted.
  double mean_cycle_seconds = 0.0;
};

/// Live simulation with a websocket/HTTP front end on one port.
///
/// * `GET /map` returns the occupancy grid as JSON.
/// * A websocket upgrade on any path opens the message stream: the server
///   sends `hello`, then one `frame` per cycle (latest-only per client, so a
///   slow reader sees gaps but never stalls the loop), and answers every
///   client command with `ack`, `reject` or `error`.
///
/// The scenario's goal schedule is ignored; goals come from clients.
class TelemetryServer {
 public:
  TelemetryServer(Scenario scenario, ServerOptions options = {});
  ~TelemetryServer();
  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  /// Binds and starts the network and simulation threads. Throws Error when
  /// the port cannot be bound.
  void start();
  /// Stops both threads and closes every connection. Idempotent.
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  unsigned short port() const;
  std::size_t clientCount() const;
  LoopStats stats() const;

 private:
  std::shared_ptr<detail::ServerImpl> impl_;
};

}  // namespace formplan
