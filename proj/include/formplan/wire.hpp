#pragma once

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "formplan/simulator.hpp"

namespace formplan {

/// Version of the JSON record schema shared by frame traces and telemetry.
inline constexpr int kWireVersion = 1;
inline constexpr std::size_t kMaxPathPoints = 200;

/// Per-robot slice of a wire frame. Robot ids and roles are 1-based on the wire.
struct WireRobot {
  int id = 1;
  int role = 1;
  Pose2 pose;
  Vec2 velocity;
  std::optional<Vec2> goal;
  std::vector<Vec2> path;
  double eta = 0.0;  // infinity is encoded as null
  Vec2 v_des;
  Vec2 v_springs;
  Vec2 v_avoid;
  Vec2 v_cmd;
  double omega = 0.0;
  double alpha = 0.0;
  std::string binding_cap;
  bool avoidance = false;
  bool no_path = false;
  bool recovering = false;
  bool operator==(const WireRobot&) const = default;
};

struct WireConnection {
  int role_a = 1;
  int role_b = 2;
  int robot_a = 1;
  int robot_b = 2;
  double length = 0.0;
  double rest_length = 0.0;
  double spring = 0.0;
  double damping = 0.0;
  bool operator==(const WireConnection&) const = default;
};

/// One cycle as streamed to clients and written to frame traces.
struct WireFrame {
  int version = kWireVersion;
  std::uint64_t cycle = 0;
  double time = 0.0;
  std::string phase;
  std::optional<int> leader;
  std::optional<Pose2> formation_goal;
  std::optional<Vec2> lookahead_point;
  std::vector<WireRobot> robots;
  std::vector<WireConnection> connections;
  std::vector<std::string> events;
  std::string map_digest;
  bool operator==(const WireFrame&) const = default;
};

/// Keeps at most `max_points` vertices, always including both ends.
std::vector<Vec2> decimatePath(std::span<const Vec2> path, std::size_t max_points = kMaxPathPoints);

WireFrame makeWireFrame(const PlannerFrame& frame, std::span<const RobotState> states, double time,
                        const std::string& map_digest, std::size_t max_path_points = kMaxPathPoints);

nlohmann::json toJson(const WireFrame& frame);
/// Throws nlohmann::json::exception on a malformed record.
WireFrame wireFrameFromJson(const nlohmann::json& j);

/// Stable 64-bit FNV-1a digest (hex) of the grid geometry and cells.
std::string mapDigest(const OccupancyGrid& grid);

/// Occupancy grid and geometry; cells row-major from the bottom row, as a
/// string of '0'/'1' characters.
nlohmann::json mapToJson(const OccupancyGrid& grid);

}  // namespace formplan
