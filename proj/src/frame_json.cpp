#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "formplan/wire.hpp"

namespace formplan {

using nlohmann::json;

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 readVec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json pose(const Pose2& p) { return json::array({p.position.x, p.position.y, p.heading}); }

Pose2 readPose(const json& j) { return {{j.at(0).get<double>(), j.at(1).get<double>()}, j.at(2).get<double>()}; }

json finiteOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double readFiniteOrInf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

std::vector<Vec2> decimatePath(std::span<const Vec2> path, std::size_t max_points) {
  if (path.size() <= max_points || max_points < 2) return {path.begin(), path.end()};
  std::vector<Vec2> out;
  out.reserve(max_points);
  const std::size_t last = path.size() - 1;
  for (std::size_t k = 0; k < max_points; ++k) out.push_back(path[k * last / (max_points - 1)]);
  return out;
}

WireFrame makeWireFrame(const PlannerFrame& frame, std::span<const RobotState> states, double time,
                        const std::string& map_digest, std::size_t max_path_points) {
  WireFrame w;
  w.cycle = frame.cycle;
  w.time = time;
  w.phase = std::string(phaseName(frame.phase));
  if (frame.leader) w.leader = *frame.leader + 1;
  w.formation_goal = frame.formation_goal;
  w.lookahead_point = frame.lookahead_point;
  w.events = frame.events;
  w.map_digest = map_digest;
  for (const auto& r : frame.robots) {
    WireRobot wr;
    wr.id = r.id + 1;
    wr.role = r.role + 1;
    for (const auto& s : states) {
      if (s.id == r.id) {
        wr.pose = s.pose;
        wr.velocity = s.velocity;
      }
    }
    wr.goal = r.goal;
    wr.path = decimatePath(r.path, max_path_points);
    wr.eta = r.eta;
    wr.v_des = r.v_des;
    wr.v_springs = r.v_connections;
    wr.v_avoid = r.v_avoid;
    wr.v_cmd = r.v_cmd;
    wr.omega = r.omega;
    wr.alpha = r.alpha;
    wr.binding_cap = std::string(speedCapName(r.binding_cap));
    wr.avoidance = r.avoidance_triggered;
    wr.no_path = r.no_path;
    wr.recovering = r.recovering;
    w.robots.push_back(std::move(wr));
  }
  for (const auto& c : frame.connections) {
    w.connections.push_back(
        {c.role_a + 1, c.role_b + 1, c.robot_a + 1, c.robot_b + 1, c.length, c.rest_length, c.spring, c.damping});
  }
  return w;
}

json toJson(const WireFrame& f) {
  json robots = json::array();
  for (const auto& r : f.robots) {
    json path = json::array();
    for (const auto& p : r.path) path.push_back(vec(p));
    robots.push_back({{"id", r.id},
                      {"role", r.role},
                      {"pose", pose(r.pose)},
                      {"velocity", vec(r.velocity)},
                      {"goal", r.goal ? vec(*r.goal) : json(nullptr)},
                      {"path", std::move(path)},
                      {"eta", finiteOrNull(r.eta)},
                      {"v_des", vec(r.v_des)},
                      {"v_springs", vec(r.v_springs)},
                      {"v_avoid", vec(r.v_avoid)},
                      {"v_cmd", vec(r.v_cmd)},
                      {"omega", r.omega},
                      {"alpha", r.alpha},
                      {"binding_cap", r.binding_cap},
                      {"avoidance", r.avoidance},
                      {"no_path", r.no_path},
                      {"recovering", r.recovering}});
  }
  json connections = json::array();
  for (const auto& c : f.connections) {
    connections.push_back({{"roles", {c.role_a, c.role_b}},
                           {"robots", {c.robot_a, c.robot_b}},
                           {"length", c.length},
                           {"rest_length", c.rest_length},
                           {"spring", c.spring},
                           {"damping", c.damping}});
  }
  return {{"type", "frame"},
          {"version", f.version},
          {"cycle", f.cycle},
          {"time", f.time},
          {"phase", f.phase},
          {"leader", f.leader ? json(*f.leader) : json(nullptr)},
          {"formation_goal", f.formation_goal ? pose(*f.formation_goal) : json(nullptr)},
          {"lookahead_point", f.lookahead_point ? vec(*f.lookahead_point) : json(nullptr)},
          {"robots", std::move(robots)},
          {"connections", std::move(connections)},
          {"events", f.events},
          {"map_digest", f.map_digest}};
}

WireFrame wireFrameFromJson(const json& j) {
  WireFrame f;
  f.version = j.at("version").get<int>();
  f.cycle = j.at("cycle").get<std::uint64_t>();
  f.time = j.at("time").get<double>();
  f.phase = j.at("phase").get<std::string>();
  if (!j.at("leader").is_null()) f.leader = j.at("leader").get<int>();
  if (!j.at("formation_goal").is_null()) f.formation_goal = readPose(j.at("formation_goal"));
  if (!j.at("lookahead_point").is_null()) f.lookahead_point = readVec(j.at("lookahead_point"));
  for (const auto& r : j.at("robots")) {
    WireRobot wr;
    wr.id = r.at("id").get<int>();
    wr.role = r.at("role").get<int>();
    wr.pose = readPose(r.at("pose"));
    wr.velocity = readVec(r.at("velocity"));
    if (!r.at("goal").is_null()) wr.goal = readVec(r.at("goal"));
    for (const auto& p : r.at("path")) wr.path.push_back(readVec(p));
    wr.eta = readFiniteOrInf(r.at("eta"));
    wr.v_des = readVec(r.at("v_des"));
    wr.v_springs = readVec(r.at("v_springs"));
    wr.v_avoid = readVec(r.at("v_avoid"));
    wr.v_cmd = readVec(r.at("v_cmd"));
    wr.omega = r.at("omega").get<double>();
    wr.alpha = r.at("alpha").get<double>();
    wr.binding_cap = r.at("binding_cap").get<std::string>();
    wr.avoidance = r.at("avoidance").get<bool>();
    wr.no_path = r.at("no_path").get<bool>();
    wr.recovering = r.at("recovering").get<bool>();
    f.robots.push_back(std::move(wr));
  }
  for (const auto& c : j.at("connections")) {
    WireConnection wc;
    wc.role_a = c.at("roles").at(0).get<int>();
    wc.role_b = c.at("roles").at(1).get<int>();
    wc.robot_a = c.at("robots").at(0).get<int>();
    wc.robot_b = c.at("robots").at(1).get<int>();
    wc.length = c.at("length").get<double>();
    wc.rest_length = c.at("rest_length").get<double>();
    wc.spring = c.at("spring").get<double>();
    wc.damping = c.at("damping").get<double>();
    f.connections.push_back(wc);
  }
  f.events = j.at("events").get<std::vector<std::string>>();
  f.map_digest = j.at("map_digest").get<std::string>();
  return f;
}

std::string mapDigest(const OccupancyGrid& grid) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= bytes[k];
      h *= 0x100000001b3ULL;
    }
  };
  const auto& g = grid.geometry();
  const std::int32_t dims[2] = {g.width(), g.height()};
  const double params[3] = {g.cellSize(), g.origin().x, g.origin().y};
  mix(dims, sizeof(dims));
  mix(params, sizeof(params));
  mix(grid.cells().data(), grid.cells().size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

json mapToJson(const OccupancyGrid& grid) {
  const auto& g = grid.geometry();
  std::string cells(grid.cells().size(), '0');
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (grid.cells()[k]) cells[k] = '1';
  }
  return {{"type", "map"},
          {"version", kWireVersion},
          {"width", g.width()},
          {"height", g.height()},
          {"cell_size", g.cellSize()},
          {"origin", vec(g.origin())},
          {"digest", mapDigest(grid)},
          {"cells", std::move(cells)}};
}

}  // namespace formplan
