#include "formplan/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "formplan/errors.hpp"
#include "formplan/fm2.hpp"

namespace formplan {
namespace fs = std::filesystem;

namespace {

int lineOf(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

[[noreturn]] void fail(const std::string& field, const YAML::Node& node, const std::string& message) {
  throw ScenarioError(field, lineOf(node), message);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void requireMap(const YAML::Node& node, const std::string& field) {
  if (!node.IsMap()) fail(field, node, "expected a mapping");
}

void rejectUnknownKeys(const YAML::Node& node, const std::string& field, std::initializer_list<const char*> allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(join(field, key), kv.first, "unknown key");
    }
  }
}

double asDouble(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(field, node, "expected a number");
  try {
    const double v = node.as<double>();
    if (!std::isfinite(v)) fail(field, node, "must be finite");
    return v;
  } catch (const YAML::BadConversion&) {
    fail(field, node, "expected a number, got '" + node.Scalar() + "'");
  }
}

void readDouble(const YAML::Node& parent, const char* key, const std::string& prefix, double& out) {
  if (const auto node = parent[key]) out = asDouble(node, join(prefix, key));
}

double requireDouble(const YAML::Node& parent, const char* key, const std::string& prefix) {
  const auto node = parent[key];
  if (!node) fail(join(prefix, key), parent, "missing required key");
  return asDouble(node, join(prefix, key));
}

std::string asString(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(field, node, "expected a string");
  return node.Scalar();
}

std::vector<double> asNumbers(const YAML::Node& node, const std::string& field, std::size_t count) {
  if (!node.IsSequence() || node.size() != count) {
    fail(field, node, "expected a list of " + std::to_string(count) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(asDouble(node[k], field + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Vec2 asVec2(const YAML::Node& node, const std::string& field) {
  const auto v = asNumbers(node, field, 2);
  return {v[0], v[1]};
}

Pose2 asPose(const YAML::Node& node, const std::string& field) {
  const auto v = asNumbers(node, field, 3);
  return {{v[0], v[1]}, v[2]};
}

void readLimits(const YAML::Node& node, const std::string& field, RobotLimits& limits) {
  requireMap(node, field);
  rejectUnknownKeys(node, field, {"v_max_x", "v_max_y", "v_min", "d_slowdown"});
  readDouble(node, "v_max_x", field, limits.v_max_x);
  readDouble(node, "v_max_y", field, limits.v_max_y);
  readDouble(node, "v_min", field, limits.v_min);
  readDouble(node, "d_slowdown", field, limits.d_slowdown);
}

void readPlanner(const YAML::Node& node, PlannerConfig& cfg) {
  const std::string f = "planner";
  requireMap(node, f);
  rejectUnknownKeys(node, f,
                    {"rate", "lookahead", "d_switch", "w_min_partial", "w_min_avoid", "safe_distance_a",
                     "safe_distance_b", "inflation_radius", "goal_tolerance", "yaw_gain", "max_yaw_rate",
                     "yaw_deadband", "limits"});
  readDouble(node, "rate", f, cfg.rate);
  readDouble(node, "lookahead", f, cfg.lookahead);
  readDouble(node, "d_switch", f, cfg.d_switch);
  readDouble(node, "w_min_partial", f, cfg.w_min_partial);
  readDouble(node, "w_min_avoid", f, cfg.w_min_avoid);
  readDouble(node, "safe_distance_a", f, cfg.safe_distance_a);
  readDouble(node, "safe_distance_b", f, cfg.safe_distance_b);
  readDouble(node, "inflation_radius", f, cfg.inflation_radius);
  readDouble(node, "goal_tolerance", f, cfg.goal_tolerance);
  readDouble(node, "yaw_gain", f, cfg.yaw_gain);
  readDouble(node, "max_yaw_rate", f, cfg.max_yaw_rate);
  readDouble(node, "yaw_deadband", f, cfg.yaw_deadband);
  if (const auto limits = node["limits"]) readLimits(limits, "planner.limits", cfg.limits);
}

int readRole(const YAML::Node& node, const std::string& field, int n) {
  const double v = asDouble(node, field);
  if (v != std::floor(v) || v < 1 || v > n) fail(field, node, "role index must be an integer in [1, " + std::to_string(n) + "]");
  return static_cast<int>(v) - 1;
}

FormationSpec readFormation(const YAML::Node& node) {
  const std::string f = "formation";
  requireMap(node, f);
  rejectUnknownKeys(node, f, {"base_points", "connections"});
  FormationSpec spec;
  const auto points = node["base_points"];
  if (!points || !points.IsSequence()) fail("formation.base_points", points ? points : node, "expected a list of [x, y]");
  for (std::size_t k = 0; k < points.size(); ++k) {
    spec.base_points.push_back(asVec2(points[k], "formation.base_points[" + std::to_string(k) + "]"));
  }
  const int n = spec.size();
  const auto conns = node["connections"];
  if (conns) {
    if (!conns.IsSequence()) fail("formation.connections", conns, "expected a list");
    for (std::size_t k = 0; k < conns.size(); ++k) {
      const auto c = conns[k];
      const std::string cf = "formation.connections[" + std::to_string(k) + "]";
      requireMap(c, cf);
      rejectUnknownKeys(c, cf, {"roles", "rest_length", "k_rep", "k_att", "max_att", "b_att", "b_rep"});
      const auto roles = c["roles"];
      if (!roles || !roles.IsSequence() || roles.size() != 2) fail(cf + ".roles", roles ? roles : c, "expected [a, b]");
      ConnectionSpec conn;
      conn.role_a = readRole(roles[0], cf + ".roles[0]", n);
      conn.role_b = readRole(roles[1], cf + ".roles[1]", n);
      conn.rest_length = requireDouble(c, "rest_length", cf);
      conn.k_rep = requireDouble(c, "k_rep", cf);
      conn.k_att = requireDouble(c, "k_att", cf);
      conn.max_att = requireDouble(c, "max_att", cf);
      conn.b_att = requireDouble(c, "b_att", cf);
      conn.b_rep = requireDouble(c, "b_rep", cf);
      spec.connections.push_back(conn);
    }
  }
  try {
    spec.validate();
  } catch (const ScenarioError& e) {
    throw ScenarioError(e.field(), lineOf(node), e.message());
  }
  return spec;
}

OccupancyGrid readMap(const YAML::Node& node, const fs::path& base_dir) {
  try {
    if (node.IsScalar()) {
      const fs::path meta = node.Scalar();
      return loadMap(meta.is_absolute() ? meta : base_dir / meta);
    }
    requireMap(node, "map");
    rejectUnknownKeys(node, "map", {"metadata"});
    const auto meta = node["metadata"];
    if (!meta) fail("map.metadata", node, "missing required key");
    const fs::path p = asString(meta, "map.metadata");
    return loadMap(p.is_absolute() ? p : base_dir / p);
  } catch (const MapError& e) {
    fail("map", node, e.what());
  }
}

ScheduledGoal readGoal(const YAML::Node& node, const std::string& field) {
  requireMap(node, field);
  rejectUnknownKeys(node, field, {"at", "on_idle", "pose"});
  ScheduledGoal g;
  const auto at = node["at"];
  const auto idle = node["on_idle"];
  if (at && idle) fail(field, node, "'at' and 'on_idle' are mutually exclusive");
  if (at) {
    g.trigger = ScheduledGoal::Trigger::AtTime;
    g.time = asDouble(at, field + ".at");
    if (g.time < 0.0) fail(field + ".at", at, "must be non-negative");
  } else if (idle) {
    if (!idle.IsScalar() || idle.Scalar() != "true") fail(field + ".on_idle", idle, "must be true when present");
    g.trigger = ScheduledGoal::Trigger::OnIdle;
  } else {
    fail(field, node, "a goal needs a trigger ('at' or 'on_idle')");
  }
  const auto pose = node["pose"];
  if (!pose) fail(field + ".pose", node, "missing required key");
  g.goal = asPose(pose, field + ".pose");
  return g;
}

void readThresholds(const YAML::Node& node, Thresholds& t) {
  const std::string f = "thresholds";
  requireMap(node, f);
  rejectUnknownKeys(node, f,
                    {"min_obstacle_clearance", "min_pair_distance", "settle_tolerance", "max_completion_time",
                     "constriction", "rest_length", "shape_tolerance", "recovery_time"});
  readDouble(node, "min_obstacle_clearance", f, t.min_obstacle_clearance);
  readDouble(node, "min_pair_distance", f, t.min_pair_distance);
  readDouble(node, "settle_tolerance", f, t.settle_tolerance);
  readDouble(node, "max_completion_time", f, t.max_completion_time);
  readDouble(node, "rest_length", f, t.rest_length);
  readDouble(node, "shape_tolerance", f, t.shape_tolerance);
  readDouble(node, "recovery_time", f, t.recovery_time);
  if (const auto c = node["constriction"]) {
    requireMap(c, "thresholds.constriction");
    rejectUnknownKeys(c, "thresholds.constriction", {"lo", "hi"});
    Region r;
    if (!c["lo"] || !c["hi"]) fail("thresholds.constriction", c, "needs 'lo' and 'hi' corners");
    r.lo = asVec2(c["lo"], "thresholds.constriction.lo");
    r.hi = asVec2(c["hi"], "thresholds.constriction.hi");
    if (!(r.lo.x < r.hi.x && r.lo.y < r.hi.y)) fail("thresholds.constriction", c, "'lo' must be below and left of 'hi'");
    if (!(t.rest_length > 0.0)) fail("thresholds.rest_length", node, "required (positive) with a constriction");
    t.constriction = r;
  }
}

// Shortest text that parses back to the same double.
void writeNumber(std::ostream& out, double v) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof(buf), v).ptr;
  out.write(buf, end - buf);
}

void writeVec(std::ostream& out, std::initializer_list<double> values) {
  out << '[';
  bool first = true;
  for (double v : values) {
    if (!first) out << ", ";
    writeNumber(out, v);
    first = false;
  }
  out << ']';
}

void writeLimits(std::ostream& out, const RobotLimits& l, const std::string& indent) {
  out << indent << "v_max_x: ";
  writeNumber(out, l.v_max_x);
  out << '\n' << indent << "v_max_y: ";
  writeNumber(out, l.v_max_y);
  out << '\n' << indent << "v_min: ";
  writeNumber(out, l.v_min);
  out << '\n' << indent << "d_slowdown: ";
  writeNumber(out, l.d_slowdown);
  out << '\n';
}

}  // namespace

Scenario parseScenario(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ScenarioError("", 1, "scenario must be a mapping");
  rejectUnknownKeys(root, "",
                    {"version", "name", "description", "map", "formation", "planner", "robots", "goals",
                     "simulation", "thresholds"});

  const auto version = root["version"];
  if (!version) fail("version", root, "missing required key");
  if (asDouble(version, "version") != kScenarioSchemaVersion) {
    fail("version", version, "unsupported schema version (expected " + std::to_string(kScenarioSchemaVersion) + ")");
  }

  Scenario s;
  if (const auto n = root["name"]) s.name = asString(n, "name");
  if (const auto d = root["description"]) s.description = asString(d, "description");

  if (!root["map"]) fail("map", root, "missing required key");
  if (!root["formation"]) fail("formation", root, "missing required key");
  if (!root["robots"]) fail("robots", root, "missing required key");
  if (!root["goals"]) fail("goals", root, "missing required key");

  s.formation = readFormation(root["formation"]);
  if (const auto p = root["planner"]) readPlanner(p, s.planner);

  const auto robots = root["robots"];
  if (!robots.IsSequence()) fail("robots", robots, "expected a list");
  std::vector<std::optional<RobotLimits>> overrides;
  for (std::size_t k = 0; k < robots.size(); ++k) {
    const std::string f = "robots[" + std::to_string(k) + "]";
    const auto r = robots[k];
    requireMap(r, f);
    rejectUnknownKeys(r, f, {"pose", "limits"});
    if (!r["pose"]) fail(f + ".pose", r, "missing required key");
    s.initial_poses.push_back(asPose(r["pose"], f + ".pose"));
    std::optional<RobotLimits> limits;
    if (const auto l = r["limits"]) {
      limits = s.planner.limits;
      readLimits(l, f + ".limits", *limits);
    }
    overrides.push_back(limits);
  }
  if (std::any_of(overrides.begin(), overrides.end(), [](const auto& o) { return o.has_value(); })) {
    for (const auto& o : overrides) s.planner.robot_limits.push_back(o.value_or(s.planner.limits));
  }
  if (static_cast<int>(s.initial_poses.size()) != s.formation.size()) {
    fail("robots", robots,
         "expected " + std::to_string(s.formation.size()) + " robots (one per formation role), got " +
             std::to_string(s.initial_poses.size()));
  }

  const auto goals = root["goals"];
  if (!goals.IsSequence() || goals.size() == 0) fail("goals", goals, "expected a non-empty list");
  for (std::size_t k = 0; k < goals.size(); ++k) {
    s.schedule.push_back(readGoal(goals[k], "goals[" + std::to_string(k) + "]"));
  }

  if (const auto sim = root["simulation"]) {
    requireMap(sim, "simulation");
    rejectUnknownKeys(sim, "simulation", {"duration_cap", "seed", "jitter", "lag"});
    readDouble(sim, "duration_cap", "simulation", s.duration_cap);
    readDouble(sim, "jitter", "simulation", s.jitter);
    readDouble(sim, "lag", "simulation", s.lag);
    if (!(s.duration_cap > 0.0)) fail("simulation.duration_cap", sim["duration_cap"], "must be positive");
    if (!(s.jitter >= 0.0)) fail("simulation.jitter", sim["jitter"], "must be non-negative");
    if (!(s.lag >= 0.0)) fail("simulation.lag", sim["lag"], "must be non-negative");
    if (const auto seed = sim["seed"]) {
      try {
        s.seed = seed.as<std::uint64_t>();
      } catch (const YAML::BadConversion&) {
        fail("simulation.seed", seed, "expected a non-negative integer");
      }
    }
  }
  if (const auto t = root["thresholds"]) readThresholds(t, s.thresholds);

  try {
    s.planner.validate();
  } catch (const ScenarioError& e) {
    const auto node = root["planner"];
    throw ScenarioError(e.field(), node ? lineOf(node) : 0, e.message());
  }
  s.map = readMap(root["map"], base_dir);
  return s;
}

Scenario loadScenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", 0, "cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseScenario(buffer.str(), path.parent_path());
}

std::string dumpScenario(const Scenario& s, const std::string& map_metadata) {
  std::ostringstream out;
  out << "version: " << kScenarioSchemaVersion << '\n';
  out << "name: " << s.name << '\n';
  if (!s.description.empty()) out << "description: \"" << s.description << "\"\n";
  out << "map: " << map_metadata << "\n\n";

  out << "formation:\n  base_points:\n";
  for (const auto& p : s.formation.base_points) {
    out << "    - ";
    writeVec(out, {p.x, p.y});
    out << '\n';
  }
  out << "  connections:\n";
  for (const auto& c : s.formation.connections) {
    out << "    - {roles: [" << c.role_a + 1 << ", " << c.role_b + 1 << "], rest_length: ";
    writeNumber(out, c.rest_length);
    out << ", k_rep: ";
    writeNumber(out, c.k_rep);
    out << ", k_att: ";
    writeNumber(out, c.k_att);
    out << ", max_att: ";
    writeNumber(out, c.max_att);
    out << ", b_att: ";
    writeNumber(out, c.b_att);
    out << ", b_rep: ";
    writeNumber(out, c.b_rep);
    out << "}\n";
  }

  const PlannerConfig& p = s.planner;
  out << "\nplanner:\n";
  const std::pair<const char*, double> scalars[] = {
      {"rate", p.rate},
      {"lookahead", p.lookahead},
      {"d_switch", p.d_switch},
      {"w_min_partial", p.w_min_partial},
      {"w_min_avoid", p.w_min_avoid},
      {"safe_distance_a", p.safe_distance_a},
      {"safe_distance_b", p.safe_distance_b},
      {"inflation_radius", p.inflation_radius},
      {"goal_tolerance", p.goal_tolerance},
      {"yaw_gain", p.yaw_gain},
      {"max_yaw_rate", p.max_yaw_rate},
      {"yaw_deadband", p.yaw_deadband},
  };
  for (const auto& [key, value] : scalars) {
    out << "  " << key << ": ";
    writeNumber(out, value);
    out << '\n';
  }
  out << "  limits:\n";
  writeLimits(out, p.limits, "    ");

  out << "\nrobots:\n";
  for (std::size_t k = 0; k < s.initial_poses.size(); ++k) {
    const auto& pose = s.initial_poses[k];
    out << "  - pose: ";
    writeVec(out, {pose.position.x, pose.position.y, pose.heading});
    out << '\n';
    if (k < p.robot_limits.size()) {
      out << "    limits:\n";
      writeLimits(out, p.robot_limits[k], "      ");
    }
  }

  out << "\ngoals:\n";
  for (const auto& g : s.schedule) {
    if (g.trigger == ScheduledGoal::Trigger::AtTime) {
      out << "  - at: ";
      writeNumber(out, g.time);
      out << '\n';
    } else {
      out << "  - on_idle: true\n";
    }
    out << "    pose: ";
    writeVec(out, {g.goal.position.x, g.goal.position.y, g.goal.heading});
    out << '\n';
  }

  out << "\nsimulation:\n  duration_cap: ";
  writeNumber(out, s.duration_cap);
  out << "\n  seed: " << s.seed << "\n  jitter: ";
  writeNumber(out, s.jitter);
  out << "\n  lag: ";
  writeNumber(out, s.lag);
  out << '\n';

  const Thresholds& t = s.thresholds;
  out << "\nthresholds:\n";
  const std::pair<const char*, double> limits[] = {
      {"min_obstacle_clearance", t.min_obstacle_clearance},
      {"min_pair_distance", t.min_pair_distance},
      {"settle_tolerance", t.settle_tolerance},
      {"max_completion_time", t.max_completion_time},
  };
  for (const auto& [key, value] : limits) {
    out << "  " << key << ": ";
    writeNumber(out, value);
    out << '\n';
  }
  if (t.constriction) {
    out << "  constriction: {lo: ";
    writeVec(out, {t.constriction->lo.x, t.constriction->lo.y});
    out << ", hi: ";
    writeVec(out, {t.constriction->hi.x, t.constriction->hi.y});
    out << "}\n  rest_length: ";
    writeNumber(out, t.rest_length);
    out << "\n  shape_tolerance: ";
    writeNumber(out, t.shape_tolerance);
    out << "\n  recovery_time: ";
    writeNumber(out, t.recovery_time);
    out << '\n';
  }
  return out.str();
}

Scenario resolveScenario(const std::string& ref) {
  if (const auto* b = findBuiltin(ref)) return b->scenario;
  if (!fs::exists(ref)) throw ScenarioError("", 0, "no builtin scenario or file named '" + ref + "'");
  return loadScenario(ref);
}

std::vector<fs::path> exportBuiltins(const fs::path& dir) {
  fs::create_directories(dir / "maps");
  std::vector<fs::path> written;
  for (const auto& b : builtinScenarios()) {
    const fs::path image = dir / "maps" / (b.stem + ".pgm");
    const fs::path meta = dir / "maps" / (b.stem + ".map.yaml");
    saveMap(b.scenario.map, image, meta);
    const fs::path scenario = dir / (b.stem + ".yaml");
    std::ofstream out(scenario);
    if (!out) throw Error("cannot write " + scenario.string());
    out << dumpScenario(b.scenario, "maps/" + b.stem + ".map.yaml");
    written.push_back(scenario);
  }
  saveMap(planningDemoMap(), dir / "maps" / "plan-demo.pgm", dir / "maps" / "plan-demo.map.yaml");
  return written;
}

// ---------------------------------------------------------------------------

bool ScenarioReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ThresholdCheck& c) { return c.passed || c.skipped; });
}

namespace {

// Largest relative deviation of any pairwise distance from `rest`.
double shapeError(const MetricsRow& row, double rest) {
  double worst = 0.0;
  for (double d : row.pair_distance) worst = std::max(worst, std::abs(d - rest) / rest);
  return worst;
}

bool anyInside(const MetricsRow& row, const Region& region) {
  return std::any_of(row.poses.begin(), row.poses.end(), [&](const Pose2& p) { return region.contains(p.position); });
}

}  // namespace

ScenarioReport evaluateRun(const Scenario& scenario, const RunResult& result) {
  const Thresholds& t = scenario.thresholds;
  ScenarioReport report;
  const auto& rows = result.metrics.rows;

  report.min_obstacle_distance = ScalarField::kInfinity;
  report.min_pair_distance = ScalarField::kInfinity;
  for (const auto& r : rows) {
    for (double d : r.obstacle_distance) report.min_obstacle_distance = std::min(report.min_obstacle_distance, d);
    for (double d : r.pair_distance) report.min_pair_distance = std::min(report.min_pair_distance, d);
  }

  report.checks.push_back({"run_status", 0.0, 0.0, result.status == RunStatus::Completed,
                           std::string(runStatusName(result.status)) +
                               (result.error.empty() ? "" : ": " + result.error)});
  report.checks.push_back({"min_obstacle_clearance", report.min_obstacle_distance, t.min_obstacle_clearance,
                           report.min_obstacle_distance > t.min_obstacle_clearance, "strictly greater"});
  report.checks.push_back({"min_pair_distance", report.min_pair_distance, t.min_pair_distance,
                           report.min_pair_distance > t.min_pair_distance, "strictly greater"});

  const bool settled_known = !result.settle_error.empty();
  const double settle = settled_known
                            ? *std::max_element(result.settle_error.begin(), result.settle_error.end())
                            : ScalarField::kInfinity;
  report.checks.push_back({"settle_error", settle, t.settle_tolerance, settled_known && settle <= t.settle_tolerance,
                           settled_known ? "max distance to final goal" : "planner never reached Inactive"});

  const double time_limit = t.max_completion_time > 0.0 ? t.max_completion_time : scenario.duration_cap;
  const bool completed = result.status == RunStatus::Completed;
  report.checks.push_back({"completion_time", completed ? result.completion_time : ScalarField::kInfinity, time_limit,
                           completed && result.completion_time <= time_limit, ""});

  if (t.constriction) {
    std::optional<std::size_t> first_in;
    std::optional<std::size_t> last_in;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (anyInside(rows[k], *t.constriction)) {
        if (!first_in) first_in = k;
        last_in = k;
      }
    }
    if (!first_in) {
      report.checks.push_back({"shape_before_constriction", 0.0, t.shape_tolerance, false,
                               "no robot ever entered the constriction"});
      report.checks.push_back({"shape_recovery", 0.0, t.recovery_time, false, "no constriction passage"});
    } else {
      double before = *first_in > 0 ? 0.0 : ScalarField::kInfinity;
      for (std::size_t k = 0; k < *first_in; ++k) before = std::max(before, shapeError(rows[k], t.rest_length));
      report.checks.push_back({"shape_before_constriction", before, t.shape_tolerance, before <= t.shape_tolerance,
                               "worst relative pair-distance error before entry"});
      const double exit_time = rows[*last_in].time;
      std::optional<double> recovered_at;
      for (std::size_t k = *last_in + 1; k < rows.size(); ++k) {
        if (shapeError(rows[k], t.rest_length) <= t.shape_tolerance) {
          recovered_at = rows[k].time;
          break;
        }
      }
      const double delay = recovered_at ? *recovered_at - exit_time : ScalarField::kInfinity;
      report.checks.push_back({"shape_recovery", delay, t.recovery_time, delay <= t.recovery_time,
                               "seconds from exit until pair distances are back within tolerance"});
    }
  }
  if (result.status == RunStatus::Truncated) {
    for (auto& c : report.checks) {
      if (c.name != "min_obstacle_clearance" && c.name != "min_pair_distance") c.skipped = true;
    }
  }
  return report;
}

}  // namespace formplan
