#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "formplan/errors.hpp"
#include "formplan/fm2.hpp"
#include "formplan/scenario.hpp"
#include "formplan/telemetry_server.hpp"
#include "formplan/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace formplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitSchema = 2;

std::atomic<bool> g_interrupted{false};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void configureLogging() {
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("FORMPLAN_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void writeText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json summaryJson(const Scenario& scenario, const RunResult& result, const ScenarioReport& report) {
  json timeline = json::array();
  for (const auto& [t, phase] : result.phase_timeline) timeline.push_back({{"time", t}, {"phase", phaseName(phase)}});
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"value", number(c.value)},
                      {"limit", number(c.limit)},
                      {"passed", c.passed},
                      {"skipped", c.skipped},
                      {"detail", c.detail}});
  }
  json settle = json::array();
  for (double e : result.settle_error) settle.push_back(number(e));
  return {{"scenario", scenario.name},
          {"status", runStatusName(result.status)},
          {"error", result.error},
          {"cycles", result.metrics.rows.size()},
          {"completion_time", result.status == RunStatus::Completed ? json(result.completion_time) : json(nullptr)},
          {"min_obstacle_distance", number(report.min_obstacle_distance)},
          {"min_pair_distance", number(report.min_pair_distance)},
          {"leader_switches", result.leader_switches},
          {"phase_timeline", std::move(timeline)},
          {"settle_error", std::move(settle)},
          {"checks", std::move(checks)},
          {"passed", report.passed()}};
}

int cmdRun(const std::string& ref, fs::path out_dir, std::optional<std::uint64_t> until_cycle,
           std::optional<double> lag) {
  const Scenario scenario = resolveScenario(ref);
  if (out_dir.empty()) out_dir = fs::path("runs") / scenario.name;
  fs::create_directories(out_dir);
  const std::string digest = mapDigest(scenario.map);
  const double dt = scenario.planner.dt();

  std::ofstream frames(out_dir / "frames.ndjson", std::ios::binary);
  if (!frames) throw Error("cannot write " + (out_dir / "frames.ndjson").string());
  RunOptions options;
  options.until_cycle = until_cycle;
  options.lag = lag;
  options.on_frame = [&](const PlannerFrame& frame, std::span<const RobotState> states) {
    frames << toJson(makeWireFrame(frame, states, static_cast<double>(frame.cycle) * dt, digest)).dump() << '\n';
  };

  spdlog::info("running {} (cap {} s)", scenario.name, scenario.duration_cap);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult result = runScenario(scenario, options);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  frames.close();

  const ScenarioReport report = evaluateRun(scenario, result);
  writeText(out_dir / "metrics.csv", result.metrics.toCsv());
  const json summary = summaryJson(scenario, result, report);
  writeText(out_dir / "summary.json", summary.dump(2) + "\n");

  spdlog::info("{} after {} cycles ({:.2f} s wall)", runStatusName(result.status), result.metrics.rows.size(), wall);
  for (const auto& c : report.checks) {
    std::cout << (c.skipped ? "SKIP" : c.passed ? "PASS" : "FAIL") << "  " << c.name << "  value=" << formatNumber(c.value, 4)
              << "  limit=" << formatNumber(c.limit, 4) << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
  }
  std::cout << "wrote " << (out_dir / "metrics.csv").string() << ", frames.ndjson, summary.json\n";
  return summary.at("passed").get<bool>() ? kExitOk : kExitFailed;
}

int cmdValidate(const std::string& ref) {
  const Scenario scenario = resolveScenario(ref);
  const auto maps = MapBundle::build(scenario.map, scenario.planner);
  scenario.validate(*maps);
  std::cout << scenario.name << ": ok (" << scenario.formation.size() << " robots, "
            << scenario.map.geometry().width() << "x" << scenario.map.geometry().height() << " cells)\n";
  return kExitOk;
}

int cmdPlan(const fs::path& map_meta, const std::vector<double>& start, const std::vector<double>& goal,
            double safe_distance, double inflation, const fs::path& out_dir) {
  const OccupancyGrid grid = loadMap(map_meta);
  const Fm2Plan plan = planFm2(grid, {start[0], start[1]}, {goal[0], goal[1]}, safe_distance, inflation);
  const auto written = writeFm2Artifacts(plan, out_dir);
  const json summary = {{"eta", plan.path.eta},
                        {"length", plan.path.length()},
                        {"vertices", plan.path.vertices.size()},
                        {"min_clearance", number(plan.min_clearance)}};
  writeText(out_dir / "plan.json", summary.dump(2) + "\n");
  std::cout << summary.dump() << '\n';
  spdlog::info("wrote {} artifacts to {}", written.size() + 1, out_dir.string());
  return kExitOk;
}

int cmdServe(const std::string& ref, const std::string& bind, unsigned short port, double realtime) {
  ServerOptions options;
  options.bind_address = bind;
  options.port = port;
  options.realtime_factor = realtime;
  TelemetryServer server(resolveScenario(ref), options);
  server.start();
  std::cout << "listening on " << bind << ":" << server.port() << " (paused; send a goal, then resume)" << std::endl;
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

int cmdExport(const fs::path& dir) {
  for (const auto& p : exportBuiltins(dir)) std::cout << p.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configureLogging();
  CLI::App app{"Formation planning with Fast Marching Square: batch runs, path export and live telemetry"};
  app.require_subcommand(1);

  std::string scenario_ref;
  fs::path out_dir;
  std::uint64_t until_cycle = 0;
  double lag = 0.0;
  auto* run = app.add_subcommand("run", "Run a scenario file or builtin name and write metrics, frames and summary");
  run->add_option("scenario", scenario_ref, "Scenario file or builtin name")->required();
  run->add_option("--out", out_dir, "Output directory (default runs/<name>)");
  auto* until_opt = run->add_option("--until-cycle", until_cycle, "Stop after this many cycles");
  auto* lag_opt = run->add_option("--lag", lag, "Override the plant velocity lag (s)")->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  validate->add_option("scenario", scenario_ref, "Scenario file or builtin name")->required();

  fs::path map_meta;
  std::vector<double> start, goal;
  double safe_distance = 0.0;
  double inflation = 0.30;
  auto* plan = app.add_subcommand("plan", "Plan one path and export every intermediate field");
  plan->add_option("map", map_meta, "Map metadata file")->required()->check(CLI::ExistingFile);
  plan->add_option("--start", start, "Start position X,Y")->required()->delimiter(',')->expected(2);
  plan->add_option("--goal", goal, "Goal position X,Y")->required()->delimiter(',')->expected(2);
  plan->add_option("--safe-dist", safe_distance, "Velocity map saturation distance (m)")
      ->required()
      ->check(CLI::PositiveNumber);
  plan->add_option("--inflation", inflation, "Obstacle inflation radius (m)")->capture_default_str()->check(CLI::NonNegativeNumber);
  plan->add_option("--out", out_dir, "Output directory (default plan)");

  std::string bind = "127.0.0.1";
  unsigned short port = 8765;
  double realtime = 1.0;
  auto* serve = app.add_subcommand("serve", "Start the simulator paused behind the telemetry server");
  serve->add_option("scenario", scenario_ref, "Scenario file or builtin name")->required();
  serve->add_option("--port", port, "TCP port (0 picks a free one)")->capture_default_str();
  serve->add_option("--bind", bind, "Bind address")->capture_default_str();
  serve->add_option("--realtime", realtime, "Simulated seconds per wall second; 0 runs unpaced")->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  fs::path export_dir;
  auto* export_cmd = app.add_subcommand("export-scenarios", "Write the builtin scenarios and maps to a directory");
  export_cmd->add_option("dir", export_dir, "Destination directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmdRun(scenario_ref, out_dir, *until_opt ? std::optional(until_cycle) : std::nullopt,
                    *lag_opt ? std::optional(lag) : std::nullopt);
    }
    if (*validate) return cmdValidate(scenario_ref);
    if (*plan) return cmdPlan(map_meta, start, goal, safe_distance, inflation, out_dir.empty() ? "plan" : out_dir);
    if (*serve) return cmdServe(scenario_ref, bind, port, realtime);
    if (*export_cmd) return cmdExport(export_dir);
  } catch (const ScenarioError& e) {
    spdlog::error("scenario error: {}", e.what());
    return kExitSchema;
  } catch (const MapError& e) {
    spdlog::error("map error: {}", e.what());
    return kExitSchema;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailed;
  }
  return kExitFailed;
}
