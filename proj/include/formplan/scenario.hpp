#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "formplan/map_io.hpp"
#include "formplan/simulator.hpp"

namespace formplan {

/// Current scenario file schema version.
inline constexpr int kScenarioSchemaVersion = 1;

/// Parses a scenario document. Relative map paths resolve against `base_dir`.
/// Schema violations raise ScenarioError carrying the field path and line.
Scenario parseScenario(const std::string& text, const std::filesystem::path& base_dir);
Scenario loadScenario(const std::filesystem::path& path);

/// Serializes a scenario; `map_metadata` is written verbatim as the map
/// reference (normally a path relative to the scenario file).
std::string dumpScenario(const Scenario& scenario, const std::string& map_metadata);

/// A scenario plus the provenance needed to export it to disk.
struct ScenarioBundle {
  Scenario scenario;
  /// File stem for the exported map and scenario files.
  std::string stem;
};

/// The shipped experiments: sim-square-clutter, cone-split, lab-unstructured
/// and lab-corridor.
std::vector<ScenarioBundle> builtinScenarios();

/// Looks up a builtin by name; returns nullptr when unknown.
const ScenarioBundle* findBuiltin(const std::string& name);

/// Loads `ref` as a builtin name first, then as a scenario file path.
Scenario resolveScenario(const std::string& ref);

/// Writes `<dir>/<stem>.yaml`, `<dir>/maps/<stem>.pgm` and
/// `<dir>/maps/<stem>.map.yaml` for every builtin, plus the planning demo map
/// as `<dir>/maps/plan-demo.*`. Returns the scenario paths.
std::vector<std::filesystem::path> exportBuiltins(const std::filesystem::path& dir);

struct ThresholdCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
  std::string detail;
  /// Not evaluated: the run was cut short before the check could apply.
  bool skipped = false;
};

struct ScenarioReport {
  std::vector<ThresholdCheck> checks;
  double min_obstacle_distance = 0.0;
  double min_pair_distance = 0.0;
  bool passed() const;
};

/// Evaluates the scenario's shipped thresholds against a finished run. For a
/// truncated run only the clearance checks count; the rest are marked skipped.
ScenarioReport evaluateRun(const Scenario& scenario, const RunResult& result);

}  // namespace formplan
