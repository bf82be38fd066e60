#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "formplan/errors.hpp"
#include "formplan/fm2.hpp"
#include "formplan/scenario.hpp"
#include "formplan/wire.hpp"

namespace py = pybind11;
using namespace formplan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Arrays are indexed [j, i] with row 0 at the bottom of the map (world -y).
GridGeometry geometryOf(const py::array& a, double cell_size, Vec2 origin) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  return GridGeometry(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), cell_size, origin);
}

ScalarField toField(const Array& a, double cell_size, Vec2 origin) {
  ScalarField f(geometryOf(a, cell_size, origin), 0.0);
  std::copy(a.data(), a.data() + a.size(), f.values().begin());
  return f;
}

OccupancyGrid toGrid(const Array& a, double cell_size, Vec2 origin) {
  OccupancyGrid g(geometryOf(a, cell_size, origin));
  for (py::ssize_t k = 0; k < a.size(); ++k) {
    if (a.data()[k] != 0.0) g.setOccupied(g.geometry().cellAt(static_cast<std::size_t>(k)));
  }
  return g;
}

Array toArray(const ScalarField& f) {
  Array out({f.geometry().height(), f.geometry().width()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

Array toArray(const OccupancyGrid& g) {
  Array out({g.geometry().height(), g.geometry().width()});
  std::copy(g.cells().begin(), g.cells().end(), out.mutable_data());
  return out;
}

Array points(const std::vector<Vec2>& v) {
  Array out({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < v.size(); ++k) {
    m(k, 0) = v[k].x;
    m(k, 1) = v[k].y;
  }
  return out;
}

std::vector<Vec2> toPoints(const std::vector<std::pair<double, double>>& v) {
  std::vector<Vec2> out;
  for (const auto& [x, y] : v) out.push_back({x, y});
  return out;
}

py::dict pathDict(const PlannedPath& p) {
  py::dict d;
  d["vertices"] = points(p.vertices);
  d["vertex_eta"] = p.vertex_eta;
  d["eta"] = p.eta;
  d["length"] = p.length();
  return d;
}

py::dict runDict(const Scenario& scenario, const RunResult& result) {
  const ScenarioReport report = evaluateRun(scenario, result);
  py::list checks;
  for (const auto& c : report.checks) {
    py::dict d;
    d["name"] = c.name;
    d["value"] = c.value;
    d["limit"] = c.limit;
    d["passed"] = c.passed;
    d["skipped"] = c.skipped;
    checks.append(d);
  }
  py::dict d;
  d["scenario"] = scenario.name;
  d["status"] = std::string(runStatusName(result.status));
  d["error"] = result.error;
  d["cycles"] = result.metrics.rows.size();
  d["completion_time"] = result.completion_time;
  d["leader_switches"] = result.leader_switches;
  d["settle_error"] = result.settle_error;
  d["min_obstacle_distance"] = report.min_obstacle_distance;
  d["min_pair_distance"] = report.min_pair_distance;
  d["checks"] = checks;
  d["passed"] = report.passed();
  d["metrics_csv"] = result.metrics.toCsv();
  return d;
}

}  // namespace

PYBIND11_MODULE(_formplan, m) {
  m.doc() = "Fast Marching Square formation planner: solvers, per-stage operators and scenario runs";

  auto base = py::register_exception<Error>(m, "FormplanError", PyExc_RuntimeError);
  py::register_exception<MapError>(m, "MapError", base.ptr());
  py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());
  py::register_exception<PlanningError>(m, "PlanningError", base.ptr());

  m.def(
      "solve_eikonal",
      [](const Array& speed, double cell_size, const std::vector<std::pair<int, int>>& sources) {
        const ScalarField f = toField(speed, cell_size, {});
        std::vector<CellIndex> src;
        for (const auto& [i, j] : sources) src.push_back({i, j});
        py::gil_scoped_release release;
        ArrivalTimeField out = solveEikonal(f, src);
        py::gil_scoped_acquire acquire;
        return toArray(out.times);
      },
      py::arg("speed"), py::arg("cell_size"), py::arg("sources"),
      "Arrival times from cell sources (i, j); unreached cells are inf.");

  m.def(
      "distance_field",
      [](const Array& occupancy, double cell_size) {
        return toArray(distanceField(toGrid(occupancy, cell_size, {})).times);
      },
      py::arg("occupancy"), py::arg("cell_size"));

  m.def(
      "inflate",
      [](const Array& occupancy, double cell_size, double radius) {
        return toArray(inflate(toGrid(occupancy, cell_size, {}), radius));
      },
      py::arg("occupancy"), py::arg("cell_size"), py::arg("radius"));

  m.def(
      "velocity_map",
      [](const Array& occupancy, double cell_size, double safe_distance) {
        return toArray(buildVelocityMap(toGrid(occupancy, cell_size, {}), safe_distance).speed);
      },
      py::arg("occupancy"), py::arg("cell_size"), py::arg("safe_distance"));

  m.def(
      "plan_path",
      [](const Array& speed, double cell_size, std::pair<double, double> start, std::pair<double, double> goal,
         std::pair<double, double> origin, double safe_distance) {
        VelocityMap vmap{toField(speed, cell_size, {origin.first, origin.second}), safe_distance};
        return pathDict(planPath(vmap, {start.first, start.second}, {goal.first, goal.second}));
      },
      py::arg("speed"), py::arg("cell_size"), py::arg("start"), py::arg("goal"),
      py::arg("origin") = std::pair{0.0, 0.0}, py::arg("safe_distance") = 1.0,
      "Gradient-descent path on a velocity map (world coordinates).");

  m.def(
      "plan_fm2",
      [](const std::filesystem::path& map_metadata, std::pair<double, double> start, std::pair<double, double> goal,
         double safe_distance, double inflation) {
        const Fm2Plan plan = planFm2(loadMap(map_metadata), {start.first, start.second}, {goal.first, goal.second},
                                     safe_distance, inflation);
        py::dict d = pathDict(plan.path);
        d["min_clearance"] = plan.min_clearance;
        d["inflated"] = toArray(plan.inflated);
        d["d1"] = toArray(plan.d1.times);
        d["w2"] = toArray(plan.w2.speed);
        d["d2"] = toArray(plan.d2.times);
        return d;
      },
      py::arg("map_metadata"), py::arg("start"), py::arg("goal"), py::arg("safe_distance"),
      py::arg("inflation") = 0.30);

  m.def(
      "load_map",
      [](const std::filesystem::path& metadata) {
        const OccupancyGrid g = loadMap(metadata);
        return py::make_tuple(toArray(g), g.geometry().cellSize(),
                              py::make_tuple(g.geometry().origin().x, g.geometry().origin().y));
      },
      py::arg("metadata"), "Returns (occupancy, cell_size, origin).");

  m.def(
      "assign_final_goals",
      [](const std::vector<std::pair<double, double>>& positions, const std::vector<std::pair<double, double>>& goals) {
        return assignFinalGoals(toPoints(positions), toPoints(goals)).role_of_robot;
      },
      py::arg("positions"), py::arg("goals"), "Role index per robot minimizing the summed squared distance.");

  m.def(
      "assignment_cost",
      [](const std::vector<std::pair<double, double>>& positions, const std::vector<std::pair<double, double>>& goals,
         const std::vector<int>& roles) { return assignmentCost(toPoints(positions), toPoints(goals), roles); },
      py::arg("positions"), py::arg("goals"), py::arg("roles"));

  m.def(
      "select_leader",
      [](const std::vector<double>& etas, std::optional<int> current, double d_switch) {
        return selectLeader(etas, current, d_switch);
      },
      py::arg("etas"), py::arg("current") = py::none(), py::arg("d_switch") = 0.05);

  m.def(
      "obstacle_avoidance",
      [](std::pair<double, double> v, std::pair<double, double> gradient, double w, double w_min_avoid,
         double safe_distance_b) {
        const AvoidanceResult r = obstacleAvoidance({v.first, v.second}, {gradient.first, gradient.second}, w,
                                                    w_min_avoid, safe_distance_b);
        return py::make_tuple(py::make_tuple(r.velocity.x, r.velocity.y), r.triggered, r.alpha);
      },
      py::arg("velocity"), py::arg("gradient"), py::arg("w"), py::arg("w_min_avoid") = 0.5,
      py::arg("safe_distance_b") = 0.5, "Returns ((vx, vy), triggered, alpha).");

  m.def("directional_speed_limit", &directionalSpeedLimit, py::arg("theta"), py::arg("v_max_x") = 0.5,
        py::arg("v_max_y") = 0.2);
  m.def("proximity_speed_limit", &proximitySpeedLimit, py::arg("w"), py::arg("v_min") = 0.05,
        py::arg("v_max_x") = 0.5);
  m.def("goal_speed_limit", &goalSpeedLimit, py::arg("distance"), py::arg("d_slowdown") = 0.4,
        py::arg("v_max_x") = 0.5);

  m.def(
      "spring_delta",
      [](double length, double rest_length, double k_rep, double k_att, double max_att) {
        ConnectionSpec c;
        c.rest_length = rest_length;
        c.k_rep = k_rep;
        c.k_att = k_att;
        c.max_att = max_att;
        return springDelta(c, length);
      },
      py::arg("length"), py::arg("rest_length"), py::arg("k_rep"), py::arg("k_att"), py::arg("max_att"));

  m.def("builtin_scenarios", [] {
    std::vector<std::string> names;
    for (const auto& b : builtinScenarios()) names.push_back(b.scenario.name);
    return names;
  });

  m.def(
      "validate_scenario",
      [](const std::string& ref) {
        const Scenario s = resolveScenario(ref);
        s.validate(*MapBundle::build(s.map, s.planner));
        return s.name;
      },
      py::arg("scenario"));

  m.def(
      "run_scenario",
      [](const std::string& ref, std::optional<std::uint64_t> until_cycle, std::optional<double> lag) {
        const Scenario s = resolveScenario(ref);
        RunOptions opts;
        opts.until_cycle = until_cycle;
        opts.lag = lag;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = runScenario(s, opts);
        }
        return runDict(s, r);
      },
      py::arg("scenario"), py::arg("until_cycle") = py::none(), py::arg("lag") = py::none(),
      "Runs a builtin name or scenario file; returns the summary plus the metrics CSV text.");

  m.def(
      "export_scenarios", [](const std::filesystem::path& dir) { return exportBuiltins(dir); }, py::arg("dir"));

  m.attr("WIRE_VERSION") = kWireVersion;
}
