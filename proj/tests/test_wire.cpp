#include "doctest.h"

#include <cmath>
#include <limits>

#include "formplan/scenario.hpp"
#include "formplan/wire.hpp"

using namespace formplan;

namespace {

std::vector<WireFrame> corridorFrames(std::uint64_t cycles) {
  const Scenario s = findBuiltin("lab-corridor")->scenario;
  const std::string digest = mapDigest(s.map);
  std::vector<WireFrame> out;
  RunOptions opts;
  opts.until_cycle = cycles;
  opts.on_frame = [&](const PlannerFrame& f, std::span<const RobotState> st) {
    out.push_back(makeWireFrame(f, st, static_cast<double>(f.cycle) * s.planner.dt(), digest));
  };
  runScenario(s, opts);
  return out;
}

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("frames survive a JSON text round trip unchanged") {
    const auto frames = corridorFrames(60);
    REQUIRE(frames.size() == 60);
    for (const auto& f : frames) {
      const std::string text = toJson(f).dump();
      CHECK(wireFrameFromJson(nlohmann::json::parse(text)) == f);
    }
  }

  TEST_CASE("frame fields use 1-based ids and carry the schema version") {
    const WireFrame f = corridorFrames(2).back();
    const auto j = toJson(f);
    CHECK(j["type"] == "frame");
    CHECK(j["version"] == kWireVersion);
    CHECK(j["phase"] == "PartialGoal");
    CHECK(j["leader"].get<int>() >= 1);
    for (const auto& r : j["robots"]) {
      CHECK(r["id"].get<int>() >= 1);
      CHECK(r["role"].get<int>() >= 1);
      CHECK(r["path"].size() <= kMaxPathPoints);
    }
    CHECK(j["connections"].size() == 3);
  }

  TEST_CASE("cycle indices increase by one per frame") {
    const auto frames = corridorFrames(30);
    for (std::size_t k = 1; k < frames.size(); ++k) CHECK(frames[k].cycle == frames[k - 1].cycle + 1);
  }

  TEST_CASE("infinite eta is encoded as null and decoded back") {
    WireFrame f;
    f.phase = "Inactive";
    f.robots.push_back({});
    f.robots[0].eta = std::numeric_limits<double>::infinity();
    const auto j = toJson(f);
    CHECK(j["robots"][0]["eta"].is_null());
    CHECK(std::isinf(wireFrameFromJson(j).robots[0].eta));
  }

  TEST_CASE("path decimation keeps both ends and the point budget") {
    std::vector<Vec2> path;
    for (int k = 0; k < 1000; ++k) path.push_back({k * 0.01, 0.0});
    const auto d = decimatePath(path, 200);
    CHECK(d.size() == 200);
    CHECK(d.front() == path.front());
    CHECK(d.back() == path.back());
    const std::vector<Vec2> short_path(path.begin(), path.begin() + 50);
    CHECK(decimatePath(short_path, 200).size() == 50);
  }

  TEST_CASE("malformed records raise json exceptions") {
    CHECK_THROWS_AS(wireFrameFromJson(nlohmann::json::parse(R"({"version":1})")), nlohmann::json::exception);
  }

  TEST_CASE("map digest is stable and sensitive to cells and geometry") {
    OccupancyGrid a(GridGeometry(20, 10, 0.05));
    const std::string d0 = mapDigest(a);
    CHECK(d0.size() == 16);
    CHECK(mapDigest(a) == d0);
    a.setOccupied({3, 4});
    CHECK(mapDigest(a) != d0);
    CHECK(mapDigest(OccupancyGrid(GridGeometry(20, 10, 0.1))) != d0);
  }

  TEST_CASE("map message encodes the grid bottom row first") {
    OccupancyGrid g(GridGeometry(3, 2, 0.5, {1.0, 2.0}));
    g.setOccupied({1, 0});
    const auto j = mapToJson(g);
    CHECK(j["type"] == "map");
    CHECK(j["width"] == 3);
    CHECK(j["height"] == 2);
    CHECK(j["cells"] == "010000");
    CHECK(j["origin"][0] == 1.0);
    CHECK(j["digest"] == mapDigest(g));
  }
}
