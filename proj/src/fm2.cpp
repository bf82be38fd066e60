#include "formplan/fm2.hpp"

#include <algorithm>
#include <fstream>

#include "formplan/errors.hpp"
#include "formplan/simulator.hpp"

namespace formplan {
namespace {

std::vector<double> occupancyValues(const OccupancyGrid& grid) {
  std::vector<double> out(grid.cells().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = grid.cells()[k] ? 1.0 : 0.0;
  return out;
}

void writeCsv(const std::filesystem::path& path, const std::vector<double>& values, int rows, int cols) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << formatNumber(values[static_cast<std::size_t>(r) * cols + c]);
    }
    out << '\n';
  }
}

}  // namespace

Fm2Plan planFm2(const OccupancyGrid& grid, Vec2 start, Vec2 goal, double safe_distance, double inflation_radius) {
  Fm2Plan plan;
  plan.grid = grid;
  plan.inflated = inflate(grid, inflation_radius);
  plan.d1 = distanceField(plan.inflated);
  plan.w2 = buildVelocityMap(plan.inflated, plan.d1, safe_distance);
  plan.d2 = solveFromGoal(plan.w2, goal);
  plan.path = descend(plan.d2, plan.w2, start, goal);
  const ArrivalTimeField raw = distanceField(grid);
  plan.min_clearance = ScalarField::kInfinity;
  for (const Vec2& p : plan.path.vertices) {
    plan.min_clearance = std::min(plan.min_clearance, nearestObstacleDistance(p, raw));
  }
  return plan;
}

void writeNpy(const std::filesystem::path& path, const std::vector<double>& values, int rows, int cols) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
                       std::to_string(cols) + "), }";
  // magic (6) + version (2) + header length (2) + header + '\n', padded to 64 bytes.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out << header;
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<std::filesystem::path> writeFm2Artifacts(const Fm2Plan& plan, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& g = plan.grid.geometry();
  const std::pair<const char*, std::vector<double>> layers[] = {
      {"grid", occupancyValues(plan.grid)},
      {"inflated", occupancyValues(plan.inflated)},
      {"d1", plan.d1.times.values()},
      {"w2", plan.w2.speed.values()},
      {"d2", plan.d2.times.values()},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, values] : layers) {
    writeCsv(dir / (std::string(name) + ".csv"), values, g.height(), g.width());
    writeNpy(dir / (std::string(name) + ".npy"), values, g.height(), g.width());
    written.push_back(dir / (std::string(name) + ".csv"));
    written.push_back(dir / (std::string(name) + ".npy"));
  }
  std::ofstream out(dir / "path.csv");
  if (!out) throw Error("cannot write " + (dir / "path.csv").string());
  out << "x,y,eta\n";
  for (std::size_t k = 0; k < plan.path.vertices.size(); ++k) {
    out << formatNumber(plan.path.vertices[k].x) << ',' << formatNumber(plan.path.vertices[k].y) << ','
        << formatNumber(plan.path.vertex_eta[k]) << '\n';
  }
  written.push_back(dir / "path.csv");
  return written;
}

OccupancyGrid planningDemoMap() {
  OccupancyGrid grid(GridGeometry(200, 160, 0.05));
  grid.fillBorder();
  grid.fillRect({3.0, 0.0}, {3.3, 5.2});
  grid.fillRect({5.2, 2.6}, {5.5, 8.0});
  grid.fillRect({5.5, 2.6}, {7.4, 2.9});
  grid.fillRect({7.6, 5.0}, {8.6, 6.0});
  grid.fillDisc({1.6, 6.2}, 0.5);
  return grid;
}

}  // namespace formplan
