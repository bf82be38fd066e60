#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "formplan/grid.hpp"

namespace formplan {

/// Contents of the key-value map metadata file.
///
///     image: map.pgm            # optional, relative to the metadata file
///     cell_size: 0.05           # meters per pixel
///     origin: [0.0, 0.0]        # world position of the lower-left corner
///     occupied_threshold: 127   # pixels <= threshold are occupied
struct MapMetadata {
  std::filesystem::path image;
  double cell_size = 0.05;
  Vec2 origin;
  int occupied_threshold = 127;
};

/// 8-bit grayscale raster, row 0 at the top.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

GrayImage readGrayImage(const std::filesystem::path& path);
void writePgm(const std::filesystem::path& path, const GrayImage& image);

MapMetadata readMapMetadata(const std::filesystem::path& path);
void writeMapMetadata(const std::filesystem::path& path, const MapMetadata& meta);

/// Loads a PGM (P5/P2) or 8-bit grayscale PNG occupancy image.
OccupancyGrid loadMap(const std::filesystem::path& image, const std::filesystem::path& metadata);
/// Loads using the `image` entry of the metadata file.
OccupancyGrid loadMap(const std::filesystem::path& metadata);

/// Writes the grid as a PGM (occupied = 0, free = 255) plus a metadata file
/// whose `image` entry points at it.
void saveMap(const OccupancyGrid& grid, const std::filesystem::path& image,
             const std::filesystem::path& metadata);

}  // namespace formplan
