#include "formplan/map_io.hpp"

#include <png.h>
#include <yaml-cpp/yaml.h>

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "formplan/errors.hpp"

namespace formplan {
namespace fs = std::filesystem;

namespace {

// Skips whitespace and '#' comments in a PGM header.
void skipPgmSeparators(std::istream& in) {
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

int readPgmInt(std::istream& in, const fs::path& path) {
  skipPgmSeparators(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw MapError("malformed PGM header in " + path.string());
  return v;
}

GrayImage readPgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapError("cannot open map image " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2") {
    throw MapError("map image is not grayscale PGM (P2/P5): " + path.string());
  }
  GrayImage img;
  img.width = readPgmInt(in, path);
  img.height = readPgmInt(in, path);
  const int maxval = readPgmInt(in, path);
  if (img.width < 1 || img.height < 1) throw MapError("empty PGM image " + path.string());
  if (maxval < 1 || maxval > 255) throw MapError("PGM must be 8-bit (maxval <= 255): " + path.string());
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);

  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
      throw MapError("truncated PGM data in " + path.string());
    }
  } else {
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(readPgmInt(in, path));
  }
  if (maxval != 255) {
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(px * 255 / maxval);
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

GrayImage readPng(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw MapError("cannot open map image " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw MapError("libpng initialization failed");
  }
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw MapError("corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw MapError("map image must be 8-bit grayscale PNG: " + path.string());
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = img.pixels.data() + static_cast<std::size_t>(r) * img.width;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

bool hasPngSignature(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

}  // namespace

GrayImage readGrayImage(const fs::path& path) {
  if (!fs::exists(path)) throw MapError("map image not found: " + path.string());
  return hasPngSignature(path) ? readPng(path) : readPgm(path);
}

void writePgm(const fs::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

MapMetadata readMapMetadata(const fs::path& path) {
  if (!fs::exists(path)) throw MapError("map metadata not found: " + path.string());
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw MapError("cannot parse map metadata " + path.string() + ": " + e.what());
  }
  MapMetadata meta;
  try {
    if (root["image"]) meta.image = root["image"].as<std::string>();
    if (root["cell_size"]) {
      meta.cell_size = root["cell_size"].as<double>();
    } else if (root["resolution"]) {
      meta.cell_size = root["resolution"].as<double>();
    } else {
      throw MapError("map metadata " + path.string() + " lacks cell_size");
    }
    if (const auto origin = root["origin"]) {
      if (!origin.IsSequence() || origin.size() < 2) throw MapError("origin must be [x, y]");
      meta.origin = {origin[0].as<double>(), origin[1].as<double>()};
    }
    if (root["occupied_threshold"]) meta.occupied_threshold = root["occupied_threshold"].as<int>();
  } catch (const YAML::Exception& e) {
    throw MapError("invalid map metadata " + path.string() + ": " + e.what());
  }
  if (!(meta.cell_size > 0.0)) throw MapError("cell_size must be positive in " + path.string());
  if (meta.occupied_threshold < 0 || meta.occupied_threshold > 255) {
    throw MapError("occupied_threshold must be within [0, 255] in " + path.string());
  }
  return meta;
}

void writeMapMetadata(const fs::path& path, const MapMetadata& meta) {
  std::ofstream out(path);
  if (!out) throw MapError("cannot write " + path.string());
  const auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
  };
  if (!meta.image.empty()) out << "image: " << meta.image.generic_string() << '\n';
  out << "cell_size: " << num(meta.cell_size) << '\n'
      << "origin: [" << num(meta.origin.x) << ", " << num(meta.origin.y) << "]\n"
      << "occupied_threshold: " << meta.occupied_threshold << '\n';
}

OccupancyGrid loadMap(const fs::path& image, const fs::path& metadata) {
  const MapMetadata meta = readMapMetadata(metadata);
  const GrayImage img = readGrayImage(image);
  OccupancyGrid grid(GridGeometry(img.width, img.height, meta.cell_size, meta.origin));
  for (int row = 0; row < img.height; ++row) {
    const int j = img.height - 1 - row;
    for (int i = 0; i < img.width; ++i) {
      const auto px = img.pixels[static_cast<std::size_t>(row) * img.width + i];
      if (px <= meta.occupied_threshold) grid.setOccupied({i, j});
    }
  }
  return grid;
}

OccupancyGrid loadMap(const fs::path& metadata) {
  const MapMetadata meta = readMapMetadata(metadata);
  if (meta.image.empty()) throw MapError("map metadata " + metadata.string() + " has no image entry");
  const fs::path image = meta.image.is_absolute() ? meta.image : metadata.parent_path() / meta.image;
  return loadMap(image, metadata);
}

void saveMap(const OccupancyGrid& grid, const fs::path& image, const fs::path& metadata) {
  const auto& geo = grid.geometry();
  GrayImage img{geo.width(), geo.height(), std::vector<std::uint8_t>(geo.cellCount(), 255)};
  for (int j = 0; j < geo.height(); ++j) {
    const int row = geo.height() - 1 - j;
    for (int i = 0; i < geo.width(); ++i) {
      if (grid.occupied(CellIndex{i, j})) img.pixels[static_cast<std::size_t>(row) * geo.width() + i] = 0;
    }
  }
  writePgm(image, img);
  MapMetadata meta;
  meta.cell_size = geo.cellSize();
  meta.origin = geo.origin();
  meta.image = fs::relative(image, metadata.parent_path().empty() ? fs::path(".") : metadata.parent_path());
  writeMapMetadata(metadata, meta);
}

}  // namespace formplan
