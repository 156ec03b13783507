#include "vsrnav/map_io.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "vsrnav/error.hpp"

namespace vsrnav {

namespace {

// Next whitespace-delimited token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

int pnm_int(std::istream& in, const char* what) {
  const std::string t = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::IoError, std::string("bad PGM ") + what + ": '" + t + "'");
}

}  // namespace

OccupancyGrid read_pgm(const std::filesystem::path& path, double resolution, Pose2 origin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P2" && magic != "P5") throw Error(ErrorKind::IoError, path.string() + ": not a P2/P5 PGM");
  const int width = pnm_int(in, "width");
  const int height = pnm_int(in, "height");
  const int maxval = pnm_int(in, "maxval");
  if (width < 1 || height < 1) throw Error(ErrorKind::IoError, path.string() + ": empty image");
  if (maxval != 255) throw Error(ErrorKind::IoError, path.string() + ": maxval must be 255");

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
      throw Error(ErrorKind::IoError, path.string() + ": truncated pixel data");
  } else {
    for (auto& p : pixels) {
      const int v = pnm_int(in, "pixel");
      if (v < 0 || v > 255) throw Error(ErrorKind::IoError, path.string() + ": pixel out of range");
      p = static_cast<std::uint8_t>(v);
    }
  }

  OccupancyGrid grid;
  grid.info.width = width;
  grid.info.height = height;
  grid.info.resolution = resolution;
  grid.info.origin = origin;
  grid.cells.resize(pixels.size());
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      grid.cells[grid.info.index({c, height - 1 - r})] = pixels[static_cast<std::size_t>(r) * width + c];
  return grid;
}

MapMetadata read_map_metadata(const std::filesystem::path& metadata_path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(metadata_path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::IoError, metadata_path.string() + ": " + e.what());
  }
  MapMetadata meta;
  try {
    if (!doc["image"]) throw Error(ErrorKind::IoError, metadata_path.string() + ": missing 'image'");
    meta.image = doc["image"].as<std::string>();
    if (meta.image.is_relative()) meta.image = metadata_path.parent_path() / meta.image;
    if (doc["resolution"]) meta.resolution = doc["resolution"].as<double>();
    if (const auto o = doc["origin"]) {
      if (!o.IsSequence() || o.size() != 3)
        throw Error(ErrorKind::IoError, metadata_path.string() + ": origin must be [x, y, theta]");
      meta.origin = {o[0].as<double>(), o[1].as<double>(), o[2].as<double>()};
    }
    if (doc["occupied_thresh"]) meta.occupied_thresh = doc["occupied_thresh"].as<double>();
    if (doc["free_thresh"]) meta.free_thresh = doc["free_thresh"].as<double>();
    if (doc["negate"]) meta.negate = doc["negate"].as<int>() != 0;
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::IoError, metadata_path.string() + ": " + e.what());
  }
  if (!(meta.resolution > 0.0)) throw Error(ErrorKind::IoError, metadata_path.string() + ": resolution must be > 0");
  return meta;
}

OccupancyGrid load_map(const std::filesystem::path& metadata_path) {
  const MapMetadata meta = read_map_metadata(metadata_path);
  OccupancyGrid grid = read_pgm(meta.image, meta.resolution, meta.origin);
  for (auto& v : grid.cells) {
    const double occ = meta.negate ? v / 255.0 : (255 - v) / 255.0;
    if (occ > meta.occupied_thresh)
      v = kOccupiedValue;
    else if (occ < meta.free_thresh)
      v = kFreeValue;
    else
      v = kUnknownValue;
  }
  grid.unknown_value = kUnknownValue;
  return grid;
}

void save_map(const OccupancyGrid& grid, const std::filesystem::path& metadata_path) {
  grid.validate();
  std::filesystem::path image = metadata_path;
  image.replace_extension(".pgm");
  {
    std::ofstream out(image, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + image.string());
    out << "P5\n" << grid.info.width << ' ' << grid.info.height << "\n255\n";
    for (int r = grid.info.height - 1; r >= 0; --r)
      for (int c = 0; c < grid.info.width; ++c) {
        const std::uint8_t v = grid.at({c, r});
        const bool unknown = grid.unknown_value && v == *grid.unknown_value;
        out.put(static_cast<char>(unknown ? kUnknownValue : 255 - v));
      }
  }
  std::ofstream meta(metadata_path);
  if (!meta) throw Error(ErrorKind::IoError, "cannot write " + metadata_path.string());
  std::ostringstream body;
  body.precision(17);
  body << "image: " << image.filename().string() << "\n"
       << "resolution: " << grid.info.resolution << "\n"
       << "origin: [" << grid.info.origin.x << ", " << grid.info.origin.y << ", " << grid.info.origin.theta << "]\n"
       << "negate: 0\n"
       << "occupied_thresh: 0.65\n"
       << "free_thresh: 0.196\n";
  meta << body.str();
}

}  // namespace vsrnav
