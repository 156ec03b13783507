#pragma once

#include <filesystem>

#include "vsrnav/gridmap.hpp"

namespace vsrnav {

/// Map-server style metadata sidecar.
struct MapMetadata {
  std::filesystem::path image;
  double resolution = 0.05;
  Pose2 origin;
  double occupied_thresh = 0.65;
  double free_thresh = 0.196;
  bool negate = false;
};

inline constexpr std::uint8_t kFreeValue = 0;
inline constexpr std::uint8_t kOccupiedValue = 255;
inline constexpr std::uint8_t kUnknownValue = 205;

/// Reads a PGM (P2 or P5, maxval 255). Image row 0 is the top of the map, so
/// it becomes grid row height-1.
OccupancyGrid read_pgm(const std::filesystem::path& path, double resolution = 0.05,
                       Pose2 origin = {});

/// Loads metadata + image. Pixels are classified with the map-server rule
/// (occupancy = (255 - p) / 255, or p / 255 when negated): above
/// occupied_thresh -> 255, below free_thresh -> 0, otherwise unknown (205).
OccupancyGrid load_map(const std::filesystem::path& metadata_path);

MapMetadata read_map_metadata(const std::filesystem::path& metadata_path);

/// Writes `<stem>.pgm` (P5) and `<stem>.yaml` next to each other.
void save_map(const OccupancyGrid& grid, const std::filesystem::path& metadata_path);

}  // namespace vsrnav
