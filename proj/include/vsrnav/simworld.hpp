#pragma once

// Deterministic 2-D world: furniture on an occupancy grid, objects resting on
// it, a robot with a side-mounted camera, and discrete pick/place.

#include <Eigen/Geometry>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vsrnav/coverage.hpp"
#include "vsrnav/embed.hpp"
#include "vsrnav/gridmap.hpp"
#include "vsrnav/vsr.hpp"

namespace vsrnav {

struct WorldObject {
  std::string id;
  std::string label;  // concept label fed to the embedder
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool graspable = false;
  bool surface = false;

  Vec2 planar() const { return {position.x(), position.y()}; }
  friend bool operator==(const WorldObject&, const WorldObject&) = default;
};

struct RobotState {
  Pose2 pose;
  std::optional<std::string> holding;  // id of the carried object
  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct WorldSpec {
  OccupancyGrid grid;
  std::uint8_t threshold = 128;
  std::vector<WorldObject> objects;  // everything not in the hand
  std::optional<WorldObject> carried;
  Pose2 start{0.5, 0.5, 0.0};
  std::uint64_t seed = 1;

  BinaryGrid passable() const { return binarize(grid, threshold); }
  const WorldObject* find(const std::string& id) const;
  WorldObject* find(const std::string& id);
  /// Throws InvalidArgument for duplicate ids or objects not resting on or
  /// next to an obstacle cell.
  void validate() const;
};

struct CameraModel {
  CameraSide side = CameraSide::Right;
  double fov_deg = 60.0;  // horizontal
  double max_range = 3.5;
  double mount_height = 0.6;
  CameraIntrinsics intrinsics;

  /// Camera frame in the map for a robot pose: optical axis horizontal and
  /// perpendicular to the heading, image y pointing down.
  Eigen::Isometry3d camera_to_map(const Pose2& robot) const;
  Eigen::Vector3d position(const Pose2& robot) const;
  void validate() const;
};

struct Detection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  std::string label;
  std::string object_id;  // provenance, simulator only
};

/// Objects in range, inside the horizontal FOV, projecting inside the image,
/// and with a grid ray free of obstacles except at the object's own cell.
std::vector<Detection> observe(const WorldSpec& world, const RobotState& robot, const CameraModel& camera);

/// True when the grid ray between the two planar points crosses no obstacle
/// cell other than the one containing `to`.
bool line_of_sight(const BinaryGrid& grid, Vec2 from, Vec2 to);

struct ScanFrame {
  std::size_t index = 0;
  Pose2 pose;
  std::vector<Detection> detections;
};

struct ScanOptions {
  double step = 0.1;  // meters between frames
  MergeParams merge;
  std::function<void(const ScanFrame&)> on_frame;
};

struct ScanResult {
  SceneRepresentation scene;
  std::size_t frames = 0;
  Pose2 final_pose;
};

/// Drives the tour's segment paths, heading tangent to the path, observing
/// every `step` meters and ingesting each detection's object embedding.
ScanResult run_coverage_scan(const WorldSpec& world, const Tour& tour, const CameraModel& camera,
                             const EmbeddingProvider& provider, const ScanOptions& options = {});

/// Frame poses along a tour, the first at its start.
std::vector<Pose2> sample_tour(const Tour& tour, double step);

struct MotionParams {
  double standoff = 0.4;  // preferred parking distance from a target
  double reach = 0.6;     // arm reach, planar
  double surface_radius = 0.25;
};

struct NavigationResult {
  RobotState state;
  Polyline path;
};

/// Parks at the standoff point on the robot's side of the target when
/// reachable, otherwise at the closest reachable parking spot within reach
/// of the target. Faces the target. Throws Unreachable.
NavigationResult navigate_to(const WorldSpec& world, const RobotState& robot, Vec2 target,
                             const MotionParams& params = {});

/// Throws HandFull, UnknownObject, NotGraspable or OutOfReach.
void pick(WorldSpec& world, RobotState& robot, const std::string& object_id, const MotionParams& params = {});

/// Puts the carried object at `target`. Throws HandEmpty, OutOfReach, or
/// NoSurface when the target is neither on/next to an obstacle cell nor near
/// a surface object.
void place(WorldSpec& world, RobotState& robot, const Eigen::Vector3d& target, const MotionParams& params = {});

/// Seeded stand-in for a furnished lab: 8 x 6 m, nine pieces of furniture,
/// ten of the lab vocabulary's concepts as surfaces and twenty as objects.
WorldSpec make_lab_world(std::uint64_t seed);

/// Labels of the lab world's surfaces (location queries) and objects.
const std::vector<std::string>& lab_location_labels();
const std::vector<std::string>& lab_object_labels();

/// World JSON: {"map": metadata path, "objects": [...], "seed", "start"}.
/// The map path is resolved relative to the world file.
WorldSpec load_world(const std::filesystem::path& path);
/// Writes the world JSON plus `<stem>_map.yaml`/`.pgm` next to it.
void save_world(const WorldSpec& world, const std::filesystem::path& path);

}  // namespace vsrnav
