#include "vsrnav/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>

#include "vsrnav/error.hpp"
#include "vsrnav/grid_search.hpp"
#include "vsrnav/map_io.hpp"

namespace vsrnav {

namespace {

bool near_obstacle(const BinaryGrid& grid, Vec2 p) {
  const Cell c = grid.info.cell_of(p);
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      if (grid.obstacle({c.col + dc, c.row + dr})) return true;
  return false;
}

std::uint64_t frame_seed(std::uint64_t world_seed, std::size_t frame, std::size_t object) {
  std::uint64_t z = world_seed * 0x9e3779b97f4a7c15ull + frame * 0xbf58476d1ce4e5b9ull + object * 0x94d049bb133111ebull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

const WorldObject* WorldSpec::find(const std::string& id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

WorldObject* WorldSpec::find(const std::string& id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

void WorldSpec::validate() const {
  grid.validate();
  const BinaryGrid g = passable();
  std::vector<std::string> ids;
  for (const auto& o : objects) {
    if (o.id.empty()) throw Error(ErrorKind::InvalidArgument, "object with empty id");
    ids.push_back(o.id);
    if (!o.position.allFinite()) throw Error(ErrorKind::InvalidArgument, "object '" + o.id + "' has a non-finite position");
    if (!near_obstacle(g, o.planar()))
      throw Error(ErrorKind::InvalidArgument, "object '" + o.id + "' does not rest on or next to an obstacle");
  }
  if (carried) ids.push_back(carried->id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw Error(ErrorKind::InvalidArgument, "duplicate object ids");
  if (!g.free_at(start.position())) throw Error(ErrorKind::InvalidArgument, "start pose is not in free space");
}

Eigen::Isometry3d CameraModel::camera_to_map(const Pose2& robot) const {
  const double s = side == CameraSide::Right ? 1.0 : -1.0;
  const Eigen::Vector3d z(s * std::sin(robot.theta), -s * std::cos(robot.theta), 0.0);
  const Eigen::Vector3d y(0.0, 0.0, -1.0);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear().col(0) = y.cross(z);
  t.linear().col(1) = y;
  t.linear().col(2) = z;
  t.translation() = position(robot);
  return t;
}

Eigen::Vector3d CameraModel::position(const Pose2& robot) const { return {robot.x, robot.y, mount_height}; }

void CameraModel::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw Error(ErrorKind::InvalidArgument, "camera FOV must be in (0, 180)");
  if (!(max_range > 0.0)) throw Error(ErrorKind::InvalidArgument, "camera range must be positive");
  intrinsics.validate();
}

bool line_of_sight(const BinaryGrid& grid, Vec2 from, Vec2 to) {
  const Cell target = grid.info.cell_of(to);
  for (const Cell c : cells_on_segment(grid.info, from, to))
    if (!(c == target) && grid.obstacle(c)) return false;
  return true;
}

std::vector<Detection> observe(const WorldSpec& world, const RobotState& robot, const CameraModel& camera) {
  const BinaryGrid grid = world.passable();
  const Eigen::Isometry3d cam = camera.camera_to_map(robot.pose);
  const Eigen::Vector3d origin = camera.position(robot.pose);
  const double half_fov = camera.fov_deg * std::numbers::pi / 360.0;
  const auto& k = camera.intrinsics;
  std::vector<Detection> out;
  for (const auto& o : world.objects) {
    if ((o.position - origin).norm() > camera.max_range) continue;
    const PixelDepth px = reproject_point(o.position, k, cam);
    if (!(px.depth > 0.0)) continue;
    const Eigen::Vector3d local = cam.inverse() * o.position;
    if (std::atan2(std::abs(local.x()), local.z()) > half_fov) continue;
    if (px.u < 0.0 || px.u >= k.width || px.v < 0.0 || px.v >= k.height) continue;
    if (!line_of_sight(grid, robot.pose.position(), o.planar())) continue;
    out.push_back({px.u, px.v, px.depth, o.label, o.id});
  }
  return out;
}

std::vector<Pose2> sample_tour(const Tour& tour, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "scan step must be positive");
  Polyline line;
  for (const auto& seg : tour.segment_paths)
    for (const Vec2 p : seg)
      if (line.empty() || !(line.back() == p)) line.push_back(p);
  std::vector<Pose2> poses;
  if (line.empty()) return poses;
  if (line.size() == 1) return {{line[0].x, line[0].y, 0.0}};

  double next = 0.0;  // arc length of the next sample
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1], b = line[i];
    const double len = distance(a, b);
    const double heading = std::atan2(b.y - a.y, b.x - a.x);
    while (next <= walked + len) {
      const double t = (next - walked) / len;
      const Vec2 p = a + (b - a) * t;
      poses.push_back({p.x, p.y, heading});
      next += step;
    }
    walked += len;
  }
  const Vec2 end = line.back();
  if (!(poses.back().position() == end)) poses.push_back({end.x, end.y, poses.back().theta});
  return poses;
}

ScanResult run_coverage_scan(const WorldSpec& world, const Tour& tour, const CameraModel& camera,
                             const EmbeddingProvider& provider, const ScanOptions& options) {
  camera.validate();
  const BinaryGrid grid = world.passable();
  if (tour.order.size() > 1 && tour.segment_paths.size() + 1 != tour.order.size())
    throw Error(ErrorKind::InvalidArgument, "tour has no segment paths");
  for (const auto& seg : tour.segment_paths)
    for (std::size_t i = 0; i < seg.size(); ++i)
      if (!grid.free_at(seg[i]) || (i > 0 && !segment_clear(grid, seg[i - 1], seg[i])))
        throw Error(ErrorKind::Infeasible, "tour path leaves free space");

  ScanResult result{SceneRepresentation(provider.dimension(), options.merge), 0, world.start};
  const std::vector<Pose2> poses = sample_tour(tour, options.step);
  std::vector<std::size_t> index_of;
  for (std::size_t f = 0; f < poses.size(); ++f) {
    const RobotState robot{poses[f], std::nullopt};
    ScanFrame frame{f, poses[f], observe(world, robot, camera)};
    std::vector<Observation> obs;
    for (const Detection& d : frame.detections) {
      std::size_t object_index = 0;
      while (world.objects[object_index].id != d.object_id) ++object_index;
      obs.push_back({d.u, d.v, d.depth,
                     provider.embed_object({d.label, frame_seed(world.seed, f, object_index), {}}), d.label});
    }
    ingest_observations(result.scene, camera.intrinsics, camera.camera_to_map(poses[f]), obs);
    if (options.on_frame) options.on_frame(frame);
    result.final_pose = poses[f];
  }
  result.frames = poses.size();
  return result;
}

NavigationResult navigate_to(const WorldSpec& world, const RobotState& robot, Vec2 target, const MotionParams& params) {
  const BinaryGrid grid = world.passable();
  const Vec2 here = robot.pose.position();
  if (!grid.free_at(here)) throw Error(ErrorKind::InvalidArgument, "robot is not in free space");
  const DistanceField field(grid, here);
  auto usable = [&](Vec2 p) { return grid.free_at(p) && field.reachable(p); };

  Vec2 away = here - target;
  const double base = norm(away) > 1e-9 ? std::atan2(away.y, away.x) : std::numbers::pi;
  std::optional<Vec2> parking;
  const Vec2 preferred = target + Vec2{std::cos(base), std::sin(base)} * params.standoff;
  if (usable(preferred)) {
    parking = preferred;
  } else {
    const double radii[] = {params.standoff, params.standoff + 0.1, params.standoff - 0.1, params.reach,
                            params.standoff - 0.2};
    for (const double r : radii) {
      if (r <= 0.0 || r > params.reach) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 72; ++k) {
        const double a = base + k * std::numbers::pi / 36.0;
        const Vec2 p = target + Vec2{std::cos(a), std::sin(a)} * r;
        if (!usable(p)) continue;
        const double d = field.distance(grid.info.cell_of(p));
        if (d < best) {
          best = d;
          parking = p;
        }
      }
      if (parking) break;
    }
  }
  if (!parking)
    throw Error(ErrorKind::Unreachable, "no reachable parking spot within " + std::to_string(params.reach) +
                                            " m of (" + std::to_string(target.x) + ", " + std::to_string(target.y) + ")");

  NavigationResult out;
  out.path = field.path_to(*parking);
  const Vec2 facing = target - *parking;
  out.state = robot;
  out.state.pose = {parking->x, parking->y, std::atan2(facing.y, facing.x)};
  return out;
}

void pick(WorldSpec& world, RobotState& robot, const std::string& object_id, const MotionParams& params) {
  if (robot.holding) throw Error(ErrorKind::HandFull, "already holding '" + *robot.holding + "'");
  const auto it = std::find_if(world.objects.begin(), world.objects.end(),
                               [&](const WorldObject& o) { return o.id == object_id; });
  if (it == world.objects.end()) throw Error(ErrorKind::UnknownObject, "no object '" + object_id + "' in the world");
  if (!it->graspable) throw Error(ErrorKind::NotGraspable, "'" + object_id + "' cannot be grasped");
  const double d = distance(robot.pose.position(), it->planar());
  if (d > params.reach)
    throw Error(ErrorKind::OutOfReach, "'" + object_id + "' is " + std::to_string(d) + " m away, reach is " +
                                           std::to_string(params.reach) + " m");
  world.carried = *it;
  robot.holding = it->id;  // object_id may alias the erased element
  world.objects.erase(it);
}

void place(WorldSpec& world, RobotState& robot, const Eigen::Vector3d& target, const MotionParams& params) {
  if (!robot.holding || !world.carried) throw Error(ErrorKind::HandEmpty, "nothing to place");
  const Vec2 spot{target.x(), target.y()};
  const double d = distance(robot.pose.position(), spot);
  if (d > params.reach)
    throw Error(ErrorKind::OutOfReach, "target is " + std::to_string(d) + " m away, reach is " +
                                           std::to_string(params.reach) + " m");
  bool supported = near_obstacle(world.passable(), spot);
  for (const auto& o : world.objects)
    if (o.surface && distance(o.planar(), spot) <= params.surface_radius) supported = true;
  if (!supported) throw Error(ErrorKind::NoSurface, "no surface under the target");
  WorldObject o = *world.carried;
  o.position = target;  // copied before the push below can invalidate it
  world.objects.push_back(std::move(o));
  world.carried.reset();
  robot.holding.reset();
}

namespace {

struct Furniture {
  double x0, y0, x1, y1, height;
};

const std::vector<Furniture>& lab_furniture() {
  static const std::vector<Furniture> f{
      {1.0, 1.0, 2.4, 1.7, 0.60}, {3.4, 0.9, 4.6, 1.3, 0.62}, {5.8, 1.0, 7.0, 1.6, 0.58},
      {0.9, 3.0, 2.1, 3.9, 0.55}, {3.5, 2.8, 4.5, 3.6, 0.60}, {5.8, 3.0, 6.8, 3.8, 0.64},
      {1.2, 4.9, 2.8, 5.25, 0.60}, {4.0, 4.8, 5.6, 5.2, 0.57}, {7.2, 5.0, 7.5, 5.3, 0.56},
  };
  return f;
}

struct Placement {
  const char* label;
  int furniture;
  bool graspable;
  bool surface;
};

const std::vector<Placement>& lab_placements() {
  static const std::vector<Placement> p{
      {"wooden desk", 0, false, true},   {"shelf", 1, false, true},       {"cabinet", 2, false, true},
      {"sofa", 3, false, true},          {"printer", 4, false, true},     {"refrigerator", 5, false, true},
      {"whiteboard", 6, false, true},    {"sink", 7, false, true},        {"dustbin", 8, false, true},
      {"door", 6, false, true},          {"apple", 4, true, false},       {"coke can", 2, true, false},
      {"banana", 4, true, false},        {"orange", 3, true, false},      {"water bottle", 1, true, false},
      {"coffee mug", 0, true, false},    {"book", 1, true, false},        {"laptop", 0, true, false},
      {"keyboard", 0, true, false},      {"computer mouse", 7, true, false}, {"chair", 3, false, false},
      {"potted plant", 5, false, false}, {"lamp", 6, true, false},        {"backpack", 3, true, false},
      {"scissors", 7, true, false},      {"stapler", 2, true, false},     {"tennis ball", 5, true, false},
      {"teddy bear", 6, true, false},    {"remote control", 4, true, false}, {"picture frame", 1, true, false},
  };
  return p;
}

std::string id_for(const std::string& label) {
  std::string id = label;
  std::replace(id.begin(), id.end(), ' ', '_');
  return id;
}

}  // namespace

const std::vector<std::string>& lab_location_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const auto& p : lab_placements())
      if (p.surface) out.push_back(p.label);
    return out;
  }();
  return labels;
}

const std::vector<std::string>& lab_object_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const auto& p : lab_placements())
      if (!p.surface) out.push_back(p.label);
    return out;
  }();
  return labels;
}

WorldSpec make_lab_world(std::uint64_t seed) {
  constexpr double kRes = 0.05, kInset = 0.025, kMinSpacing = 0.35;
  WorldSpec w;
  w.seed = seed;
  w.start = {0.4, 0.4, 0.0};
  w.grid.info.width = 160;
  w.grid.info.height = 120;
  w.grid.info.resolution = kRes;
  w.grid.cells.assign(w.grid.info.size(), 0);
  for (const auto& f : lab_furniture())
    for (int r = 0; r < w.grid.info.height; ++r)
      for (int c = 0; c < w.grid.info.width; ++c) {
        const Vec2 p = w.grid.info.cell_center({c, r});
        if (p.x > f.x0 && p.x < f.x1 && p.y > f.y0 && p.y < f.y1) w.grid.cells[w.grid.info.index({c, r})] = 255;
      }

  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (const auto& p : lab_placements()) {
    const Furniture& f = lab_furniture()[p.furniture];
    const double w_len = f.x1 - f.x0, h_len = f.y1 - f.y0;
    std::optional<Vec2> spot;
    for (int attempt = 0; attempt < 500 && !spot; ++attempt) {
      // Uniform along the perimeter, away from the corners.
      const int edge = static_cast<int>(rng() % 4);
      const double len = edge % 2 == 0 ? w_len : h_len;
      const double margin = std::min(0.15, len / 3.0);
      const double t = margin + uniform() * (len - 2.0 * margin);
      Vec2 q;
      switch (edge) {
        case 0: q = {f.x0 + t, f.y0 + kInset}; break;
        case 1: q = {f.x1 - kInset, f.y0 + t}; break;
        case 2: q = {f.x1 - t, f.y1 - kInset}; break;
        default: q = {f.x0 + kInset, f.y1 - t}; break;
      }
      bool spaced = true;
      for (const auto& o : w.objects)
        if (distance(o.planar(), q) < kMinSpacing) spaced = false;
      if (spaced) spot = q;
    }
    if (!spot) throw Error(ErrorKind::InvalidArgument, std::string("cannot place '") + p.label + "' in the lab world");
    w.objects.push_back({id_for(p.label), p.label, {spot->x, spot->y, f.height}, p.graspable, p.surface});
  }
  w.validate();
  return w;
}

namespace {

nlohmann::json object_json(const WorldObject& o) {
  return {{"id", o.id},         {"label", o.label},         {"x", o.position.x()},   {"y", o.position.y()},
          {"z", o.position.z()}, {"graspable", o.graspable}, {"surface", o.surface}};
}

}  // namespace

WorldSpec load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  WorldSpec w;
  try {
    const auto doc = nlohmann::json::parse(in);
    std::filesystem::path map = doc.at("map").get<std::string>();
    if (map.is_relative()) map = path.parent_path() / map;
    w.grid = load_map(map);
    w.seed = doc.value("seed", std::uint64_t{1});
    w.threshold = doc.value("threshold", std::uint8_t{128});
    if (doc.contains("start")) {
      const auto& s = doc["start"];
      w.start = {s.at(0).get<double>(), s.at(1).get<double>(), s.size() > 2 ? s.at(2).get<double>() : 0.0};
    }
    for (const auto& j : doc.at("objects")) {
      WorldObject o{j.at("id").get<std::string>(),
                    j.value("label", j.at("id").get<std::string>()),
                    {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)},
                    j.value("graspable", false),
                    j.value("surface", false)};
      if (j.value("carried", false))
        w.carried = std::move(o);
      else
        w.objects.push_back(std::move(o));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
  }
  w.validate();
  return w;
}

void save_world(const WorldSpec& world, const std::filesystem::path& path) {
  std::filesystem::path map = path;
  map.replace_filename(path.stem().string() + "_map.yaml");
  save_map(world.grid, map);
  nlohmann::json doc;
  doc["map"] = map.filename().string();
  doc["seed"] = world.seed;
  doc["threshold"] = world.threshold;
  doc["start"] = {world.start.x, world.start.y, world.start.theta};
  doc["objects"] = nlohmann::json::array();
  for (const auto& o : world.objects) doc["objects"].push_back(object_json(o));
  if (world.carried) {
    auto j = object_json(*world.carried);
    j["carried"] = true;
    doc["objects"].push_back(j);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace vsrnav
