#pragma once

// Object-level scene representation: one record per physical object pairing
// a unit embedding with its map-frame position, plus pixel -> map projection
// and similarity queries.

#include <Eigen/Geometry>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vsrnav {

using Embedding = std::vector<float>;

inline constexpr std::size_t kDefaultDimension = 512;
inline constexpr double kDefaultMinScore = 0.2;

/// Pinhole intrinsics. Camera frame: +x right, +y down, +z along the optical axis.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
};

/// Pixel (u, v) at `depth` meters along the optical axis, in the map frame.
/// Throws InvalidDepth for depth <= 0 or non-finite.
Eigen::Vector3d project_pixel(double u, double v, double depth, const CameraIntrinsics& intrinsics,
                              const Eigen::Isometry3d& camera_to_map);

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Inverse of project_pixel. Points behind the camera yield depth <= 0.
PixelDepth reproject_point(const Eigen::Vector3d& map_point, const CameraIntrinsics& intrinsics,
                           const Eigen::Isometry3d& camera_to_map);

struct ObjectFeature {
  Embedding embedding;  // unit norm, scene dimension
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::uint32_t observation_count = 1;
  std::string label;  // ground truth, simulator only; empty when unknown

  friend bool operator==(const ObjectFeature&, const ObjectFeature&) = default;
};

struct MergeParams {
  double radius = 0.25;      // meters
  double min_cosine = 0.90;
};

/// One detection in image space.
struct Observation {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  Embedding embedding;
  std::string label;
};

class SceneRepresentation {
 public:
  explicit SceneRepresentation(std::size_t dimension = kDefaultDimension, MergeParams merge = {});

  std::size_t dimension() const { return dimension_; }
  const MergeParams& merge_params() const { return merge_; }
  const std::vector<ObjectFeature>& objects() const { return objects_; }
  std::size_t size() const { return objects_.size(); }
  bool empty() const { return objects_.empty(); }

  /// Merges into the closest record passing both gates (distance, cosine) or
  /// appends. The embedding is renormalized first. Returns the record index.
  std::size_t ingest(Embedding embedding, const Eigen::Vector3d& position, const std::string& label = {});

  /// Appends without merging (file loading, tests). Validates dimension.
  void append(ObjectFeature feature);

  friend bool operator==(const SceneRepresentation& a, const SceneRepresentation& b) {
    return a.dimension_ == b.dimension_ && a.objects_ == b.objects_;
  }

 private:
  std::size_t dimension_;
  MergeParams merge_;
  std::vector<ObjectFeature> objects_;
};

/// Projects every observation through the camera and ingests it. Returns the
/// record index each observation ended up in.
std::vector<std::size_t> ingest_observations(SceneRepresentation& scene, const CameraIntrinsics& intrinsics,
                                             const Eigen::Isometry3d& camera_to_map,
                                             std::span<const Observation> observations);

struct QueryResult {
  std::size_t index = 0;
  double score = 0.0;
};

/// Dot product of the normalized text embedding with every record.
std::vector<double> similarity_scores(const SceneRepresentation& scene, std::span<const float> text);

/// Highest-scoring record, lowest index on ties. Throws EmptyScene,
/// DimensionMismatch, or NoMatch when the best score is below min_score.
QueryResult query(const SceneRepresentation& scene, std::span<const float> text,
                  double min_score = kDefaultMinScore);

/// VSR1 binary encoding (little-endian, FNV-1a checksum over the records).
std::string encode_scene(const SceneRepresentation& scene);
/// Throws CorruptFile on bad magic, size or checksum and DimensionMismatch
/// when the records do not match the header dimension.
SceneRepresentation decode_scene(std::string_view bytes, MergeParams merge = {});

void save_scene(const SceneRepresentation& scene, const std::filesystem::path& path);
SceneRepresentation load_scene(const std::filesystem::path& path, MergeParams merge = {});

/// Normalizes in place; throws InvalidArgument for zero or non-finite vectors.
void normalize(Embedding& v);
double dot(std::span<const float> a, std::span<const float> b);

}  // namespace vsrnav
