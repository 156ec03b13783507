#include "vsrnav/vsr.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "vsrnav/error.hpp"

namespace vsrnav {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorKind::InvalidArgument, "focal lengths must be positive");
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw Error(ErrorKind::InvalidArgument, "principal point outside the image");
}

Eigen::Vector3d project_pixel(double u, double v, double depth, const CameraIntrinsics& k,
                              const Eigen::Isometry3d& camera_to_map) {
  if (!std::isfinite(depth) || depth <= 0.0)
    throw Error(ErrorKind::InvalidDepth, "depth must be positive and finite, got " + std::to_string(depth));
  const Eigen::Vector3d cam((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth);
  return camera_to_map * cam;
}

PixelDepth reproject_point(const Eigen::Vector3d& map_point, const CameraIntrinsics& k,
                           const Eigen::Isometry3d& camera_to_map) {
  const Eigen::Vector3d cam = camera_to_map.inverse() * map_point;
  return {k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy, cam.z()};
}

void normalize(Embedding& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double n = std::sqrt(sq);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero or non-finite vector");
  for (float& x : v) x = static_cast<float>(x / n);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

SceneRepresentation::SceneRepresentation(std::size_t dimension, MergeParams merge)
    : dimension_(dimension), merge_(merge) {
  if (dimension == 0) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
}

void SceneRepresentation::append(ObjectFeature feature) {
  if (feature.embedding.size() != dimension_)
    throw Error(ErrorKind::DimensionMismatch, "embedding has " + std::to_string(feature.embedding.size()) +
                                                  " components, scene expects " + std::to_string(dimension_));
  if (!feature.position.allFinite()) throw Error(ErrorKind::InvalidArgument, "object position is not finite");
  if (feature.observation_count < 1) throw Error(ErrorKind::InvalidArgument, "observation_count must be >= 1");
  objects_.push_back(std::move(feature));
}

std::size_t SceneRepresentation::ingest(Embedding embedding, const Eigen::Vector3d& position, const std::string& label) {
  if (embedding.size() != dimension_)
    throw Error(ErrorKind::DimensionMismatch, "embedding has " + std::to_string(embedding.size()) +
                                                  " components, scene expects " + std::to_string(dimension_));
  normalize(embedding);

  std::size_t best = objects_.size();
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const double d = (objects_[i].position - position).norm();
    if (d > merge_.radius || d >= best_dist) continue;
    if (dot(objects_[i].embedding, embedding) < merge_.min_cosine) continue;
    best = i;
    best_dist = d;
  }
  if (best == objects_.size()) {
    append({std::move(embedding), position, 1, label});
    return best;
  }

  ObjectFeature& o = objects_[best];
  const double n = o.observation_count;
  o.position += (position - o.position) / (n + 1.0);
  std::vector<double> mean(dimension_);
  double sq = 0.0;
  for (std::size_t k = 0; k < dimension_; ++k) {
    mean[k] = o.embedding[k] * n + embedding[k];
    sq += mean[k] * mean[k];
  }
  const double norm = std::sqrt(sq);
  for (std::size_t k = 0; k < dimension_; ++k) o.embedding[k] = static_cast<float>(mean[k] / norm);
  ++o.observation_count;
  if (o.label.empty()) o.label = label;
  return best;
}

std::vector<std::size_t> ingest_observations(SceneRepresentation& scene, const CameraIntrinsics& intrinsics,
                                             const Eigen::Isometry3d& camera_to_map,
                                             std::span<const Observation> observations) {
  std::vector<std::size_t> out;
  out.reserve(observations.size());
  for (const Observation& obs : observations) {
    const Eigen::Vector3d p = project_pixel(obs.u, obs.v, obs.depth, intrinsics, camera_to_map);
    out.push_back(scene.ingest(obs.embedding, p, obs.label));
  }
  return out;
}

std::vector<double> similarity_scores(const SceneRepresentation& scene, std::span<const float> text) {
  if (text.size() != scene.dimension())
    throw Error(ErrorKind::DimensionMismatch, "query has " + std::to_string(text.size()) +
                                                  " components, scene expects " + std::to_string(scene.dimension()));
  Embedding psi(text.begin(), text.end());
  normalize(psi);
  std::vector<double> s;
  s.reserve(scene.size());
  for (const auto& o : scene.objects()) s.push_back(dot(o.embedding, psi));
  return s;
}

QueryResult query(const SceneRepresentation& scene, std::span<const float> text, double min_score) {
  if (scene.empty()) throw Error(ErrorKind::EmptyScene, "scene has no objects");
  const std::vector<double> s = similarity_scores(scene, text);
  QueryResult best{0, s[0]};
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] > best.score) best = {i, s[i]};
  if (best.score < min_score)
    throw Error(ErrorKind::NoMatch, "best score " + std::to_string(best.score) + " is below " + std::to_string(min_score));
  return best;
}

namespace {

constexpr char kMagic[8] = {'V', 'S', 'R', '1', 0, 0, 0, 1};
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 8;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void put(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  bool done() const { return pos_ == data_.size(); }
  template <typename T>
  bool get(T& value) {
    if (data_.size() - pos_ < sizeof(T)) return false;
    value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      value |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return true;
  }
  bool get_bytes(std::size_t n, std::string& out) {
    if (data_.size() - pos_ < n) return false;
    out.assign(data_.substr(pos_, n));
    pos_ += n;
    return true;
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_scene(const SceneRepresentation& scene) {
  std::string body;
  for (const auto& o : scene.objects()) {
    for (int k = 0; k < 3; ++k) put(body, std::bit_cast<std::uint64_t>(o.position[k]));
    for (float x : o.embedding) put(body, std::bit_cast<std::uint32_t>(x));
    put(body, o.observation_count);
    if (o.label.size() > 0xffff) throw Error(ErrorKind::InvalidArgument, "label longer than 65535 bytes");
    put(body, static_cast<std::uint16_t>(o.label.size()));
    body += o.label;
  }
  std::string out(kMagic, sizeof kMagic);
  put(out, static_cast<std::uint32_t>(scene.dimension()));
  put(out, static_cast<std::uint32_t>(scene.size()));
  put(out, fnv1a(body));
  return out + body;
}

SceneRepresentation decode_scene(std::string_view bytes, MergeParams merge) {
  if (bytes.size() < kHeaderSize || bytes.substr(0, 8) != std::string_view(kMagic, 8))
    throw Error(ErrorKind::CorruptFile, "not a VSR1 scene file");
  Reader header(bytes.substr(8, kHeaderSize - 8));
  std::uint32_t dim = 0, count = 0;
  std::uint64_t checksum = 0;
  header.get(dim);
  header.get(count);
  header.get(checksum);
  const std::string_view body = bytes.substr(kHeaderSize);
  if (fnv1a(body) != checksum) throw Error(ErrorKind::CorruptFile, "checksum mismatch (truncated or damaged file)");
  if (dim == 0) throw Error(ErrorKind::DimensionMismatch, "header dimension is zero");

  SceneRepresentation scene(dim, merge);
  Reader r(body);
  auto mismatch = [&](std::uint32_t i) {
    return Error(ErrorKind::DimensionMismatch,
                 "record " + std::to_string(i) + " does not match header dimension " + std::to_string(dim));
  };
  for (std::uint32_t i = 0; i < count; ++i) {
    ObjectFeature o;
    for (int k = 0; k < 3; ++k) {
      std::uint64_t bits = 0;
      if (!r.get(bits)) throw mismatch(i);
      o.position[k] = std::bit_cast<double>(bits);
    }
    o.embedding.resize(dim);
    for (auto& x : o.embedding) {
      std::uint32_t bits = 0;
      if (!r.get(bits)) throw mismatch(i);
      x = std::bit_cast<float>(bits);
    }
    std::uint16_t label_len = 0;
    if (!r.get(o.observation_count) || !r.get(label_len) || !r.get_bytes(label_len, o.label)) throw mismatch(i);
    if (o.observation_count < 1 || !o.position.allFinite())
      throw Error(ErrorKind::CorruptFile, "record " + std::to_string(i) + " holds invalid values");
    scene.append(std::move(o));
  }
  if (!r.done()) throw Error(ErrorKind::DimensionMismatch, "trailing data after the last record");
  return scene;
}

void save_scene(const SceneRepresentation& scene, const std::filesystem::path& path) {
  const std::string bytes = encode_scene(scene);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

SceneRepresentation load_scene(const std::filesystem::path& path, MergeParams merge) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_scene(bytes, merge);
}

}  // namespace vsrnav
