#pragma once

// JSON shapes shared by the CLI output files and the HTTP API. Every type
// below converts both ways, and parse(serialize(x)) == x.

#include <array>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "vsrnav/coverage.hpp"
#include "vsrnav/error.hpp"
#include "vsrnav/instruct.hpp"
#include "vsrnav/vsr.hpp"

namespace vsrnav {

using Json = nlohmann::json;

// Domain types with a direct JSON form.
void to_json(Json& j, const Pose2& p);
void from_json(const Json& j, Pose2& p);
void to_json(Json& j, const AtomicAction& a);
void from_json(const Json& j, AtomicAction& a);
void to_json(Json& j, const Plan& p);
void from_json(const Json& j, Plan& p);
void to_json(Json& j, const TraceStep& s);
void from_json(const Json& j, TraceStep& s);
void to_json(Json& j, const ExecutionTrace& t);
void from_json(const Json& j, ExecutionTrace& t);

std::optional<ErrorKind> parse_error_kind(std::string_view name) noexcept;

namespace api {

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;

/// Grid metadata plus run-length encoded raw cell values, row-major from
/// row 0 (the bottom row): runs of [value, count].
struct MapView {
  int width = 0;
  int height = 0;
  double resolution = 0.05;
  Pose2 origin;
  std::uint8_t threshold = 128;
  std::optional<std::uint8_t> unknown_value;
  std::vector<std::array<std::uint32_t, 2>> runs;
  friend bool operator==(const MapView&, const MapView&) = default;
};

MapView map_view(const OccupancyGrid& grid, std::uint8_t threshold);
/// Throws InvalidArgument when the runs do not cover the grid exactly.
OccupancyGrid decode_map(const MapView& view);

struct SceneObjectView {
  std::size_t index = 0;
  std::string label;
  Point3 position{};
  std::uint32_t observation_count = 0;
  friend bool operator==(const SceneObjectView&, const SceneObjectView&) = default;
};

struct SceneView {
  std::size_t dimension = 0;
  std::vector<SceneObjectView> objects;
  friend bool operator==(const SceneView&, const SceneView&) = default;
};

SceneView scene_view(const SceneRepresentation& scene);

struct NodeView {
  int id = 0;
  Point2 position{};
  std::optional<int> polygon;
  int ring_index = 0;
  friend bool operator==(const NodeView&, const NodeView&) = default;
};

struct TourView {
  std::vector<int> order;
  double total_cost = 0.0;
  std::vector<NodeView> nodes;
  std::vector<std::vector<Point2>> rings;
  std::vector<std::vector<Point2>> obstacles;
  std::vector<std::vector<Point2>> segment_paths;
  friend bool operator==(const TourView&, const TourView&) = default;
};

TourView tour_view(const CoveragePlan& plan);
Tour to_tour(const TourView& view);

/// Map drawing with obstacles, rings, the tour with direction arrows, and
/// the start as a blue dot.
std::string tour_svg(const OccupancyGrid& grid, std::uint8_t threshold, const TourView& tour);

struct StateView {
  Pose2 pose;
  std::optional<std::string> holding;
  bool executing = false;
  std::uint64_t last_event = 0;
  friend bool operator==(const StateView&, const StateView&) = default;
};

struct QueryRequest {
  std::string text;
  friend bool operator==(const QueryRequest&, const QueryRequest&) = default;
};

struct QueryResponse {
  std::size_t index = 0;
  std::string label;
  Point3 position{};
  double score = 0.0;
  friend bool operator==(const QueryResponse&, const QueryResponse&) = default;
};

struct InstructionRequest {
  std::string text;
  std::string planner = "rule";  // rule | llm
  friend bool operator==(const InstructionRequest&, const InstructionRequest&) = default;
};

struct InstructionResponse {
  Plan plan;
  friend bool operator==(const InstructionResponse&, const InstructionResponse&) = default;
};

struct ErrorResponse {
  std::string error;  // ErrorKind name, or a transport-level code
  std::string message;
  friend bool operator==(const ErrorResponse&, const ErrorResponse&) = default;
};

/// One entry of the session event log.
struct Event {
  std::uint64_t seq = 0;
  std::string type;  // pose | detection | scan | plan | step | query | status | error
  std::int64_t time_ms = 0;
  Json data;
  friend bool operator==(const Event&, const Event&) = default;
};

/// "id: ..\nevent: ..\ndata: ..\n\n".
std::string sse_frame(const Event& event);

void to_json(Json& j, const MapView& v);
void from_json(const Json& j, MapView& v);
void to_json(Json& j, const SceneObjectView& v);
void from_json(const Json& j, SceneObjectView& v);
void to_json(Json& j, const SceneView& v);
void from_json(const Json& j, SceneView& v);
void to_json(Json& j, const NodeView& v);
void from_json(const Json& j, NodeView& v);
void to_json(Json& j, const TourView& v);
void from_json(const Json& j, TourView& v);
void to_json(Json& j, const StateView& v);
void from_json(const Json& j, StateView& v);
void to_json(Json& j, const QueryRequest& v);
void from_json(const Json& j, QueryRequest& v);
void to_json(Json& j, const QueryResponse& v);
void from_json(const Json& j, QueryResponse& v);
void to_json(Json& j, const InstructionRequest& v);
void from_json(const Json& j, InstructionRequest& v);
void to_json(Json& j, const InstructionResponse& v);
void from_json(const Json& j, InstructionResponse& v);
void to_json(Json& j, const ErrorResponse& v);
void from_json(const Json& j, ErrorResponse& v);
void to_json(Json& j, const Event& v);
void from_json(const Json& j, Event& v);

}  // namespace api
}  // namespace vsrnav
