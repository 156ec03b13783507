#include "vsrnav/api.hpp"

#include <sstream>

namespace vsrnav {

namespace {

api::Point2 point(Vec2 p) { return {p.x, p.y}; }

std::vector<api::Point2> points(const std::vector<Vec2>& line) {
  std::vector<api::Point2> out;
  out.reserve(line.size());
  for (const Vec2 p : line) out.push_back(point(p));
  return out;
}

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const Json& j, const char* key, std::optional<T>& v) {
  v.reset();
  if (j.contains(key) && !j.at(key).is_null()) v = j.at(key).get<T>();
}

}  // namespace

std::optional<ErrorKind> parse_error_kind(std::string_view name) noexcept {
  for (int k = 0; k <= static_cast<int>(ErrorKind::Busy); ++k)
    if (to_string(static_cast<ErrorKind>(k)) == name) return static_cast<ErrorKind>(k);
  return std::nullopt;
}

void to_json(Json& j, const Pose2& p) { j = Json{{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }
void from_json(const Json& j, Pose2& p) {
  p = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>()};
}

void to_json(Json& j, const AtomicAction& a) {
  j = Json{{"verb", std::string(to_string(a.verb))}};
  if (a.verb != Verb::Done) j["argument"] = a.argument;
}
void from_json(const Json& j, AtomicAction& a) {
  const auto verb = parse_verb(j.at("verb").get<std::string>());
  if (!verb) throw Json::other_error::create(501, "unknown verb " + j.at("verb").dump(), &j);
  a.verb = *verb;
  a.argument = j.value("argument", std::string{});
}

void to_json(Json& j, const Plan& p) {
  j = Json{{"actions", p.actions}, {"source", std::string(to_string(p.source))}};
}
void from_json(const Json& j, Plan& p) {
  p.actions = j.at("actions").get<std::vector<AtomicAction>>();
  const std::string source = j.at("source").get<std::string>();
  if (source != "llm" && source != "rule") throw Json::other_error::create(501, "unknown plan source " + source, &j);
  p.source = source == "rule" ? PlanSource::Rule : PlanSource::Llm;
}

void to_json(Json& j, const TraceStep& s) {
  j = Json{{"index", s.action_index}, {"action", s.action}, {"message", s.message}, {"pose", s.pose}};
  put_optional(j, "object_index", s.object_index);
  put_optional(j, "score", s.score);
  if (s.coordinate) j["coordinate"] = {s.coordinate->x(), s.coordinate->y(), s.coordinate->z()};
  put_optional(j, "world_object", s.world_object);
  j["outcome"] = s.error ? std::string(to_string(*s.error)) : std::string("ok");
}
void from_json(const Json& j, TraceStep& s) {
  s.action_index = j.at("index").get<std::size_t>();
  s.action = j.at("action").get<AtomicAction>();
  s.message = j.at("message").get<std::string>();
  s.pose = j.at("pose").get<Pose2>();
  get_optional(j, "object_index", s.object_index);
  get_optional(j, "score", s.score);
  s.coordinate.reset();
  if (j.contains("coordinate")) {
    const auto c = j.at("coordinate").get<std::array<double, 3>>();
    s.coordinate = Eigen::Vector3d(c[0], c[1], c[2]);
  }
  get_optional(j, "world_object", s.world_object);
  const std::string outcome = j.at("outcome").get<std::string>();
  s.error.reset();
  if (outcome != "ok") {
    s.error = parse_error_kind(outcome);
    if (!s.error) throw Json::other_error::create(501, "unknown outcome " + outcome, &j);
  }
}

void to_json(Json& j, const ExecutionTrace& t) {
  j = Json{{"steps", t.steps}, {"status", t.status == ExecutionStatus::Success ? "success" : "failed"}};
}
void from_json(const Json& j, ExecutionTrace& t) {
  t.steps = j.at("steps").get<std::vector<TraceStep>>();
  t.status = j.at("status").get<std::string>() == "success" ? ExecutionStatus::Success : ExecutionStatus::Failed;
}

namespace api {

MapView map_view(const OccupancyGrid& grid, std::uint8_t threshold) {
  MapView v;
  v.width = grid.info.width;
  v.height = grid.info.height;
  v.resolution = grid.info.resolution;
  v.origin = grid.info.origin;
  v.threshold = threshold;
  v.unknown_value = grid.unknown_value;
  for (const std::uint8_t c : grid.cells) {
    if (!v.runs.empty() && v.runs.back()[0] == c)
      ++v.runs.back()[1];
    else
      v.runs.push_back({c, 1});
  }
  return v;
}

OccupancyGrid decode_map(const MapView& v) {
  OccupancyGrid g;
  g.info.width = v.width;
  g.info.height = v.height;
  g.info.resolution = v.resolution;
  g.info.origin = v.origin;
  g.info.validate();
  g.unknown_value = v.unknown_value;
  g.cells.reserve(g.info.size());
  for (const auto& [value, count] : v.runs) {
    if (value > 255 || g.cells.size() + count > g.info.size())
      throw Error(ErrorKind::InvalidArgument, "map runs overflow the grid");
    g.cells.insert(g.cells.end(), count, static_cast<std::uint8_t>(value));
  }
  if (g.cells.size() != g.info.size()) throw Error(ErrorKind::InvalidArgument, "map runs do not cover the grid");
  return g;
}

SceneView scene_view(const SceneRepresentation& scene) {
  SceneView v;
  v.dimension = scene.dimension();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& o = scene.objects()[i];
    v.objects.push_back({i, o.label, {o.position.x(), o.position.y(), o.position.z()}, o.observation_count});
  }
  return v;
}

TourView tour_view(const CoveragePlan& plan) {
  TourView v;
  v.order = plan.tour.order;
  v.total_cost = plan.tour.total_cost;
  for (const auto& n : plan.graph.nodes) v.nodes.push_back({n.id, point(n.position), n.polygon_id, n.ring_index});
  for (const auto& r : plan.rings) v.rings.push_back(points(r.vertices));
  for (const auto& o : plan.obstacles) v.obstacles.push_back(points(o.vertices));
  for (const auto& p : plan.tour.segment_paths) v.segment_paths.push_back(points(p));
  return v;
}

Tour to_tour(const TourView& v) {
  Tour t;
  t.order = v.order;
  t.total_cost = v.total_cost;
  for (const auto& seg : v.segment_paths) {
    Polyline p;
    for (const auto& q : seg) p.push_back({q[0], q[1]});
    t.segment_paths.push_back(std::move(p));
  }
  return t;
}

std::string tour_svg(const OccupancyGrid& grid, std::uint8_t threshold, const TourView& tour) {
  const BinaryGrid b = binarize(grid, threshold);
  const double res = grid.info.resolution;
  const double w = grid.info.width * res, h = grid.info.height * res;
  const double ox = grid.info.origin.x, oy = grid.info.origin.y;
  std::ostringstream s;
  s.precision(6);
  auto xy = [&](const Point2& p) {
    std::ostringstream o;
    o.precision(6);
    o << (p[0] - ox) << ',' << (h - (p[1] - oy));
    return o.str();
  };
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w << ' ' << h << "\" width=\""
    << grid.info.width * 4 << "\" height=\"" << grid.info.height * 4 << "\">\n"
    << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"5\" refY=\"5\" markerWidth=\"4\" markerHeight=\"4\" "
       "orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#d62728\"/></marker></defs>\n"
    << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n<g fill=\"#444444\">\n";
  for (int r = 0; r < grid.info.height; ++r)
    for (int c = 0; c < grid.info.width;) {
      if (!b.obstacle({c, r})) {
        ++c;
        continue;
      }
      int end = c;
      while (end < grid.info.width && b.obstacle({end, r})) ++end;
      s << "<rect x=\"" << c * res << "\" y=\"" << h - (r + 1) * res << "\" width=\"" << (end - c) * res
        << "\" height=\"" << res << "\"/>\n";
      c = end;
    }
  s << "</g>\n";
  for (const auto& ring : tour.rings) {
    s << "<polygon fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.02\" stroke-dasharray=\"0.06 0.04\" points=\"";
    for (const auto& p : ring) s << xy(p) << ' ';
    s << "\"/>\n";
  }
  for (const auto& seg : tour.segment_paths) {
    s << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"0.03\" marker-mid=\"url(#arrow)\" "
         "marker-end=\"url(#arrow)\" points=\"";
    for (const auto& p : seg) s << xy(p) << ' ';
    s << "\"/>\n";
  }
  if (!tour.nodes.empty()) {
    const auto start = xy(tour.nodes.front().position);
    const auto comma = start.find(',');
    s << "<circle cx=\"" << start.substr(0, comma) << "\" cy=\"" << start.substr(comma + 1)
      << "\" r=\"0.08\" fill=\"#1f3fff\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string sse_frame(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + Json(e).dump() + "\n\n";
}

void to_json(Json& j, const MapView& v) {
  j = Json{{"width", v.width},         {"height", v.height}, {"resolution", v.resolution},
           {"origin", v.origin},       {"threshold", v.threshold}, {"runs", v.runs}};
  put_optional(j, "unknown_value", v.unknown_value);
}
void from_json(const Json& j, MapView& v) {
  v.width = j.at("width").get<int>();
  v.height = j.at("height").get<int>();
  v.resolution = j.at("resolution").get<double>();
  v.origin = j.at("origin").get<Pose2>();
  v.threshold = j.at("threshold").get<std::uint8_t>();
  get_optional(j, "unknown_value", v.unknown_value);
  v.runs = j.at("runs").get<std::vector<std::array<std::uint32_t, 2>>>();
}

void to_json(Json& j, const SceneObjectView& v) {
  j = Json{{"index", v.index}, {"label", v.label}, {"position", v.position}, {"observation_count", v.observation_count}};
}
void from_json(const Json& j, SceneObjectView& v) {
  v.index = j.at("index").get<std::size_t>();
  v.label = j.at("label").get<std::string>();
  v.position = j.at("position").get<Point3>();
  v.observation_count = j.at("observation_count").get<std::uint32_t>();
}

void to_json(Json& j, const SceneView& v) { j = Json{{"dimension", v.dimension}, {"objects", v.objects}}; }
void from_json(const Json& j, SceneView& v) {
  v.dimension = j.at("dimension").get<std::size_t>();
  v.objects = j.at("objects").get<std::vector<SceneObjectView>>();
}

void to_json(Json& j, const NodeView& v) {
  j = Json{{"id", v.id}, {"position", v.position}, {"ring_index", v.ring_index}};
  put_optional(j, "polygon", v.polygon);
}
void from_json(const Json& j, NodeView& v) {
  v.id = j.at("id").get<int>();
  v.position = j.at("position").get<Point2>();
  v.ring_index = j.at("ring_index").get<int>();
  get_optional(j, "polygon", v.polygon);
}

void to_json(Json& j, const TourView& v) {
  j = Json{{"order", v.order},         {"total_cost", v.total_cost}, {"nodes", v.nodes},
           {"rings", v.rings},         {"obstacles", v.obstacles},   {"segment_paths", v.segment_paths}};
}
void from_json(const Json& j, TourView& v) {
  v.order = j.at("order").get<std::vector<int>>();
  v.total_cost = j.at("total_cost").get<double>();
  v.nodes = j.value("nodes", std::vector<NodeView>{});
  v.rings = j.value("rings", std::vector<std::vector<Point2>>{});
  v.obstacles = j.value("obstacles", std::vector<std::vector<Point2>>{});
  v.segment_paths = j.at("segment_paths").get<std::vector<std::vector<Point2>>>();
}

void to_json(Json& j, const StateView& v) {
  j = Json{{"pose", v.pose}, {"executing", v.executing}, {"last_event", v.last_event}};
  j["holding"] = v.holding ? Json(*v.holding) : Json(nullptr);
}
void from_json(const Json& j, StateView& v) {
  v.pose = j.at("pose").get<Pose2>();
  v.executing = j.at("executing").get<bool>();
  v.last_event = j.at("last_event").get<std::uint64_t>();
  get_optional(j, "holding", v.holding);
}

void to_json(Json& j, const QueryRequest& v) { j = Json{{"text", v.text}}; }
void from_json(const Json& j, QueryRequest& v) { v.text = j.at("text").get<std::string>(); }

void to_json(Json& j, const QueryResponse& v) {
  j = Json{{"index", v.index}, {"label", v.label}, {"position", v.position}, {"score", v.score}};
}
void from_json(const Json& j, QueryResponse& v) {
  v.index = j.at("index").get<std::size_t>();
  v.label = j.value("label", std::string{});
  v.position = j.at("position").get<Point3>();
  v.score = j.at("score").get<double>();
}

void to_json(Json& j, const InstructionRequest& v) { j = Json{{"text", v.text}, {"planner", v.planner}}; }
void from_json(const Json& j, InstructionRequest& v) {
  v.text = j.at("text").get<std::string>();
  v.planner = j.value("planner", std::string("rule"));
}

void to_json(Json& j, const InstructionResponse& v) {
  j = Json{{"plan", v.plan.actions}, {"source", std::string(to_string(v.plan.source))}};
}
void from_json(const Json& j, InstructionResponse& v) {
  v.plan = Json{{"actions", j.at("plan")}, {"source", j.at("source")}}.get<Plan>();
}

void to_json(Json& j, const ErrorResponse& v) { j = Json{{"error", v.error}, {"message", v.message}}; }
void from_json(const Json& j, ErrorResponse& v) {
  v.error = j.at("error").get<std::string>();
  v.message = j.at("message").get<std::string>();
}

void to_json(Json& j, const Event& v) {
  j = Json{{"seq", v.seq}, {"type", v.type}, {"time_ms", v.time_ms}, {"data", v.data}};
}
void from_json(const Json& j, Event& v) {
  v.seq = j.at("seq").get<std::uint64_t>();
  v.type = j.at("type").get<std::string>();
  v.time_ms = j.at("time_ms").get<std::int64_t>();
  v.data = j.at("data");
}

}  // namespace api
}  // namespace vsrnav
