#include "vsrnav/session.hpp"

#include "vsrnav/error.hpp"

namespace vsrnav {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

api::Point3 point3(const Eigen::Vector3d& p) { return {p.x(), p.y(), p.z()}; }

}  // namespace

std::uint64_t EventLog::append(std::string type, Json data) {
  std::uint64_t seq;
  {
    std::lock_guard lock(mutex_);
    seq = events_.size() + 1;
    events_.push_back({seq, std::move(type), now_ms(), std::move(data)});
  }
  changed_.notify_all();
  return seq;
}

std::vector<api::Event> EventLog::since(std::uint64_t after) const {
  std::lock_guard lock(mutex_);
  if (after >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::uint64_t EventLog::last() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

bool EventLog::wait(std::uint64_t after, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > after; });
  return !closed_ && events_.size() > after;
}

void EventLog::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  changed_.notify_all();
}

bool EventLog::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

ScanOutcome scan_world(const WorldSpec& world, const EmbeddingProvider& provider, EventLog* log,
                       const CoverageParams& params) {
  CoveragePlan plan = plan_coverage(world.grid, params, world.start.position());
  if (log) log->append("tour", {{"nodes", plan.graph.size()}, {"total_cost", plan.tour.total_cost}});
  ScanOptions opts;
  if (log)
    opts.on_frame = [&](const ScanFrame& f) {
      log->append("pose", {{"pose", f.pose}, {"frame", f.index}});
      for (const auto& d : f.detections)
        log->append("detection", {{"frame", f.index}, {"label", d.label}, {"u", d.u}, {"v", d.v}, {"depth", d.depth}});
    };
  ScanResult scan = run_coverage_scan(world, plan.tour, CameraModel{}, provider, opts);
  if (log) log->append("scan", {{"frames", scan.frames}, {"objects", scan.scene.size()}});
  return {std::move(plan), std::move(scan.scene)};
}

Session::Session(WorldSpec world, SceneRepresentation scene, std::optional<CoveragePlan> plan,
                 std::shared_ptr<const EmbeddingProvider> provider, std::shared_ptr<LanguageModelClient> llm,
                 SessionOptions options)
    : world_(std::move(world)),
      robot_{world_.start, std::nullopt},
      scene_(std::move(scene)),
      plan_(std::move(plan)),
      provider_(std::move(provider)),
      llm_(std::move(llm)),
      options_(options) {
  if (!provider_) throw Error(ErrorKind::InvalidArgument, "session needs an embedding provider");
  if (world_.carried) robot_.holding = world_.carried->id;
}

Session::~Session() {
  if (worker_.joinable()) worker_.join();
}

api::MapView Session::map() const {
  std::lock_guard lock(mutex_);
  return api::map_view(world_.grid, world_.threshold);
}

api::SceneView Session::scene() const { return api::scene_view(scene_); }

std::optional<api::TourView> Session::tour() const {
  if (!plan_) return std::nullopt;
  return api::tour_view(*plan_);
}

api::StateView Session::state() const {
  std::lock_guard lock(mutex_);
  return {robot_.pose, robot_.holding, executing_.load(), events_.last()};
}

WorldSpec Session::world() const {
  std::lock_guard lock(mutex_);
  return world_;
}

RobotState Session::robot() const {
  std::lock_guard lock(mutex_);
  return robot_;
}

api::QueryResponse Session::query(const api::QueryRequest& request) {
  const Embedding text = provider_->embed_text(request.text);
  const QueryResult hit = vsrnav::query(scene_, text, options_.min_score);
  const auto& o = scene_.objects()[hit.index];
  api::QueryResponse out{hit.index, o.label, point3(o.position), hit.score};
  events_.append("query", {{"text", request.text}, {"result", out}});
  return out;
}

api::InstructionResponse Session::submit(const api::InstructionRequest& request) {
  if (request.planner != "rule" && request.planner != "llm")
    throw Error(ErrorKind::InvalidArgument, "planner must be 'rule' or 'llm', got '" + request.planner + "'");
  bool expected = false;
  if (!executing_.compare_exchange_strong(expected, true))
    throw Error(ErrorKind::Busy, "an instruction is already executing");
  Plan plan;
  try {
    if (request.planner == "rule") {
      plan = plan_rule_based(request.text);
    } else {
      if (!llm_) throw Error(ErrorKind::ClientError, "no language model configured");
      plan = plan_llm(request.text, *llm_);
    }
  } catch (const Error& e) {
    events_.append("error", {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}});
    {
      std::lock_guard lock(mutex_);
      executing_ = false;
    }
    idle_.notify_all();
    throw;
  }
  events_.append("plan", {{"instruction", request.text}, {"plan", plan}});
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread([this, plan] { run(plan); });
  return {plan};
}

void Session::run(Plan plan) {
  WorldSpec world;
  RobotState robot;
  {
    std::lock_guard lock(mutex_);
    world = world_;
    robot = robot_;
  }
  ExecuteOptions opts;
  opts.motion = options_.motion;
  opts.min_score = options_.min_score;
  opts.on_step = [&](const TraceStep& step) {
    {
      std::lock_guard lock(mutex_);
      world_ = world;
      robot_ = robot;
    }
    events_.append("step", step);
    events_.append("pose", {{"pose", robot.pose}, {"holding", robot.holding ? Json(*robot.holding) : Json(nullptr)}});
    if (options_.step_delay.count() > 0) std::this_thread::sleep_for(options_.step_delay);
  };
  ExecutionTrace trace;
  try {
    trace = execute(plan, scene_, world, robot, *provider_, opts);
  } catch (const Error& e) {
    events_.append("error", {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}});
  }
  events_.append("status", {{"status", trace.status == ExecutionStatus::Success ? "success" : "failed"},
                            {"steps", trace.steps.size()}});
  {
    std::lock_guard lock(mutex_);
    last_trace_ = trace;
    executing_ = false;
  }
  idle_.notify_all();
}

void Session::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [&] { return !executing_.load(); });
}

std::optional<ExecutionTrace> Session::last_trace() const {
  std::lock_guard lock(mutex_);
  return last_trace_;
}

}  // namespace vsrnav
