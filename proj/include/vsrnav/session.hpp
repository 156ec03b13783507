#pragma once

// One live simulation: world, robot, scene, tour and the event log the
// console streams. Reads are concurrent; one instruction executes at a time.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "vsrnav/api.hpp"
#include "vsrnav/simworld.hpp"

namespace vsrnav {

/// Append-only, sequence numbers start at 1 and increase by one.
class EventLog {
 public:
  std::uint64_t append(std::string type, Json data);
  /// Events with seq > after, in order.
  std::vector<api::Event> since(std::uint64_t after) const;
  std::uint64_t last() const;
  /// Blocks until an event newer than `after` exists (true), the timeout
  /// passes or the log is closed (false).
  bool wait(std::uint64_t after, std::chrono::milliseconds timeout) const;
  /// Wakes every waiter; later waits return immediately.
  void close();
  bool closed() const;

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::vector<api::Event> events_;
  bool closed_ = false;
};

struct SessionOptions {
  MotionParams motion;
  double min_score = kDefaultMinScore;
  std::chrono::milliseconds step_delay{0};  // pause after each executed step
};

/// Plans coverage for the world, scans it and logs pose/detection/scan
/// events along the way.
struct ScanOutcome {
  CoveragePlan plan;
  SceneRepresentation scene;
};
ScanOutcome scan_world(const WorldSpec& world, const EmbeddingProvider& provider, EventLog* log,
                       const CoverageParams& params = {});

class Session {
 public:
  Session(WorldSpec world, SceneRepresentation scene, std::optional<CoveragePlan> plan,
          std::shared_ptr<const EmbeddingProvider> provider, std::shared_ptr<LanguageModelClient> llm,
          SessionOptions options = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  api::MapView map() const;
  api::SceneView scene() const;
  std::optional<api::TourView> tour() const;
  api::StateView state() const;
  WorldSpec world() const;
  RobotState robot() const;

  /// Throws EmptyText, EmptyScene or NoMatch. Logs a "query" event.
  api::QueryResponse query(const api::QueryRequest& request);

  /// Plans synchronously, then executes on a worker thread, logging "plan",
  /// "step", "pose" and a final "status" event. Throws Busy while another
  /// instruction runs, InvalidArgument for an unknown planner, or the
  /// planning error.
  api::InstructionResponse submit(const api::InstructionRequest& request);

  /// Blocks until no instruction is executing.
  void wait_idle();
  bool executing() const { return executing_.load(); }

  EventLog& events() { return events_; }
  /// The trace of the most recent finished execution.
  std::optional<ExecutionTrace> last_trace() const;

 private:
  void run(Plan plan);

  mutable std::mutex mutex_;
  std::condition_variable idle_;
  WorldSpec world_;
  RobotState robot_;
  const SceneRepresentation scene_;
  const std::optional<CoveragePlan> plan_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::shared_ptr<LanguageModelClient> llm_;
  SessionOptions options_;
  EventLog events_;
  std::atomic<bool> executing_{false};
  std::optional<ExecutionTrace> last_trace_;
  std::thread worker_;
};

}  // namespace vsrnav
