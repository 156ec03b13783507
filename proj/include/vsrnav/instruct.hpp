#pragma once

// Natural-language instructions to atomic action plans, and their execution
// against a scene representation and the simulated world.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsrnav/embed.hpp"
#include "vsrnav/error.hpp"
#include "vsrnav/simworld.hpp"
#include "vsrnav/vsr.hpp"

namespace vsrnav {

enum class Verb { Navigate, Pick, Place, Done };

std::string_view to_string(Verb verb) noexcept;
std::optional<Verb> parse_verb(std::string_view name) noexcept;

struct AtomicAction {
  Verb verb = Verb::Done;
  std::string argument;  // empty for Done
  friend bool operator==(const AtomicAction&, const AtomicAction&) = default;
};

enum class PlanSource { Llm, Rule };

std::string_view to_string(PlanSource source) noexcept;

struct Plan {
  std::vector<AtomicAction> actions;
  PlanSource source = PlanSource::Llm;

  /// Throws InvalidPlan naming the first broken rule: non-empty, exactly one
  /// done() and it comes last, arguments present exactly on non-done verbs,
  /// every pick after some navigate, every place after a pick with no other
  /// place in between.
  void validate() const;
  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Few-shot prompt: role preamble, the worked apple example, then the
/// instruction after the final "Task:". Throws EmptyInstruction.
std::string build_prompt(std::string_view instruction);

/// Reads actions line by line. A line holds one or more items
/// `[N.] [-*] verb("arg")[,.;]`; the verb is case-insensitive and the
/// argument may be quoted with "...", curly quotes, or ``...'' / ``..."
/// pairs. Lines that are not entirely made of items are skipped. Throws
/// NoActionsFound or InvalidPlan.
Plan parse_plan(std::string_view text, PlanSource source = PlanSource::Llm);

/// One `N. verb(``arg")` item per line; parse_plan reads it back unchanged.
std::string render_plan(const Plan& plan);

/// Offline planner over a few phrasing templates (put X on Y, find X,
/// fetch X, put away X). Throws EmptyInstruction or UnrecognizedInstruction.
Plan plan_rule_based(std::string_view instruction);

class LanguageModelClient {
 public:
  virtual ~LanguageModelClient() = default;
  /// Throws ClientError when the model cannot be reached.
  virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpModelConfig {
  std::string url;                // scheme://host[:port]
  std::string path = "/complete";
  std::string token;              // bearer token, optional
  int max_tokens = 256;
  std::chrono::milliseconds timeout{20000};
};

/// POST {path} with {"prompt","max_tokens","temperature":0}; reads {"text"}.
class HttpLanguageModel : public LanguageModelClient {
 public:
  explicit HttpLanguageModel(HttpModelConfig config);
  std::string complete(const std::string& prompt) override;

 private:
  HttpModelConfig config_;
};

/// Canned responses handed out in order; running out is a ClientError.
class ReplayLanguageModel : public LanguageModelClient {
 public:
  explicit ReplayLanguageModel(std::vector<std::string> responses);
  /// A JSON array of strings, or any other text as a single response.
  static ReplayLanguageModel from_file(const std::filesystem::path& path);

  std::string complete(const std::string& prompt) override;
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<std::string> prompts_;
};

/// Prompts the model and parses its answer. On InvalidPlan or NoActionsFound
/// the model is asked once more with the failure appended; a second failure
/// propagates. Transport failures surface as ClientError.
Plan plan_llm(std::string_view instruction, LanguageModelClient& client);

struct TraceStep {
  std::size_t action_index = 0;
  AtomicAction action;
  // Scene lookup behind the step, when it made one.
  std::optional<std::size_t> object_index;
  std::optional<double> score;
  std::optional<Eigen::Vector3d> coordinate;
  std::optional<std::string> world_object;  // id picked or placed
  std::optional<ErrorKind> error;
  std::string message;
  Pose2 pose;  // robot pose after the step
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

enum class ExecutionStatus { Success, Failed };

struct ExecutionTrace {
  std::vector<TraceStep> steps;
  ExecutionStatus status = ExecutionStatus::Failed;
  friend bool operator==(const ExecutionTrace&, const ExecutionTrace&) = default;
};

struct ExecuteOptions {
  MotionParams motion;
  double min_score = kDefaultMinScore;
  std::function<void(const TraceStep&)> on_step;
};

/// Runs the plan step by step. navigate(d) queries the scene for d and
/// drives there; pick(d) re-queries d and takes the world object nearest the
/// match; place(d) puts the held object at the location the latest navigate
/// resolved to (re-queried). Stops at the first failing step, whose error is
/// recorded in the trace.
ExecutionTrace execute(const Plan& plan, const SceneRepresentation& scene, WorldSpec& world, RobotState& robot,
                       const EmbeddingProvider& provider, const ExecuteOptions& options = {});

}  // namespace vsrnav
