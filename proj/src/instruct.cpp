#include "vsrnav/instruct.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace vsrnav {

std::string_view to_string(Verb verb) noexcept {
  switch (verb) {
    case Verb::Navigate: return "navigate";
    case Verb::Pick: return "pick";
    case Verb::Place: return "place";
    case Verb::Done: return "done";
  }
  return "done";
}

std::optional<Verb> parse_verb(std::string_view name) noexcept {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Verb v : {Verb::Navigate, Verb::Pick, Verb::Place, Verb::Done})
    if (lower == to_string(v)) return v;
  return std::nullopt;
}

std::string_view to_string(PlanSource source) noexcept { return source == PlanSource::Rule ? "rule" : "llm"; }

void Plan::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidPlan, why); };
  if (actions.empty()) fail("plan is empty");
  if (actions.back().verb != Verb::Done) fail("plan must end with done()");
  bool navigated = false, holding = false;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    const std::string at = "step " + std::to_string(i + 1) + ": ";
    if (a.verb == Verb::Done) {
      if (i + 1 != actions.size()) fail(at + "done() must appear exactly once, as the last step");
      if (!a.argument.empty()) fail(at + "done() takes no argument");
      continue;
    }
    if (a.argument.empty()) fail(at + std::string(to_string(a.verb)) + " needs an argument");
    switch (a.verb) {
      case Verb::Navigate: navigated = true; break;
      case Verb::Pick:
        if (!navigated) fail(at + "pick must come after a navigate");
        holding = true;
        break;
      case Verb::Place:
        if (!holding) fail(at + "place must follow a pick with no other place in between");
        holding = false;
        break;
      case Verb::Done: break;
    }
  }
}

std::string build_prompt(std::string_view instruction) {
  const auto first = instruction.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw Error(ErrorKind::EmptyInstruction, "instruction is empty");
  const auto last = instruction.find_last_not_of(" \t\r\n");
  std::string prompt =
      "Suppose you are a robot that your actions are limited to picking up items with pick(object), placing down "
      "items with place(object) and move to object objects or locations with navigate(object). \n"
      "Task: Put the apple on the wooden desk.\n"
      "Explanation: The task could be done by first finding the apple, then moving to the table, finally putting "
      "down the apple.\n"
      "Plan: 1. navigate(``apple\"), 2. pick(``apple\"), \n"
      "3. navigate(``wooden desk\"), 4. place(``apple\"), \n"
      "5. done(). \n"
      "Task: ";
  prompt += instruction.substr(first, last - first + 1);
  prompt += "\nPlan:";
  return prompt;
}

namespace {

// Quote marks, longest first so `` wins over a lone backtick.
constexpr std::array<std::string_view, 6> kOpeners{"``", "''", "“", "‘", "\"", "'"};
constexpr std::array<std::string_view, 5> kClosers{"''", "”", "’", "\"", "'"};

class LineReader {
 public:
  explicit LineReader(std::string_view line) : s_(line) {}

  bool done() {
    skip_spaces();
    return pos_ >= s_.size();
  }

  void skip_label() {
    skip_spaces();
    if (s_.size() - pos_ >= 5) {
      std::string head(s_.substr(pos_, 5));
      for (char& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (head == "plan:") pos_ += 5;
    }
  }

  std::optional<AtomicAction> item() {
    skip_spaces();
    const std::size_t digits = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ > digits) {
      if (pos_ >= s_.size() || (s_[pos_] != '.' && s_[pos_] != ')')) return std::nullopt;
      ++pos_;
      skip_spaces();
    }
    if (eat("-") || eat("*") || eat("•")) skip_spaces();

    const std::size_t word = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const auto verb = parse_verb(s_.substr(word, pos_ - word));
    if (!verb) return std::nullopt;
    skip_spaces();
    if (!eat("(")) return std::nullopt;
    skip_spaces();

    AtomicAction action{*verb, {}};
    if (!eat(")")) {
      bool opened = false;
      for (auto q : kOpeners)
        if (eat(q)) {
          opened = true;
          break;
        }
      if (!opened) return std::nullopt;
      // The argument ends at the first closing quote followed by ')'.
      std::optional<std::size_t> end;
      for (std::size_t i = pos_; i < s_.size() && !end; ++i)
        for (auto q : kClosers) {
          if (s_.substr(i, q.size()) != q) continue;
          std::size_t j = i + q.size();
          while (j < s_.size() && (s_[j] == ' ' || s_[j] == '\t')) ++j;
          if (j < s_.size() && s_[j] == ')') {
            end = i;
            action.argument = trim(s_.substr(pos_, i - pos_));
            pos_ = j + 1;
            break;
          }
        }
      if (!end) return std::nullopt;
    }
    skip_spaces();
    if (pos_ < s_.size() && (s_[pos_] == ',' || s_[pos_] == '.' || s_[pos_] == ';')) ++pos_;
    return action;
  }

 private:
  void skip_spaces() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool eat(std::string_view token) {
    if (s_.substr(pos_, token.size()) != token) return false;
    pos_ += token.size();
    return true;
  }
  static std::string trim(std::string_view v) {
    const auto a = v.find_first_not_of(" \t");
    if (a == std::string_view::npos) return {};
    return std::string(v.substr(a, v.find_last_not_of(" \t") - a + 1));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Plan parse_plan(std::string_view text, PlanSource source) {
  Plan plan;
  plan.source = source;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', start), text.size());
    LineReader line(text.substr(start, nl - start));
    line.skip_label();
    std::vector<AtomicAction> found;
    bool clean = true;
    while (!line.done()) {
      auto a = line.item();
      if (!a) {
        clean = false;
        break;
      }
      found.push_back(std::move(*a));
    }
    if (clean) plan.actions.insert(plan.actions.end(), found.begin(), found.end());
    start = nl + 1;
  }
  if (plan.actions.empty()) throw Error(ErrorKind::NoActionsFound, "no navigate/pick/place/done actions in the text");
  plan.validate();
  return plan;
}

std::string render_plan(const Plan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const auto& a = plan.actions[i];
    out += std::to_string(i + 1) + ". " + std::string(to_string(a.verb)) + "(";
    if (!a.argument.empty()) out += "``" + a.argument + "\"";
    out += ")\n";
  }
  return out;
}

namespace {

std::string normalize_instruction(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?')) out.pop_back();
  for (std::string_view lead : {"please ", "robot, "})
    if (out.starts_with(lead)) out.erase(0, lead.size());
  if (out.ends_with(" please")) out.resize(out.size() - 7);
  return out;
}

std::string strip_article(std::string s) {
  for (std::string_view a : {"the ", "a ", "an ", "some "}) {
    if (s.starts_with(a)) return s.substr(a.size());
    if (s == a.substr(0, a.size() - 1)) return {};
  }
  return s;
}

// Rest of `s` after one of the prefixes, if any.
std::optional<std::string> after_prefix(const std::string& s, std::initializer_list<std::string_view> prefixes) {
  for (auto p : prefixes)
    if (s.starts_with(p)) return s.substr(p.size());
  return std::nullopt;
}

// "X <sep> Y" split at the earliest separator.
std::optional<std::pair<std::string, std::string>> split_target(const std::string& s) {
  std::size_t best = std::string::npos, len = 0;
  for (std::string_view sep : {" onto ", " into ", " on ", " in ", " to "}) {
    const auto at = s.find(sep);
    if (at != std::string::npos && at < best) {
      best = at;
      len = sep.size();
    }
  }
  if (best == std::string::npos) return std::nullopt;
  return std::pair{strip_article(s.substr(0, best)), strip_article(s.substr(best + len))};
}

}  // namespace

Plan plan_rule_based(std::string_view instruction) {
  const std::string s = normalize_instruction(instruction);
  if (s.empty()) throw Error(ErrorKind::EmptyInstruction, "instruction is empty");
  Plan plan;
  plan.source = PlanSource::Rule;
  auto emit = [&](std::initializer_list<AtomicAction> actions) {
    plan.actions = actions;
    for (const auto& a : plan.actions)
      if (a.verb != Verb::Done && a.argument.empty())
        throw Error(ErrorKind::UnrecognizedInstruction, "missing object in '" + std::string(instruction) + "'");
    plan.validate();
    return plan;
  };
  auto move_to = [&](const std::string& x, const std::string& y) {
    return emit({{Verb::Navigate, x}, {Verb::Pick, x}, {Verb::Navigate, y}, {Verb::Place, x}, {Verb::Done, {}}});
  };

  if (auto rest = after_prefix(s, {"go to ", "navigate to ", "move to ", "find ", "locate "}))
    return emit({{Verb::Navigate, strip_article(*rest)}, {Verb::Done, {}}});
  if (auto rest = after_prefix(s, {"put away ", "tidy up ", "tidy away "}))
    return move_to(strip_article(*rest), "appropriate storage location");
  if (auto rest = after_prefix(s, {"put ", "move ", "throw ", "place "})) {
    if (auto xy = split_target(*rest)) return move_to(xy->first, xy->second);
  }
  if (auto rest = after_prefix(s, {"fetch ", "bring ", "grab ", "pick up ", "get "})) {
    std::string x = *rest;
    if (x.starts_with("me ")) x.erase(0, 3);
    if (auto xy = split_target(x); xy && !s.starts_with("pick up")) return move_to(xy->first, xy->second);
    return emit({{Verb::Navigate, strip_article(x)}, {Verb::Pick, strip_article(x)}, {Verb::Done, {}}});
  }
  throw Error(ErrorKind::UnrecognizedInstruction, "no template matches '" + std::string(instruction) + "'");
}

ReplayLanguageModel::ReplayLanguageModel(std::vector<std::string> responses) : responses_(std::move(responses)) {}

ReplayLanguageModel ReplayLanguageModel::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_array() && std::all_of(doc.begin(), doc.end(), [](const auto& j) { return j.is_string(); }))
    return ReplayLanguageModel(doc.get<std::vector<std::string>>());
  return ReplayLanguageModel({text});
}

std::string ReplayLanguageModel::complete(const std::string& prompt) {
  prompts_.push_back(prompt);
  if (next_ >= responses_.size()) throw Error(ErrorKind::ClientError, "replay client has no responses left");
  return responses_[next_++];
}

namespace {

std::string call_model(LanguageModelClient& client, const std::string& prompt) {
  try {
    return client.complete(prompt);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ClientError) throw;
    throw Error(ErrorKind::ClientError, std::string(to_string(e.kind())) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ClientError, e.what());
  }
}

}  // namespace

Plan plan_llm(std::string_view instruction, LanguageModelClient& client) {
  std::string prompt = build_prompt(instruction);
  for (int attempt = 0;; ++attempt) {
    const std::string text = call_model(client, prompt);
    try {
      return parse_plan(text, PlanSource::Llm);
    } catch (const Error& e) {
      const bool retryable = e.kind() == ErrorKind::InvalidPlan || e.kind() == ErrorKind::NoActionsFound;
      if (!retryable || attempt > 0) throw;
      prompt += " " + text + "\nThat plan was rejected (" + e.what() +
                "). Use only navigate, pick, place and done, one per line, and finish with done().\nPlan:";
    }
  }
}

ExecutionTrace execute(const Plan& plan, const SceneRepresentation& scene, WorldSpec& world, RobotState& robot,
                       const EmbeddingProvider& provider, const ExecuteOptions& options) {
  plan.validate();
  ExecutionTrace trace;
  std::optional<std::string> destination;  // description behind the latest navigate

  auto resolve = [&](const std::string& description, TraceStep& step) {
    const QueryResult hit = query(scene, provider.embed_text(description), options.min_score);
    step.object_index = hit.index;
    step.score = hit.score;
    step.coordinate = scene.objects()[hit.index].position;
    return *step.coordinate;
  };

  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const AtomicAction& a = plan.actions[i];
    TraceStep step;
    step.action_index = i;
    step.action = a;
    try {
      switch (a.verb) {
        case Verb::Navigate: {
          const Eigen::Vector3d goal = resolve(a.argument, step);
          robot = navigate_to(world, robot, {goal.x(), goal.y()}, options.motion).state;
          destination = a.argument;
          break;
        }
        case Verb::Pick: {
          const Eigen::Vector3d near = resolve(a.argument, step);
          const WorldObject* best = nullptr;
          double best_d = std::numeric_limits<double>::infinity();
          for (const auto& o : world.objects)
            if (const double d = (o.position - near).norm(); d < best_d) {
              best_d = d;
              best = &o;
            }
          if (!best) throw Error(ErrorKind::UnknownObject, "the world holds no objects");
          step.world_object = best->id;
          pick(world, robot, best->id, options.motion);
          break;
        }
        case Verb::Place: {
          if (robot.holding) step.world_object = *robot.holding;
          if (!robot.holding) throw Error(ErrorKind::HandEmpty, "nothing to place");
          const Eigen::Vector3d target = resolve(*destination, step);
          place(world, robot, target, options.motion);
          break;
        }
        case Verb::Done: break;
      }
    } catch (const Error& e) {
      step.error = e.kind();
      step.message = e.what();
    }
    step.pose = robot.pose;
    trace.steps.push_back(step);
    if (options.on_step) options.on_step(trace.steps.back());
    if (step.error) return trace;
    if (a.verb == Verb::Done) trace.status = ExecutionStatus::Success;
  }
  return trace;
}

}  // namespace vsrnav
