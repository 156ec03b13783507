// vsrnav headers (Eigen) before httplib, see remote_embedder.cpp.
#include "vsrnav/instruct.hpp"

#include <doctest.h>
#include <httplib.h>

#include <json.hpp>
#include <random>
#include <set>
#include <thread>

#include "map_fixtures.hpp"
#include "plan_fixtures.hpp"
#include "vsrnav/coverage.hpp"

using namespace vsrnav;
using oracle::apple_plan;
using oracle::kApplePlanLine;
using oracle::kCokeResponse;
using oracle::random_plan;

namespace {

template <typename Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error thrown");
  return Error(ErrorKind::InvalidArgument, "");
}

std::multiset<std::string> ids_everywhere(const WorldSpec& w) {
  std::multiset<std::string> ids;
  for (const auto& o : w.objects) ids.insert(o.id);
  if (w.carried) ids.insert(w.carried->id);
  return ids;
}

SyntheticEmbedder lab_embedder() { return SyntheticEmbedder(ConceptVocabulary(ConceptVocabulary::lab_concepts())); }

struct ScannedLab {
  WorldSpec world;
  SceneRepresentation scene;
};

ScannedLab scanned_lab(std::uint64_t seed, const EmbeddingProvider& provider) {
  WorldSpec w = make_lab_world(seed);
  const auto plan = plan_coverage(w.grid, {}, w.start.position());
  auto scan = run_coverage_scan(w, plan.tour, CameraModel{}, provider);
  return {std::move(w), std::move(scan.scene)};
}

class FailingClient : public LanguageModelClient {
 public:
  explicit FailingClient(ErrorKind kind) : kind_(kind) {}
  std::string complete(const std::string&) override { throw Error(kind_, "deadline exceeded"); }

 private:
  ErrorKind kind_;
};

}  // namespace

TEST_CASE("prompt is the few-shot template with the task appended") {
  const std::string expected =
      "Suppose you are a robot that your actions are limited to picking up items with pick(object), placing down "
      "items with place(object) and move to object objects or locations with navigate(object). \n"
      "Task: Put the apple on the wooden desk.\n"
      "Explanation: The task could be done by first finding the apple, then moving to the table, finally putting "
      "down the apple.\n"
      "Plan: 1. navigate(``apple\"), 2. pick(``apple\"), \n"
      "3. navigate(``wooden desk\"), 4. place(``apple\"), \n"
      "5. done(). \n"
      "Task: Put away the black coke can.\n"
      "Plan:";
  CHECK(build_prompt("Put away the black coke can.") == expected);
  CHECK(build_prompt("  Put away the black coke can.\n") == expected);
  const std::string other = build_prompt("find the dustbin");
  CHECK(other.find("1. navigate(``apple\")") != std::string::npos);
  CHECK(other.ends_with("Task: find the dustbin\nPlan:"));
  CHECK(error_of([] { build_prompt(""); }).kind() == ErrorKind::EmptyInstruction);
  CHECK(error_of([] { build_prompt(" \n\t"); }).kind() == ErrorKind::EmptyInstruction);
}

TEST_CASE("the two listings parse to five actions") {
  const Plan coke = parse_plan(kCokeResponse);
  REQUIRE(coke.actions.size() == 5);
  CHECK(coke.actions[0] == AtomicAction{Verb::Navigate, "black coke can"});
  CHECK(coke.actions[1] == AtomicAction{Verb::Pick, "black coke can"});
  CHECK(coke.actions[2] == AtomicAction{Verb::Navigate, "appropriate storage location"});
  CHECK(coke.actions[3] == AtomicAction{Verb::Place, "black coke can"});
  CHECK(coke.actions[4] == AtomicAction{Verb::Done, ""});
  CHECK(coke.source == PlanSource::Llm);

  CHECK(parse_plan(kApplePlanLine) == apple_plan());
  // As laid out in the prompt, with the label and line breaks.
  CHECK(parse_plan(oracle::kApplePlanListing) == apple_plan());
}

TEST_CASE("quote styles, case and list punctuation") {
  const char* const variants[] = {
      "navigate(\"apple\")\npick(\"apple\")\nnavigate(\"wooden desk\")\nplace(\"apple\")\ndone()",
      "1) NAVIGATE(“apple”)\n2) Pick(“apple”)\n3) navigate(‘wooden desk’)\n4) place('apple')\n5) Done()",
      "- navigate(``apple'')\n- pick(``apple'');\n* navigate( ``wooden desk'' )\n• place(``apple\").\ndone ( )",
      "Sure! Here is the plan.\n1. navigate(\"apple\")\n2. pick(\"apple\")\nthen we go\n3. navigate(\"wooden desk\")\n"
      "4. place(\"apple\")\n5. done()\nHope this helps.",
  };
  for (const char* text : variants) CHECK_MESSAGE(parse_plan(text) == apple_plan(), text);

  // Apostrophes inside the argument survive.
  const Plan p = parse_plan("navigate(``children's book\")\ndone()");
  CHECK(p.actions[0].argument == "children's book");
}

TEST_CASE("parse errors name the problem") {
  CHECK(error_of([] { parse_plan("hello world"); }).kind() == ErrorKind::NoActionsFound);
  CHECK(error_of([] { parse_plan(""); }).kind() == ErrorKind::NoActionsFound);
  CHECK(error_of([] { parse_plan("navigate apple\npick it up"); }).kind() == ErrorKind::NoActionsFound);

  const Error before_pick = error_of([] { parse_plan("navigate(\"desk\")\nplace(\"apple\")\ndone()"); });
  CHECK(before_pick.kind() == ErrorKind::InvalidPlan);
  CHECK(std::string(before_pick.what()).find("place must follow a pick") != std::string::npos);

  const Error early_done = error_of([] { parse_plan("done()\nnavigate(\"desk\")\ndone()"); });
  CHECK(early_done.kind() == ErrorKind::InvalidPlan);
  CHECK(std::string(early_done.what()).find("exactly once") != std::string::npos);

  CHECK(error_of([] { parse_plan("navigate(\"desk\")"); }).kind() == ErrorKind::InvalidPlan);
  CHECK(error_of([] { parse_plan("pick(\"apple\")\ndone()"); }).kind() == ErrorKind::InvalidPlan);
  CHECK(error_of([] { parse_plan("navigate(\"\")\ndone()"); }).kind() == ErrorKind::InvalidPlan);
  CHECK(error_of([] { parse_plan("navigate(\"a\")\ndone(\"x\")"); }).kind() == ErrorKind::InvalidPlan);
}

TEST_CASE("render and parse round trip on random plans") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Plan p = random_plan(rng);
    REQUIRE_NOTHROW(p.validate());
    const std::string text = render_plan(p);
    CHECK_MESSAGE(parse_plan(text, p.source) == p, text);
  }
  CHECK(render_plan(apple_plan()) ==
        "1. navigate(``apple\")\n2. pick(``apple\")\n3. navigate(``wooden desk\")\n4. place(``apple\")\n5. done()\n");
}

TEST_CASE("random text yields a valid plan or a named error") {
  static const std::vector<std::string> pieces{
      "navigate", "pick", "place", "done", "Navigate", "(", ")", "\"", "``", "''", "“", "”", "'", "apple",
      " ", " ", "desk", "1.", "2)", ",", ".", "\n", "\n", "-", "xyz", "()", "(\"a\")", "done()"};
  std::mt19937_64 rng(17);
  int plans = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    for (int k = static_cast<int>(rng() % 40); k > 0; --k) text += pieces[rng() % pieces.size()];
    // Seed some well-formed lines so valid plans turn up.
    if (rng() % 3 == 0) text = "navigate(\"apple\")\n" + text + "\ndone()";
    try {
      const Plan p = parse_plan(text);
      CHECK_NOTHROW(p.validate());
      ++plans;
    } catch (const Error& e) {
      const bool named = e.kind() == ErrorKind::NoActionsFound || e.kind() == ErrorKind::InvalidPlan;
      CHECK_MESSAGE(named, text);
    }
  }
  CHECK(plans > 50);
}

TEST_CASE("rule planner templates") {
  CHECK(plan_rule_based("Put the apple on the wooden desk.") == apple_plan(PlanSource::Rule));
  CHECK(plan_rule_based("find the dustbin").actions ==
        std::vector<AtomicAction>{{Verb::Navigate, "dustbin"}, {Verb::Done, ""}});
  CHECK(plan_rule_based("Go to the sofa").actions ==
        std::vector<AtomicAction>{{Verb::Navigate, "sofa"}, {Verb::Done, ""}});
  CHECK(plan_rule_based("Please fetch an orange!").actions ==
        std::vector<AtomicAction>{{Verb::Navigate, "orange"}, {Verb::Pick, "orange"}, {Verb::Done, ""}});
  CHECK(plan_rule_based("pick up the tennis ball").actions ==
        std::vector<AtomicAction>{{Verb::Navigate, "tennis ball"}, {Verb::Pick, "tennis ball"}, {Verb::Done, ""}});
  CHECK(plan_rule_based("Throw the banana into the dustbin").actions ==
        std::vector<AtomicAction>{{Verb::Navigate, "banana"},
                                  {Verb::Pick, "banana"},
                                  {Verb::Navigate, "dustbin"},
                                  {Verb::Place, "banana"},
                                  {Verb::Done, ""}});
  CHECK(plan_rule_based("bring the book to the sofa").actions[2] == AtomicAction{Verb::Navigate, "sofa"});
  CHECK(plan_rule_based("Put away the black coke can.").actions[2] ==
        AtomicAction{Verb::Navigate, "appropriate storage location"});
  CHECK(error_of([] { plan_rule_based("sing a song"); }).kind() == ErrorKind::UnrecognizedInstruction);
  CHECK(error_of([] { plan_rule_based("put the apple"); }).kind() == ErrorKind::UnrecognizedInstruction);
  CHECK(error_of([] { plan_rule_based("find the"); }).kind() == ErrorKind::UnrecognizedInstruction);
  CHECK(error_of([] { plan_rule_based("   "); }).kind() == ErrorKind::EmptyInstruction);

  // Every template, every object/location pair: always a valid plan.
  for (const auto& x : lab_object_labels())
    for (const auto& y : lab_location_labels())
      for (const std::string& form :
           {"put the " + x + " on the " + y, "move a " + x + " into the " + y, "find " + x, "fetch the " + x}) {
        const Plan p = plan_rule_based(form);
        CHECK_NOTHROW(p.validate());
        CHECK(p.source == PlanSource::Rule);
      }
}

TEST_CASE("language model planning with retry") {
  ReplayLanguageModel coke({kCokeResponse});
  const Plan p = plan_llm("Put away the black coke can.", coke);
  CHECK(p.actions.size() == 5);
  REQUIRE(coke.prompts().size() == 1);
  CHECK(coke.prompts()[0] == build_prompt("Put away the black coke can."));

  ReplayLanguageModel garbage({"I cannot help with that.", "Still no."});
  CHECK(error_of([&] { plan_llm("Put away the black coke can.", garbage); }).kind() == ErrorKind::NoActionsFound);
  REQUIRE(garbage.prompts().size() == 2);
  CHECK(garbage.prompts()[1].starts_with(garbage.prompts()[0]));
  CHECK(garbage.prompts()[1].find("rejected") != std::string::npos);

  ReplayLanguageModel second_try({"place(\"apple\")\ndone()", kApplePlanLine});
  CHECK(plan_llm("Put the apple on the wooden desk.", second_try) == apple_plan());

  ReplayLanguageModel invalid_twice({"place(\"apple\")\ndone()", "done()\ndone()"});
  CHECK(error_of([&] { plan_llm("x", invalid_twice); }).kind() == ErrorKind::InvalidPlan);

  FailingClient slow(ErrorKind::Timeout);
  CHECK(error_of([&] { plan_llm("x", slow); }).kind() == ErrorKind::ClientError);
  ReplayLanguageModel empty({});
  CHECK(error_of([&] { plan_llm("x", empty); }).kind() == ErrorKind::ClientError);
}

TEST_CASE("replay files") {
  const auto dir = std::filesystem::temp_directory_path() / "vsrnav_replay_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "one.txt") << kCokeResponse;
    std::ofstream(dir / "two.json") << nlohmann::json::array({"garbage", kApplePlanLine}).dump();
  }
  auto one = ReplayLanguageModel::from_file(dir / "one.txt");
  CHECK(plan_llm("Put away the black coke can.", one).actions.size() == 5);
  auto two = ReplayLanguageModel::from_file(dir / "two.json");
  CHECK(plan_llm("Put the apple on the wooden desk.", two) == apple_plan());
  CHECK(error_of([&] { ReplayLanguageModel::from_file(dir / "missing.txt"); }).kind() == ErrorKind::IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("http language model client") {
  httplib::Server server;
  nlohmann::json seen;
  server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"text", kCokeResponse}}.dump(), "application/json");
  });
  server.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content("{\"text\":\"done()\"}", "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"words\":1}", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  HttpLanguageModel model({url, "/complete", "", 128, std::chrono::milliseconds(2000)});
  CHECK(plan_llm("Put away the black coke can.", model).actions.size() == 5);
  CHECK(seen.at("prompt") == build_prompt("Put away the black coke can."));
  CHECK(seen.at("max_tokens") == 128);
  CHECK(seen.at("temperature") == 0);

  HttpLanguageModel slow({url, "/slow", "", 64, std::chrono::milliseconds(150)});
  CHECK(error_of([&] { slow.complete("x"); }).kind() == ErrorKind::ClientError);
  HttpLanguageModel broken({url, "/broken", "", 64, std::chrono::milliseconds(2000)});
  CHECK(error_of([&] { broken.complete("x"); }).kind() == ErrorKind::ClientError);
  HttpLanguageModel missing({url, "/nope", "", 64, std::chrono::milliseconds(2000)});
  CHECK(error_of([&] { missing.complete("x"); }).kind() == ErrorKind::ClientError);

  server.stop();
  worker.join();
  HttpLanguageModel dead({url, "/complete", "", 64, std::chrono::milliseconds(300)});
  CHECK(error_of([&] { plan_llm("x", dead); }).kind() == ErrorKind::ClientError);
}

TEST_CASE("apple plan ends with the apple on the desk") {
  const auto embedder = lab_embedder();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto [world, scene] = scanned_lab(seed, embedder);
    const auto all = ids_everywhere(world);
    const Eigen::Vector3d desk = world.find("wooden_desk")->position;
    RobotState robot{world.start, std::nullopt};
    ExecuteOptions opts;
    std::size_t seen = 0;
    opts.on_step = [&](const TraceStep& step) {
      CHECK(step.action_index == seen++);
      CHECK(ids_everywhere(world) == all);
      CHECK(world.passable().free_at(step.pose.position()));
    };
    const auto trace = execute(plan_rule_based("Put the apple on the wooden desk."), scene, world, robot, embedder, opts);
    CHECK(trace.status == ExecutionStatus::Success);
    REQUIRE(trace.steps.size() == 5);
    for (const auto& step : trace.steps) CHECK_MESSAGE(!step.error, step.message);
    CHECK(trace.steps[2].coordinate.has_value());
    CHECK(trace.steps[1].world_object == "apple");
    CHECK(trace.steps[3].world_object == "apple");
    REQUIRE(world.find("apple"));
    CHECK((world.find("apple")->position - desk).norm() < 1e-6);
    CHECK(!robot.holding);
  }
}

TEST_CASE("the coke can goes to the storage shelf") {
  const auto embedder = lab_embedder();
  auto [world, scene] = scanned_lab(5, embedder);
  ReplayLanguageModel model({kCokeResponse});
  const Plan plan = plan_llm("Put away the black coke can.", model);
  RobotState robot{world.start, std::nullopt};
  const auto trace = execute(plan, scene, world, robot, embedder);
  CHECK(trace.status == ExecutionStatus::Success);
  CHECK((world.find("coke_can")->position - world.find("shelf")->position).norm() < 1e-6);
}

TEST_CASE("unknown objects stop at navigate") {
  const auto embedder = lab_embedder();
  auto [world, scene] = scanned_lab(1, embedder);
  RobotState robot{world.start, std::nullopt};
  const WorldSpec before = world;
  Plan p{{{Verb::Navigate, "quantum flux capacitor"}, {Verb::Pick, "quantum flux capacitor"}, {Verb::Done, ""}},
         PlanSource::Rule};
  const auto trace = execute(p, scene, world, robot, embedder);
  CHECK(trace.status == ExecutionStatus::Failed);
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].error == ErrorKind::NoMatch);
  CHECK(robot.pose == world.start);
  CHECK(world.objects == before.objects);
}

TEST_CASE("a misconfigured standoff leaves the object out of reach") {
  WorldSpec w;
  w.grid = oracle::blank_map(10.0, 3.0);
  oracle::paint(w.grid, {8.0, 1.0, 9.0, 2.0});
  w.start = {0.5, 1.5, 0.0};
  w.objects.push_back({"apple", "apple", {8.05, 1.5, 0.6}, true, false});
  const auto embedder = lab_embedder();
  SceneRepresentation scene(embedder.dimension());
  scene.ingest(embedder.embed_object({"apple", 1, {}}), w.objects[0].position, "apple");

  RobotState robot{w.start, std::nullopt};
  ExecuteOptions opts;
  opts.motion.standoff = 5.0;
  Plan p{{{Verb::Navigate, "apple"}, {Verb::Pick, "apple"}, {Verb::Done, ""}}, PlanSource::Rule};
  const auto trace = execute(p, scene, w, robot, embedder, opts);
  CHECK(trace.status == ExecutionStatus::Failed);
  REQUIRE(trace.steps.size() == 2);
  CHECK(!trace.steps[0].error);
  CHECK(trace.steps[0].pose.x == doctest::Approx(3.05));
  CHECK(trace.steps[1].error == ErrorKind::OutOfReach);
  CHECK(trace.steps[1].world_object == "apple");
  CHECK(!robot.holding);
}

TEST_CASE("execution is deterministic") {
  const auto embedder = lab_embedder();
  auto [world, scene] = scanned_lab(7, embedder);
  const Plan plan = plan_rule_based("Put the banana on the sofa");
  WorldSpec w1 = world, w2 = world;
  RobotState r1{world.start, std::nullopt}, r2{world.start, std::nullopt};
  const auto t1 = execute(plan, scene, w1, r1, embedder);
  const auto t2 = execute(plan, scene, w2, r2, embedder);
  CHECK(t1 == t2);
  CHECK(w1.objects == w2.objects);
  CHECK(r1 == r2);
  CHECK(t1.status == ExecutionStatus::Success);
}
