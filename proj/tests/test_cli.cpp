#include "cli.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "plan_fixtures.hpp"
#include "vsrnav/api.hpp"
#include "vsrnav/map_io.hpp"
#include "vsrnav/simworld.hpp"

using namespace vsrnav;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

EnvLookup no_env() {
  return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

Outcome invoke(const std::vector<std::string>& args, const EnvLookup& env = no_env()) {
  std::ostringstream out, err;
  const int code = vsrnav::cli::run_cli(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

}  // namespace

TEST_CASE("coverage on an empty map is the start alone") {
  TempDir dir("vsrnav_cli_empty");
  OccupancyGrid g;
  g.info.width = 40;
  g.info.height = 40;
  g.cells.assign(g.info.size(), 0);
  save_map(g, dir / "empty.yaml");

  const auto r = invoke({"coverage", "--map", dir / "empty.yaml", "--start", "1,1", "--out", dir / "tour.json", "--svg",
                      dir / "tour.svg"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  const Json tour = Json::parse(slurp(dir / "tour.json"));
  CHECK(tour.at("order") == Json::array({0, 0}));
  CHECK(tour.at("total_cost") == 0.0);
  CHECK(slurp(dir / "tour.svg").rfind("<svg", 0) == 0);

  const auto bad_start = invoke({"coverage", "--map", dir / "empty.yaml", "--start", "1;1", "--out", dir / "t.json"});
  CHECK(bad_start.code == 1);
  CHECK(bad_start.err.find("InvalidArgument") != std::string::npos);
  const auto no_map = invoke({"coverage", "--map", dir / "none.yaml", "--start", "1,1", "--out", dir / "t.json"});
  CHECK(no_map.code == 1);
  CHECK(no_map.err.find("IoError") != std::string::npos);
}

TEST_CASE("query against an empty scene") {
  TempDir dir("vsrnav_cli_empty_scene");
  save_scene(SceneRepresentation(512), dir / "empty.vsr");
  const auto r = invoke({"query", "--scene", dir / "empty.vsr", "apple"});
  CHECK(r.code == 1);
  CHECK(r.err.find("EmptyScene") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("usage errors exit 2 with usage text") {
  for (const auto& args : std::vector<std::vector<std::string>>{{"query", "--scene", "s.vsr", "--bogus", "x"},
                                                                 {},
                                                                 {"teleport"},
                                                                 {"query", "apple"},
                                                                 {"run", "--world", "w", "--scene", "s", "--planner",
                                                                  "oracle", "go to the desk"},
                                                                 {"coverage", "--map", "m", "--start"}}) {
    const auto r = invoke(args);
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage:") != std::string::npos);
  }
  const auto help = invoke({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("Subcommands:") != std::string::npos);
}

TEST_CASE("demo, scan, query and run from the command line") {
  TempDir dir("vsrnav_cli_pipeline");
  REQUIRE(invoke({"demo", "--out", dir / "world.json"}).code == 0);
  REQUIRE(invoke({"coverage", "--map", dir / "world_map.yaml", "--start", "0.4,0.4", "--out", dir / "tour.json"}).code ==
          0);
  const auto scan = invoke({"scan", "--world", dir / "world.json", "--tour", dir / "tour.json", "--scene", dir / "s.vsr"});
  REQUIRE(scan.code == 0);
  CHECK(scan.out.find("objects 30") != std::string::npos);

  const WorldSpec world = load_world(dir / "world.json");
  const WorldObject* apple = nullptr;
  const WorldObject* desk = nullptr;
  for (const auto& o : world.objects) {
    if (o.label == "apple") apple = &o;
    if (o.label == "wooden desk") desk = &o;
  }
  REQUIRE(apple);
  REQUIRE(desk);

  const auto q = invoke({"query", "--scene", dir / "s.vsr", "apple"});
  CHECK(q.code == 0);
  CHECK(q.out.find("label apple\n") != std::string::npos);
  std::istringstream lines(q.out.substr(q.out.find("position ")));
  std::string word;
  double x = 0, y = 0, z = 0;
  lines >> word >> x >> y >> z;
  CHECK(std::hypot(x - apple->position.x(), y - apple->position.y()) < 0.1);

  const auto run = invoke({"run", "--world", dir / "world.json", "--scene", dir / "s.vsr", "--planner", "rule",
                        "Put the apple on the wooden desk.", "--trace", dir / "trace.json", "--world-out",
                        dir / "after.json"});
  CHECK(run.code == 0);
  CHECK(run.out.find("status success") != std::string::npos);
  const auto trace = Json::parse(slurp(dir / "trace.json")).get<ExecutionTrace>();
  REQUIRE(trace.steps.size() == 5);
  CHECK(trace.status == ExecutionStatus::Success);
  const WorldSpec after = load_world(dir / "after.json");
  const WorldObject* moved = after.find(apple->id);
  REQUIRE(moved);
  CHECK((moved->position - desk->position).norm() < 1e-6);

  // an object the scene has never seen stops at the first step
  const auto lost = invoke({"run", "--world", dir / "world.json", "--scene", dir / "s.vsr", "fetch the unicorn"});
  CHECK(lost.code == 1);
  CHECK(lost.err.find("NoMatch") != std::string::npos);
  CHECK(lost.out.find("status failed") != std::string::npos);
}

TEST_CASE("language model planning through replay and endpoint settings") {
  TempDir dir("vsrnav_cli_llm");
  REQUIRE(invoke({"demo", "--out", dir / "world.json"}).code == 0);
  REQUIRE(invoke({"scan", "--world", dir / "world.json", "--scene", dir / "s.vsr"}).code == 0);
  std::ofstream(dir / "replay.json") << Json::array({oracle::kCokeResponse}).dump();

  const auto r = invoke({"run", "--world", dir / "world.json", "--scene", dir / "s.vsr", "--planner", "llm", "--replay",
                      dir / "replay.json", "Put away the black coke can.", "--world-out", dir / "after.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("status success") != std::string::npos);
  const WorldSpec after = load_world(dir / "after.json");
  CHECK((after.find("coke_can")->position - after.find("shelf")->position).norm() < 1e-6);

  const auto unset = invoke({"run", "--world", dir / "world.json", "--scene", dir / "s.vsr", "--planner", "llm",
                          "Put away the black coke can."});
  CHECK(unset.code == 1);
  CHECK(unset.err.find("ClientError") != std::string::npos);
}

TEST_CASE("settings precedence reaches the subcommands") {
  TempDir dir("vsrnav_cli_settings");
  REQUIRE(invoke({"demo", "--out", dir / "world.json"}).code == 0);
  auto env32 = [](const std::string& name) -> std::optional<std::string> {
    if (name == "VSRNAV_DIMENSION") return "32";
    return std::nullopt;
  };
  REQUIRE(invoke({"scan", "--world", dir / "world.json", "--scene", dir / "env.vsr"}, env32).code == 0);
  CHECK(load_scene(dir / "env.vsr").dimension() == 32);
  REQUIRE(invoke({"--dimension", "64", "scan", "--world", dir / "world.json", "--scene", dir / "flag.vsr"}, env32).code ==
          0);
  CHECK(load_scene(dir / "flag.vsr").dimension() == 64);
  // flags may also follow the subcommand
  REQUIRE(invoke({"scan", "--world", dir / "world.json", "--scene", dir / "late.vsr", "--dimension", "48"}, env32).code ==
          0);
  CHECK(load_scene(dir / "late.vsr").dimension() == 48);

  std::ofstream(dir / "defaults.yaml") << "dimension: 16\n";
  REQUIRE(invoke({"--config", dir / "defaults.yaml", "scan", "--world", dir / "world.json", "--scene", dir / "file.vsr"})
              .code == 0);
  CHECK(load_scene(dir / "file.vsr").dimension() == 16);
  auto env_file = [&](const std::string& name) -> std::optional<std::string> {
    if (name == "VSRNAV_CONFIG") return dir / "defaults.yaml";
    return std::nullopt;
  };
  REQUIRE(invoke({"scan", "--world", dir / "world.json", "--scene", dir / "envfile.vsr"}, env_file).code == 0);
  CHECK(load_scene(dir / "envfile.vsr").dimension() == 16);

  // the query embedder must match the scene
  const auto mismatch = invoke({"query", "--scene", dir / "env.vsr", "apple"});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("DimensionMismatch") != std::string::npos);
  CHECK(invoke({"query", "--scene", dir / "env.vsr", "apple"}, env32).code == 0);

  const auto bad = invoke({"--noise", "loud", "scan", "--world", dir / "world.json", "--scene", dir / "x.vsr"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("InvalidArgument") != std::string::npos);
}
