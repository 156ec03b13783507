#include "cli.hpp"

#include "vsrnav/api.hpp"
#include "vsrnav/error.hpp"
#include "vsrnav/map_io.hpp"
#include "vsrnav/server.hpp"
#include "vsrnav/session.hpp"
#include "vsrnav/simworld.hpp"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iomanip>
#include <thread>

namespace vsrnav::cli {

namespace {

struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App& app, ConfigFlags& flags) {
  app.add_option("--config", flags.file, "YAML defaults file (default: $VSRNAV_CONFIG)");
  for (const auto& key : setting_keys()) {
    std::string name = "--" + key;
    std::replace(name.begin(), name.end(), '_', '-');
    std::string env = "VSRNAV_" + key;
    for (char& ch : env) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    app.add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.values[key] = v; }, "overrides $" + env);
  }
}

Settings settings_from(const ConfigFlags& flags, const EnvLookup& env) {
  std::optional<std::filesystem::path> file;
  if (!flags.file.empty()) {
    file = flags.file;
  } else if (env) {
    if (auto v = env("VSRNAV_CONFIG"); v && !v->empty()) file = *v;
  }
  return resolve_settings(flags.values, env, file);
}

Vec2 parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma != std::string::npos) {
    const std::string xs = text.substr(0, comma), ys = text.substr(comma + 1);
    try {
      std::size_t a = 0, b = 0;
      const double x = std::stod(xs, &a), y = std::stod(ys, &b);
      if (a == xs.size() && b == ys.size()) return {x, y};
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::InvalidArgument, "expected X,Y but got '" + text + "'");
}

OccupancyGrid read_any_map(const std::filesystem::path& path) {
  if (path.extension() == ".pgm") return read_pgm(path);
  return load_map(path);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::CorruptFile, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

api::TourView read_tour(const std::filesystem::path& path) {
  try {
    return read_json(path).get<api::TourView>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::CorruptFile, path.string() + ": " + e.what());
  }
}

std::string fmt_point(const Eigen::Vector3d& p) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << p.x() << ' ' << p.y() << ' ' << p.z();
  return s.str();
}

std::string describe(const TraceStep& step) {
  std::ostringstream s;
  s << "step " << step.action_index + 1 << ' ' << to_string(step.action.verb);
  if (step.action.verb == Verb::Done)
    s << "() ";
  else
    s << "(\"" << step.action.argument << "\") ";
  if (step.error) {
    s << "-> " << to_string(*step.error) << ": " << step.message;
    return s.str();
  }
  s << "-> ok";
  if (step.object_index) s << " object " << *step.object_index;
  if (step.score) s << " score " << std::fixed << std::setprecision(4) << *step.score;
  if (step.coordinate) s << " at " << fmt_point(*step.coordinate);
  if (step.world_object) s << " [" << *step.world_object << ']';
  return s.str();
}

// --- subcommands -------------------------------------------------------

struct CoverageArgs {
  std::string map, start, out, svg;
  int threshold = 128;
  double offset = 0.3;
  std::uint64_t seed = 1;
};

void run_coverage(const CoverageArgs& a, std::ostream& out) {
  const OccupancyGrid grid = read_any_map(a.map);
  CoverageParams params;
  params.threshold = static_cast<std::uint8_t>(a.threshold);
  params.offset = a.offset;
  params.seed = a.seed;
  const CoveragePlan plan = plan_coverage(grid, params, parse_point(a.start));
  const api::TourView view = api::tour_view(plan);
  write_text(a.out, Json(view).dump(2) + "\n");
  if (!a.svg.empty()) write_text(a.svg, api::tour_svg(grid, params.threshold, view));
  out << "nodes " << plan.graph.size() << " rings " << plan.rings.size() << " cost " << std::fixed
      << std::setprecision(4) << plan.tour.total_cost << '\n';
}

struct ScanArgs {
  std::string world, tour, scene;
};

void run_scan(const ScanArgs& a, const Settings& settings, std::ostream& out) {
  const WorldSpec world = load_world(a.world);
  const auto provider = make_embedder(settings);
  std::optional<Tour> tour;
  if (!a.tour.empty()) tour = to_tour(read_tour(a.tour));
  if (!tour) {
    CoverageParams params;
    params.threshold = world.threshold;
    tour = plan_coverage(world.grid, params, world.start.position()).tour;
  }
  const ScanResult scan = run_coverage_scan(world, *tour, CameraModel{}, *provider);
  save_scene(scan.scene, a.scene);
  out << "frames " << scan.frames << " objects " << scan.scene.size() << '\n';
}

struct QueryArgs {
  std::string scene, text;
  double min_score = kDefaultMinScore;
};

void run_query(const QueryArgs& a, const Settings& settings, std::ostream& out) {
  const SceneRepresentation scene = load_scene(a.scene);
  if (scene.size() == 0) throw Error(ErrorKind::EmptyScene, "scene " + a.scene + " has no objects");
  const auto provider = make_embedder(settings);
  const QueryResult hit = query(scene, provider->embed_text(a.text), a.min_score);
  const auto& o = scene.objects()[hit.index];
  out << "index " << hit.index << '\n';
  if (!o.label.empty()) out << "label " << o.label << '\n';
  out << "position " << fmt_point(o.position) << '\n';
  out << "score " << std::fixed << std::setprecision(6) << hit.score << '\n';
}

struct RunArgs {
  std::string world, scene, text, planner = "rule", replay, trace, world_out;
  double min_score = kDefaultMinScore;
};

bool run_instruction(const RunArgs& a, const Settings& settings, std::ostream& out, std::ostream& err) {
  WorldSpec world = load_world(a.world);
  const SceneRepresentation scene = load_scene(a.scene);
  const auto provider = make_embedder(settings);

  Plan plan;
  if (a.planner == "rule") {
    plan = plan_rule_based(a.text);
  } else {
    std::unique_ptr<LanguageModelClient> llm;
    if (!a.replay.empty())
      llm = std::make_unique<ReplayLanguageModel>(ReplayLanguageModel::from_file(a.replay));
    else
      llm = make_language_model(settings);
    plan = plan_llm(a.text, *llm);
  }
  out << render_plan(plan) << '\n';

  RobotState robot{world.start, std::nullopt};
  if (world.carried) robot.holding = world.carried->id;
  ExecuteOptions opts;
  opts.min_score = a.min_score;
  opts.on_step = [&](const TraceStep& s) { out << describe(s) << '\n'; };
  const ExecutionTrace trace = execute(plan, scene, world, robot, *provider, opts);
  const bool ok = trace.status == ExecutionStatus::Success;
  out << "status " << (ok ? "success" : "failed") << '\n';

  if (!a.trace.empty()) write_text(a.trace, Json(trace).dump(2) + "\n");
  if (!a.world_out.empty()) {
    world.start = robot.pose;
    save_world(world, a.world_out);
  }
  if (!ok) {
    const TraceStep& last = trace.steps.back();
    err << "error: " << to_string(last.error.value_or(ErrorKind::InvalidPlan)) << ": " << last.message << '\n';
  }
  return ok;
}

struct ServeArgs {
  std::string world, scene, tour, static_dir, host = "127.0.0.1";
  int port = 8080;
  int step_delay_ms = 250;
  std::string replay;
};

// SIGINT/SIGTERM stop the server. The signals are blocked before any thread
// starts and consumed by one waiting thread.
void run_serve(const ServeArgs& a, const Settings& settings, std::ostream& out) {
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);

  WorldSpec world = load_world(a.world);
  std::shared_ptr<const EmbeddingProvider> provider = make_embedder(settings);
  std::shared_ptr<LanguageModelClient> llm;
  if (!a.replay.empty())
    llm = std::make_shared<ReplayLanguageModel>(ReplayLanguageModel::from_file(a.replay));
  else if (!settings.llm_url.empty())
    llm = make_language_model(settings);

  SessionOptions opts;
  opts.step_delay = std::chrono::milliseconds(a.step_delay_ms);
  std::unique_ptr<Session> session;
  EventLog startup;  // scan events before the session exists are replayed into it
  if (a.scene.empty()) {
    out << "scanning " << a.world << " ..." << std::endl;
    CoverageParams params;
    params.threshold = world.threshold;
    ScanOutcome scan = scan_world(world, *provider, &startup, params);
    session = std::make_unique<Session>(std::move(world), std::move(scan.scene), std::move(scan.plan), provider,
                                        llm, opts);
  } else {
    std::optional<CoveragePlan> plan;
    if (!a.tour.empty()) {
      // Only the tour itself is known; rings and obstacles come back empty.
      CoveragePlan p;
      p.tour = to_tour(read_tour(a.tour));
      plan = std::move(p);
    }
    session = std::make_unique<Session>(std::move(world), load_scene(a.scene), std::move(plan), provider, llm, opts);
  }
  for (const auto& e : startup.since(0)) session->events().append(e.type, e.data);

  ServerOptions sopts;
  sopts.static_dir = a.static_dir;
  ApiServer server(*session, sopts);
  const int port = server.bind(a.host, a.port);
  out << "listening on http://" << a.host << ':' << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
  });
  server.listen();
  waiter.join();
  session->wait_idle();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  out << "stopped" << std::endl;
}

struct DemoArgs {
  std::string out = "demo/world.json";
  std::uint64_t seed = 1;
};

void run_demo(const DemoArgs& a, std::ostream& out) {
  const std::filesystem::path path = a.out;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const WorldSpec world = make_lab_world(a.seed);
  save_world(world, path);
  out << "wrote " << path.string() << " (" << world.objects.size() << " objects)\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Coverage scanning, scene queries and instruction execution in a simulated lab.", "vsrnav"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  ConfigFlags config;
  add_config_flags(app, config);

  CoverageArgs cov;
  auto* c = app.add_subcommand("coverage", "plan a coverage tour over a map");
  c->add_option("--map", cov.map, "map .yaml (or bare .pgm)")->required();
  c->add_option("--start", cov.start, "start position X,Y in meters")->required();
  c->add_option("--out", cov.out, "tour JSON output")->required();
  c->add_option("--svg", cov.svg, "tour drawing output");
  c->add_option("--threshold", cov.threshold, "cells at or above are obstacles")->check(CLI::Range(1, 255));
  c->add_option("--offset", cov.offset, "standoff from obstacles in meters");
  c->add_option("--seed", cov.seed, "heuristic solver seed");

  ScanArgs scan;
  auto* s = app.add_subcommand("scan", "drive a tour and build the scene file");
  s->add_option("--world", scan.world, "world JSON")->required();
  s->add_option("--tour", scan.tour, "tour JSON (planned from the world if omitted)");
  s->add_option("--scene", scan.scene, "scene output (.vsr)")->required();

  QueryArgs q;
  auto* qc = app.add_subcommand("query", "find the scene object matching a description");
  qc->add_option("--scene", q.scene, "scene file")->required();
  qc->add_option("--min-score", q.min_score, "reject matches below this score");
  qc->add_option("text", q.text, "description")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "plan and execute an instruction");
  r->add_option("--world", run.world, "world JSON")->required();
  r->add_option("--scene", run.scene, "scene file")->required();
  r->add_option("--planner", run.planner, "rule or llm")->check(CLI::IsMember({"rule", "llm"}));
  r->add_option("--replay", run.replay, "canned model responses instead of the HTTP endpoint");
  r->add_option("--trace", run.trace, "trace JSON output");
  r->add_option("--world-out", run.world_out, "world after execution");
  r->add_option("--min-score", run.min_score, "reject matches below this score");
  r->add_option("text", run.text, "instruction")->required();

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "serve the HTTP API for one world");
  sv->add_option("--world", serve.world, "world JSON")->required();
  sv->add_option("--port", serve.port, "0 picks a free port")->check(CLI::Range(0, 65535));
  sv->add_option("--host", serve.host, "bind address");
  sv->add_option("--scene", serve.scene, "existing scene (else scan at startup)");
  sv->add_option("--tour", serve.tour, "tour JSON to show with --scene");
  sv->add_option("--static", serve.static_dir, "directory served at /");
  sv->add_option("--step-delay", serve.step_delay_ms, "milliseconds between executed steps")->check(CLI::NonNegativeNumber);
  sv->add_option("--replay", serve.replay, "canned model responses for the llm planner");

  DemoArgs demo;
  auto* d = app.add_subcommand("demo", "write the lab demo world");
  d->add_option("--out", demo.out, "world JSON path");
  d->add_option("--seed", demo.seed, "object placement seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 2;
  }

  try {
    if (c->parsed()) {
      run_coverage(cov, out);
    } else if (d->parsed()) {
      run_demo(demo, out);
    } else {
      const Settings settings = settings_from(config, env);
      if (s->parsed()) run_scan(scan, settings, out);
      if (qc->parsed()) run_query(q, settings, out);
      if (r->parsed() && !run_instruction(run, settings, out, err)) return 1;
      if (sv->parsed()) run_serve(serve, settings, out);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace vsrnav::cli
