// vsrnav headers (Eigen) before httplib, see remote_embedder.cpp.
#include "vsrnav/server.hpp"

#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <set>
#include <thread>

using namespace vsrnav;

namespace {

std::shared_ptr<const EmbeddingProvider> lab_provider() {
  return std::make_shared<SyntheticEmbedder>(ConceptVocabulary(ConceptVocabulary::lab_concepts()));
}

// Scanned lab session served on a free port for the test's lifetime.
struct LiveLab {
  WorldSpec truth = make_lab_world(1);
  std::shared_ptr<const EmbeddingProvider> provider = lab_provider();
  EventLog scan_log;
  std::unique_ptr<Session> session;
  std::unique_ptr<ApiServer> server;
  std::thread worker;
  int port = 0;

  explicit LiveLab(SessionOptions options = {}, ServerOptions server_options = {}, bool with_tour = true) {
    ScanOutcome scan = scan_world(truth, *provider, &scan_log);
    std::optional<CoveragePlan> plan;
    if (with_tour) plan = std::move(scan.plan);
    session = std::make_unique<Session>(truth, std::move(scan.scene), std::move(plan), provider, nullptr, options);
    for (const auto& e : scan_log.since(0)) session->events().append(e.type, e.data);
    server = std::make_unique<ApiServer>(*session, server_options);
    port = server->bind("127.0.0.1", 0);
    worker = std::thread([this] { server->listen(); });
  }
  ~LiveLab() {
    server->stop();
    worker.join();
    session->wait_idle();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(5, 0);
    // listen() runs on another thread; retry the first connection briefly.
    for (int i = 0; i < 100 && !c.Get("/api/state"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    return c;
  }
};

const WorldObject& by_label(const WorldSpec& w, const std::string& label) {
  for (const auto& o : w.objects)
    if (o.label == label) return o;
  FAIL("no object labelled " << label);
  return w.objects.front();
}

Json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return Json::parse(r->body);
}

httplib::Result post_json(httplib::Client& c, const std::string& path, const Json& body) {
  return c.Post(path.c_str(), body.dump(), "application/json");
}

// Reads the event stream until `enough` says stop, returns raw text.
std::string read_stream(httplib::Client& c, const httplib::Headers& headers, const std::string& path,
                        const std::function<bool(const std::string&)>& enough) {
  std::string text;
  c.Get(path.c_str(), headers, [&](const char* data, std::size_t len) {
    text.append(data, len);
    return !enough(text);
  });
  return text;
}

std::vector<std::uint64_t> ids_in(const std::string& text) {
  std::vector<std::uint64_t> ids;
  for (auto at = text.find("id: "); at != std::string::npos; at = text.find("id: ", at + 1))
    if (at == 0 || text[at - 1] == '\n') ids.push_back(std::stoull(text.substr(at + 4)));
  return ids;
}

}  // namespace

TEST_CASE("event log sequence numbers") {
  EventLog log;
  CHECK(log.last() == 0);
  CHECK(log.append("a", 1) == 1);
  CHECK(log.append("b", 2) == 2);
  CHECK(log.since(0).size() == 2);
  CHECK(log.since(1).front().type == "b");
  CHECK(log.since(2).empty());
  CHECK(log.since(99).empty());
  CHECK_FALSE(log.wait(2, std::chrono::milliseconds(20)));
  CHECK(log.wait(1, std::chrono::milliseconds(20)));

  std::vector<std::thread> writers;
  for (int t = 0; t < 4; ++t)
    writers.emplace_back([&] {
      for (int i = 0; i < 250; ++i) log.append("x", i);
    });
  for (auto& w : writers) w.join();
  const auto all = log.since(0);
  REQUIRE(all.size() == 1002);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].seq == i + 1);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i].time_ms >= all[i - 1].time_ms);

  std::thread waiter([&] { CHECK_FALSE(log.wait(log.last(), std::chrono::seconds(10))); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  log.close();
  waiter.join();
  CHECK(log.closed());
}

TEST_CASE("read endpoints describe the session") {
  LiveLab lab;
  auto c = lab.client();

  const auto map = body_of(c.Get("/api/map")).get<api::MapView>();
  const OccupancyGrid grid = api::decode_map(map);
  CHECK(grid.cells == lab.truth.grid.cells);
  CHECK(grid.info.width == lab.truth.grid.info.width);
  CHECK(map.threshold == lab.truth.threshold);

  const auto scene = body_of(c.Get("/api/scene")).get<api::SceneView>();
  CHECK(scene.objects.size() == 30);
  CHECK(scene == lab.session->scene());

  const auto tour = body_of(c.Get("/api/tour")).get<api::TourView>();
  CHECK(tour.order.front() == 0);
  CHECK(tour.order.back() == 0);
  CHECK(tour == *lab.session->tour());

  const auto state = body_of(c.Get("/api/state")).get<api::StateView>();
  CHECK(state.pose == lab.truth.start);
  CHECK_FALSE(state.holding);
  CHECK_FALSE(state.executing);
  CHECK(state.last_event == lab.session->events().last());

  // reads leave the simulation alone
  CHECK(lab.session->world().objects == lab.truth.objects);

  auto missing = c.Get("/api/nothing");
  REQUIRE(missing);
  CHECK(missing->status == 404);
}

TEST_CASE("no tour means 404 on the tour endpoint") {
  LiveLab lab({}, {}, false);
  auto c = lab.client();
  auto r = c.Get("/api/tour");
  REQUIRE(r);
  CHECK(r->status == 404);
  CHECK(body_of(r).get<api::ErrorResponse>().error == "NoTour");
}

TEST_CASE("query endpoint") {
  LiveLab lab;
  auto c = lab.client();
  const auto before = lab.session->events().last();

  auto ok = post_json(c, "/api/query", {{"text", "apple"}});
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(ok->get_header_value("Content-Type") == "application/json");
  const auto hit = body_of(ok).get<api::QueryResponse>();
  CHECK(hit.label == "apple");
  const auto& apple = by_label(lab.truth, "apple");
  CHECK(std::hypot(hit.position[0] - apple.position.x(), hit.position[1] - apple.position.y()) < 0.1);
  CHECK(hit.position[2] == doctest::Approx(apple.position.z()).epsilon(0.05));
  CHECK(hit.score > 0.9);
  const auto events = lab.session->events().since(before);
  REQUIRE(events.size() == 1);
  CHECK(events[0].type == "query");

  auto expect_error = [&](const httplib::Result& r, int status, const std::string& kind) {
    REQUIRE(r);
    CHECK(r->status == status);
    const auto err = body_of(r).get<api::ErrorResponse>();
    CHECK(err.error == kind);
    CHECK_FALSE(err.message.empty());
  };
  expect_error(post_json(c, "/api/query", {{"text", "quantum flux capacitor"}}), 404, "NoMatch");
  expect_error(post_json(c, "/api/query", {{"text", "   "}}), 422, "EmptyText");
  expect_error(post_json(c, "/api/query", {{"words", "apple"}}), 400, "BadRequest");
  expect_error(c.Post("/api/query", "{not json", "application/json"), 400, "BadRequest");
  expect_error(c.Post("/api/query", "", "application/json"), 400, "BadRequest");
}

TEST_CASE("instructions run asynchronously, one at a time") {
  SessionOptions slow;
  slow.step_delay = std::chrono::milliseconds(150);
  LiveLab lab(slow);
  auto c = lab.client();

  auto first = post_json(c, "/api/instruction", {{"text", "Put the apple on the wooden desk."}, {"planner", "rule"}});
  REQUIRE(first);
  CHECK(first->status == 200);
  const auto plan = body_of(first).get<api::InstructionResponse>().plan;
  CHECK(plan == plan_rule_based("Put the apple on the wooden desk."));

  auto second = post_json(c, "/api/instruction", {{"text", "go to the sofa"}});
  REQUIRE(second);
  CHECK(second->status == 409);
  CHECK(body_of(second).get<api::ErrorResponse>().error == "Busy");
  CHECK(body_of(c.Get("/api/state")).get<api::StateView>().executing);

  lab.session->wait_idle();
  const auto state = body_of(c.Get("/api/state")).get<api::StateView>();
  CHECK_FALSE(state.executing);
  CHECK_FALSE(state.holding);
  const WorldSpec after = lab.session->world();
  const WorldObject* apple = after.find(by_label(lab.truth, "apple").id);
  REQUIRE(apple);
  CHECK((apple->position - by_label(lab.truth, "wooden desk").position).norm() < 1e-6);
  REQUIRE(lab.session->last_trace());
  CHECK(lab.session->last_trace()->status == ExecutionStatus::Success);

  // idle again, so the next one is accepted
  auto third = post_json(c, "/api/instruction", {{"text", "go to the sofa"}});
  REQUIRE(third);
  CHECK(third->status == 200);
  lab.session->wait_idle();

  auto unknown = post_json(c, "/api/instruction", {{"text", "juggle the oranges"}});
  REQUIRE(unknown);
  CHECK(unknown->status == 422);
  CHECK(body_of(unknown).get<api::ErrorResponse>().error == "UnrecognizedInstruction");
  auto no_model = post_json(c, "/api/instruction", {{"text", "go to the sofa"}, {"planner", "llm"}});
  REQUIRE(no_model);
  CHECK(no_model->status == 502);
  auto bad_planner = post_json(c, "/api/instruction", {{"text", "go to the sofa"}, {"planner", "oracle"}});
  REQUIRE(bad_planner);
  CHECK(bad_planner->status == 400);
  CHECK_FALSE(lab.session->executing());
}

TEST_CASE("failed steps are reported in the stream") {
  LiveLab lab;
  auto c = lab.client();
  const auto before = lab.session->events().last();
  auto r = post_json(c, "/api/instruction", {{"text", "bring me the quantum flux capacitor"}});
  REQUIRE(r);
  CHECK(r->status == 200);
  lab.session->wait_idle();
  std::vector<std::string> types;
  Json failed_step;
  for (const auto& e : lab.session->events().since(before)) {
    types.push_back(e.type);
    if (e.type == "step") failed_step = e.data;
  }
  CHECK(types == std::vector<std::string>{"plan", "step", "pose", "status"});
  CHECK(failed_step.at("outcome") == "NoMatch");
  CHECK(lab.session->events().since(before).back().data.at("status") == "failed");
}

TEST_CASE("event stream replays from any sequence number") {
  LiveLab lab;
  auto c = lab.client();
  REQUIRE(post_json(c, "/api/instruction", {{"text", "Put the apple on the wooden desk."}}));
  lab.session->wait_idle();
  const auto log = lab.session->events().since(0);
  const std::uint64_t last = log.back().seq;
  REQUIRE(last > 20);

  auto expected_text = [&](std::uint64_t after) {
    std::string s;
    for (const auto& e : lab.session->events().since(after)) s += api::sse_frame(e);
    return s;
  };
  auto has_all = [&](std::uint64_t after) {
    const std::string want = expected_text(after);
    return [want](const std::string& got) { return got.size() >= want.size(); };
  };

  for (const std::uint64_t after : {std::uint64_t{0}, std::uint64_t{1}, last / 2, last - 5, last - 1}) {
    auto sc = lab.client();
    const std::string got =
        read_stream(sc, {{"Last-Event-ID", std::to_string(after)}}, "/api/events", has_all(after));
    CHECK(got == expected_text(after));
    const auto ids = ids_in(got);
    REQUIRE_FALSE(ids.empty());
    CHECK(ids.front() == after + 1);
    for (std::size_t i = 1; i < ids.size(); ++i) CHECK(ids[i] == ids[i - 1] + 1);
  }

  auto qc = lab.client();
  CHECK(read_stream(qc, {}, "/api/events?after=" + std::to_string(last - 3), has_all(last - 3)) ==
        expected_text(last - 3));

  // a live event reaches an open stream
  auto lc = lab.client();
  std::thread poke([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    lab.session->query({"sofa"});
  });
  const std::string live = read_stream(lc, {{"Last-Event-ID", std::to_string(last)}}, "/api/events",
                                       [](const std::string& got) { return got.find("\n\n") != std::string::npos; });
  poke.join();
  CHECK(live.rfind("id: " + std::to_string(last + 1) + "\nevent: query\n", 0) == 0);

  auto bad = lab.client().Get("/api/events", {{"Last-Event-ID", "soon"}});
  REQUIRE(bad);
  CHECK(bad->status == 400);
}

TEST_CASE("idle streams get keep-alive comments") {
  ServerOptions fast;
  fast.keepalive = std::chrono::milliseconds(50);
  LiveLab lab({}, fast);
  auto c = lab.client();
  const auto last = lab.session->events().last();
  const std::string got = read_stream(c, {{"Last-Event-ID", std::to_string(last)}}, "/api/events",
                                      [](const std::string& s) { return s.find(": keep-alive\n\n") != std::string::npos; });
  CHECK(got.rfind(": keep-alive\n\n", 0) == 0);
}

TEST_CASE("static files are served at the root") {
  const auto dir = std::filesystem::temp_directory_path() / "vsrnav_static";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>console</html>";
  std::ofstream(dir / "app.js") << "console.log(1);";

  ServerOptions with_static;
  with_static.static_dir = dir;
  LiveLab lab({}, with_static);
  auto c = lab.client();
  auto index = c.Get("/");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body == "<html>console</html>");
  auto js = c.Get("/app.js");
  REQUIRE(js);
  CHECK(js->body == "console.log(1);");
  // the API still wins under the mount
  auto state = c.Get("/api/state");
  REQUIRE(state);
  CHECK(state->status == 200);

  LiveLab bare;
  auto b = bare.client();
  auto none = b.Get("/");
  REQUIRE(none);
  CHECK(none->status == 404);

  CHECK_THROWS_AS(ApiServer(*bare.session, ServerOptions{dir / "missing", std::chrono::milliseconds(100)}), Error);
}

TEST_CASE("http status per error kind") {
  CHECK(http_status(ErrorKind::Busy) == 409);
  CHECK(http_status(ErrorKind::InvalidArgument) == 400);
  CHECK(http_status(ErrorKind::NoMatch) == 404);
  CHECK(http_status(ErrorKind::EmptyScene) == 404);
  CHECK(http_status(ErrorKind::InvalidPlan) == 422);
  CHECK(http_status(ErrorKind::ClientError) == 502);
  CHECK(http_status(ErrorKind::Timeout) == 504);
  CHECK(http_status(ErrorKind::IoError) == 500);
}
