#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <thread>

#include "httplib.h"

#include "dragkit/scenario_library.hpp"
#include "dragkit/session_service.hpp"

using namespace dragkit;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

// A manager behind a real socket on an ephemeral port.
struct Fixture {
  SessionManager manager;
  httplib::Server server;
  int port = 0;
  std::thread thread;

  explicit Fixture(fs::path record_dir = {}) : manager(SessionManager::Options{std::move(record_dir), {}}) {
    install_routes(server, manager);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Fixture() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

Json create(httplib::Client& c, const std::string& templ) {
  auto res = c.Post("/sessions?template=" + templ, "", "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 201);
  return Json::parse(res->body);
}

int control(httplib::Client& c, const std::string& id, const Json& body) {
  auto res = c.Post("/sessions/" + id + "/control", body.dump(), "application/json");
  REQUIRE(res);
  return res->status;
}

Json state(httplib::Client& c, const std::string& id) {
  auto res = c.Get("/sessions/" + id + "/state");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  return Json::parse(res->body);
}

Cell brightest(const Rgb8Image& img) {
  Cell best{0, 0};
  int v = -1;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto p = img.at(x, y);
      if (p[0] + p[1] + p[2] > v) {
        v = p[0] + p[1] + p[2];
        best = {x, y};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("create, step ten times, stream ten step messages") {
  Fixture f;
  auto c = f.client();
  const Json h = create(c, "single_blob");
  const std::string id = h["id"];
  CHECK(h["status"] == "running");
  CHECK(h["step"] == 0);

  CHECK(control(c, id, {{"command", "step"}, {"n", 10}}) == 202);

  std::string stream;
  int steps = 0;
  auto res = c.Get("/sessions/" + id + "/events", [&](const char* data, std::size_t n) {
    stream.append(data, n);
    steps = 0;
    for (std::size_t at = stream.find("event: step"); at != std::string::npos; at = stream.find("event: step", at + 1)) {
      ++steps;
    }
    return steps < 10;
  });
  CHECK(steps == 10);
  // messages arrive in step order
  int last = 0;
  for (std::size_t at = stream.find("data: "); at != std::string::npos; at = stream.find("data: ", at + 1)) {
    const Json step = Json::parse(stream.substr(at + 6, stream.find('\n', at) - at - 6));
    CHECK(step["step"].get<int>() == last + 1);
    last = step["step"];
  }
  CHECK(last == 10);

  REQUIRE(f.manager.wait_idle(id, 30s));
  const Json s = state(c, id);
  CHECK(s["step"] == 10);
  CHECK(s["gate_history"].size() == 10);
  CHECK(s["points"][0]["trajectory"].size() == 11);
  CHECK(s["status"] == "running");

  auto list = c.Get("/sessions");
  REQUIRE(list);
  CHECK(Json::parse(list->body).size() == 1);
}

TEST_CASE("resuming a stream with Last-Event-ID skips what was seen") {
  Fixture f;
  auto c = f.client();
  const std::string id = create(c, "plain_0")["id"];
  control(c, id, {{"command", "step"}, {"n", 4}});
  REQUIRE(f.manager.wait_idle(id, 30s));
  bool ended = false;
  CHECK(f.manager.events(id, 0, 10ms, ended).size() == 4);
  CHECK_FALSE(ended);

  std::string stream;
  httplib::Headers headers{{"Last-Event-ID", "1"}};
  c.Get("/sessions/" + id + "/events", headers, [&](const char* data, std::size_t n) {
    stream.append(data, n);
    return stream.find("id: 3\n") == std::string::npos;
  });
  CHECK(stream.find("id: 1\n") == std::string::npos);
  CHECK(stream.find("id: 2\n") != std::string::npos);
}

TEST_CASE("errors map to status codes") {
  Fixture f;
  auto c = f.client();
  CHECK(c.Get("/sessions/s99/state")->status == 404);
  CHECK(c.Get("/sessions/s99/frame")->status == 404);
  CHECK(c.Get("/sessions/s99/events")->status == 404);
  CHECK(c.Post("/sessions/s99/control", R"({"command":"run"})", "application/json")->status == 404);

  Scenario bad = make_scenario("plain_0");
  bad.points[0].handle = {-4, 10};
  auto res = c.Post("/sessions", dump_scenario(bad), "application/json");
  CHECK(res->status == 422);
  CHECK(Json::parse(res->body)["errors"][0].get<std::string>().find("points[0]") != std::string::npos);
  CHECK(c.Post("/sessions", R"({"id": 3})", "application/json")->status == 422);
  CHECK(c.Post("/sessions?template=nope", "", "application/json")->status == 422);

  Scenario quick = make_scenario("plain_1");
  quick.config.max_steps = 2;
  res = c.Post("/sessions", dump_scenario(quick), "application/json");
  REQUIRE(res->status == 201);
  const std::string id = Json::parse(res->body)["id"];
  CHECK(control(c, id, {{"command", "jump"}}) == 422);
  CHECK(control(c, id, {{"command", "step"}, {"n", 0}}) == 422);
  CHECK(c.Post("/sessions/" + id + "/control", "{not json", "application/json")->status == 400);
  CHECK(c.Get("/sessions/" + id + "/frame?heatmap=x")->status == 422);
  CHECK(c.Get("/sessions/" + id + "/frame?heatmap=7")->status == 422);

  CHECK(control(c, id, {{"command", "run"}}) == 202);
  REQUIRE(f.manager.wait_idle(id, 30s));
  CHECK(state(c, id)["status"] == "max_steps");
  CHECK(control(c, id, {{"command", "step"}}) == 409);
}

TEST_CASE("the heatmap's brightest pixel is the tracked point") {
  Fixture f;
  auto c = f.client();
  const std::string id = create(c, "distractor_twin_0")["id"];
  control(c, id, {{"command", "step"}, {"n", 12}});
  REQUIRE(f.manager.wait_idle(id, 60s));
  const Json s = state(c, id);
  const Cell p{s["points"][0]["p"][0], s["points"][0]["p"][1]};

  auto res = c.Get("/sessions/" + id + "/frame?heatmap=0");
  REQUIRE(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  const Rgb8Image img = decode_png(res->body);
  CHECK(brightest(img) == p);
  CHECK(img.at(p.x, p.y) == std::array<std::uint8_t, 3>{255, 255, 255});

  auto plain = c.Get("/sessions/" + id + "/frame");
  REQUIRE(plain->status == 200);
  CHECK(decode_png(plain->body).width == img.width);
}

TEST_CASE("pause stops a run at a step boundary") {
  Fixture f;
  auto c = f.client();
  const std::string id = create(c, "long_range_0")["id"];
  CHECK(control(c, id, {{"command", "run"}}) == 202);
  bool ended = false;
  f.manager.events(id, 0, 30s, ended);  // at least one step
  CHECK(control(c, id, {{"command", "pause"}}) == 202);
  REQUIRE(f.manager.wait_idle(id, 30s));
  const Json s = state(c, id);
  CHECK(s["status"] == "paused");
  const int at = s["step"];
  CHECK(at >= 1);
  CHECK(s["gate_history"].size() == std::size_t(at));
  CHECK(control(c, id, {{"command", "step"}, {"n", 2}}) == 202);
  REQUIRE(f.manager.wait_idle(id, 30s));
  CHECK(state(c, id)["step"] == at + 2);
}

TEST_CASE("terminal records are flushed and outlive the service") {
  const fs::path dir = fs::temp_directory_path() / "dragkit_test_service_records";
  fs::remove_all(dir);
  std::string record_path;
  std::string expected;
  {
    Fixture f(dir);
    auto c = f.client();
    Scenario sc = make_scenario("plain_2");
    sc.config.max_steps = 4;
    const std::string id = Json::parse(c.Post("/sessions", dump_scenario(sc), "application/json")->body)["id"];
    control(c, id, {{"command", "run"}});
    REQUIRE(f.manager.wait_idle(id, 30s));
    bool ended = false;
    const auto events = f.manager.events(id, 0, 1s, ended);
    CHECK(ended);
    CHECK(events.back().type == "end");
    const Json s = state(c, id);
    REQUIRE(s["record_path"].is_string());
    record_path = s["record_path"];
    expected = dump_record(run_scenario(sc));
  }
  REQUIRE(fs::exists(record_path));
  CHECK(dump_record(load_record(record_path)) == expected);
  fs::remove_all(dir);
}

TEST_CASE("concurrent sessions do not interfere") {
  Fixture f;
  auto c = f.client();
  const std::string a = create(c, "plain_0")["id"];
  const std::string b = create(c, "distractor_twin_2")["id"];
  CHECK(a != b);
  control(c, a, {{"command", "step"}, {"n", 6}});
  control(c, b, {{"command", "step"}, {"n", 6}});
  REQUIRE(f.manager.wait_idle(a, 60s));
  REQUIRE(f.manager.wait_idle(b, 60s));
  for (const auto& [id, name] : {std::pair{a, "plain_0"}, std::pair{b, "distractor_twin_2"}}) {
    auto solo = DragSession::start(make_scenario(name));
    for (int i = 0; i < 6; ++i) solo->step();
    const Json s = state(c, id);
    CHECK(s["step"] == 6);
    CHECK(s["latent"].get<std::vector<double>>() == solo->latent().values());
  }
}

TEST_CASE("commands parse strictly") {
  CHECK(command_from_json({{"command", "run"}}).kind == SessionCommand::Kind::run);
  const SessionCommand s = command_from_json({{"command", "step"}, {"n", 3}});
  CHECK(s.kind == SessionCommand::Kind::step);
  CHECK(s.n == 3);
  CHECK(command_from_json({{"command", "step"}}).n == 1);
  CHECK_THROWS_AS(command_from_json({{"command", "step"}, {"n", -1}}), ValidationError);
  CHECK_THROWS_AS(command_from_json({{"n", 2}}), ValidationError);
  CHECK_THROWS_AS(command_from_json(Json::array()), ValidationError);
}
