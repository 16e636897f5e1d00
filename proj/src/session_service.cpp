#include "dragkit/session_service.hpp"

#include <condition_variable>
#include <ctime>

#include "httplib.h"

#include "dragkit/scenario_library.hpp"

namespace dragkit {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

struct SessionManager::Entry {
  std::string id;
  std::string created_at;
  std::unique_ptr<DragSession> session;

  mutable std::mutex mu;
  mutable std::condition_variable_any cv;
  std::deque<SessionCommand> queue;
  bool busy = false;
  std::vector<SessionEvent> events;
  bool ended = false;
  std::shared_ptr<const SessionSnapshot> snapshot;
  std::optional<fs::path> record_path;

  std::jthread worker;  // declared last so it is joined before the rest is torn down
};

Json to_json(const SessionSnapshot& s) {
  Json j;
  j["id"] = s.id;
  j["scenario_id"] = s.scenario_id;
  j["created_at"] = s.created_at;
  j["status"] = std::string(to_string(s.status));
  j["step"] = s.step;
  j["tau"] = s.tau;
  Json points = Json::array();
  for (const PointView& p : s.points) {
    Json pj;
    pj["p0"] = Json::array({p.p0.x, p.p0.y});
    pj["p"] = Json::array({p.p.x, p.p.y});
    pj["target"] = Json::array({p.target.x, p.target.y});
    pj["s1"] = optional_json(p.s1);
    pj["s"] = optional_json(p.s);
    pj["threshold"] = p.s1 ? Json(s.tau * *p.s1) : Json(nullptr);
    pj["converged"] = p.converged;
    Json traj = Json::array();
    for (const auto& t : p.trajectory) traj.push_back({{"step", t.step}, {"p", Json::array({t.p.x, t.p.y})}, {"s", t.s}});
    pj["trajectory"] = std::move(traj);
    points.push_back(std::move(pj));
  }
  j["points"] = std::move(points);
  j["gate_history"] = s.gate_history;
  j["latent"] = s.latent;
  j["failure"] = s.failure;
  j["record_path"] = s.record_path ? Json(s.record_path->string()) : Json(nullptr);
  return j;
}

SessionCommand command_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("command") || !doc["command"].is_string()) {
    throw ValidationError({"command: expected {\"command\": \"step\" | \"run\" | \"pause\"}"});
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "command" && key != "n") throw ValidationError({key + ": unknown key"});
  }
  const std::string name = doc["command"].get<std::string>();
  SessionCommand cmd;
  if (name == "step") {
    cmd.kind = SessionCommand::Kind::step;
    if (doc.contains("n")) {
      if (!doc["n"].is_number_integer() || doc["n"].get<long long>() < 1 || doc["n"].get<long long>() > 100000) {
        throw ValidationError({"n: expected an integer step count >= 1"});
      }
      cmd.n = doc["n"].get<int>();
    }
  } else if (name == "run") {
    cmd.kind = SessionCommand::Kind::run;
  } else if (name == "pause") {
    cmd.kind = SessionCommand::Kind::pause;
  } else {
    throw ValidationError({"command: unknown command '" + name + "'"});
  }
  return cmd;
}

SessionManager::SessionManager(Options options) : options_(std::move(options)) {}

SessionManager::~SessionManager() {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::lock_guard lock(mutex_);
    entries = entries_;
  }
  for (auto& e : entries) {
    e->session->request_pause();
    e->worker.request_stop();
    e->cv.notify_all();
    if (e->worker.joinable()) e->worker.join();
  }
}

std::shared_ptr<const SessionSnapshot> SessionManager::create(const Scenario& scenario) {
  auto entry = std::make_shared<Entry>();
  entry->session = DragSession::start(scenario, options_.base);
  entry->created_at = utc_now();
  {
    std::lock_guard lock(mutex_);
    entry->id = "s" + std::to_string(next_id_++);
  }
  publish(*entry, nullptr);
  entry->worker = std::jthread([this, e = entry.get()](std::stop_token stop) { work(*e, stop); });
  std::lock_guard lock(mutex_);
  entries_.push_back(entry);
  std::lock_guard entry_lock(entry->mu);
  return entry->snapshot;
}

std::vector<std::shared_ptr<const SessionSnapshot>> SessionManager::list() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::lock_guard lock(mutex_);
    entries = entries_;
  }
  std::vector<std::shared_ptr<const SessionSnapshot>> out;
  for (const auto& e : entries) {
    std::lock_guard lock(e->mu);
    out.push_back(e->snapshot);
  }
  return out;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& e : entries_) {
    if (e->id == id) return e;
  }
  throw NotFoundError("unknown session '" + id + "'");
}

std::shared_ptr<const SessionSnapshot> SessionManager::state(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lock(e->mu);
  return e->snapshot;
}

void SessionManager::control(const std::string& id, const SessionCommand& command) {
  auto e = find(id);
  std::lock_guard lock(e->mu);
  if (is_terminal(e->snapshot->status)) {
    throw StateError("session " + id + " is " + std::string(to_string(e->snapshot->status)));
  }
  if (command.kind == SessionCommand::Kind::pause) e->session->request_pause();
  e->queue.push_back(command);
  e->cv.notify_all();
}

Rgb8Image SessionManager::frame(const std::string& id, std::optional<std::size_t> heatmap_point) const {
  auto e = find(id);
  std::shared_ptr<const SessionSnapshot> snap;
  {
    std::lock_guard lock(e->mu);
    snap = e->snapshot;
  }
  if (heatmap_point && *heatmap_point >= snap->score_maps.size()) {
    throw ValidationError({"heatmap: point " + std::to_string(*heatmap_point) + " does not exist"});
  }
  Rgb8Image image = field_image(e->session->generator().generate(LatentCode(snap->latent)).tensor);
  if (heatmap_point) {
    overlay_heatmap(image, snap->score_maps[*heatmap_point]);
    return image;
  }
  std::vector<std::vector<Cell>> paths;
  std::vector<Vec2> targets;
  for (const PointView& p : snap->points) {
    std::vector<Cell> path;
    for (const auto& t : p.trajectory) path.push_back(t.p);
    paths.push_back(std::move(path));
    targets.push_back(p.target);
  }
  overlay_trajectories(image, paths, targets);
  return image;
}

std::vector<SessionEvent> SessionManager::events(const std::string& id, std::size_t from,
                                                 std::chrono::milliseconds timeout, bool& ended) const {
  auto e = find(id);
  std::unique_lock lock(e->mu);
  e->cv.wait_for(lock, timeout, [&] { return e->events.size() > from || e->ended; });
  std::vector<SessionEvent> out;
  for (std::size_t i = from; i < e->events.size(); ++i) out.push_back(e->events[i]);
  ended = e->ended;
  return out;
}

bool SessionManager::wait_idle(const std::string& id, std::chrono::milliseconds timeout) const {
  auto e = find(id);
  std::unique_lock lock(e->mu);
  return e->cv.wait_for(lock, timeout, [&] { return e->queue.empty() && !e->busy; });
}

void SessionManager::work(Entry& e, std::stop_token stop) {
  std::stop_callback on_stop(stop, [&e] { e.session->request_pause(); });
  DragSession& s = *e.session;
  while (!stop.stop_requested()) {
    SessionCommand cmd;
    {
      std::unique_lock lock(e.mu);
      e.cv.wait(lock, stop, [&] { return !e.queue.empty(); });
      if (stop.stop_requested()) return;
      cmd = e.queue.front();
      e.queue.pop_front();
      e.busy = true;
    }
    auto on_step = [&](const StepRecord& rec) { publish(e, &rec); };
    try {
      switch (cmd.kind) {
        case SessionCommand::Kind::pause:
          s.consume_pause_request();
          if (s.status() == SessionStatus::running) s.pause();
          publish(e, nullptr);
          break;
        case SessionCommand::Kind::step:
          if (s.status() == SessionStatus::paused) s.resume();
          for (int i = 0; i < cmd.n && s.status() == SessionStatus::running; ++i) {
            if (stop.stop_requested()) break;
            if (s.consume_pause_request()) {
              s.pause();
              break;
            }
            on_step(s.step());
          }
          publish(e, nullptr);
          break;
        case SessionCommand::Kind::run:
          if (is_terminal(s.status())) break;
          s.run(on_step);
          publish(e, nullptr);
          break;
      }
    } catch (const NumericError&) {
      // the failed step is already in the record
      publish(e, &s.record().steps.back());
    } catch (const StateError&) {
      publish(e, nullptr);
    }
    {
      std::lock_guard lock(e.mu);
      e.busy = false;
    }
    e.cv.notify_all();
  }
}

void SessionManager::publish(Entry& e, const StepRecord* step) {
  const DragSession& s = *e.session;
  auto snap = std::make_shared<SessionSnapshot>();
  snap->id = e.id;
  snap->scenario_id = s.scenario().id;
  snap->created_at = e.created_at;
  snap->status = s.status();
  snap->step = s.step_count();
  snap->tau = s.config().tau;
  for (std::size_t i = 0; i < s.points().size(); ++i) {
    const DragPointState& pt = s.points()[i];
    snap->points.push_back({pt.p0, pt.p, pt.target, pt.s1, pt.s_latest, pt.converged, pt.trajectory});
    snap->score_maps.push_back(s.last_score_map(i));
  }
  for (const auto& rec : s.record().steps) snap->gate_history.push_back(rec.gate_choice);
  snap->latent = s.latent().values();
  snap->failure = s.record().failure;

  const bool terminal = is_terminal(s.status());
  if (terminal && !e.record_path && !options_.record_dir.empty()) {
    e.record_path = save_run(options_.record_dir / e.id, s.record(), snap->score_maps).record;
  }
  snap->record_path = e.record_path;

  {
    std::lock_guard lock(e.mu);
    // a repeated publish without a new step only refreshes the snapshot
    if (step && (e.events.empty() || e.events.back().type != "end")) {
      e.events.push_back({e.events.size(), "step", to_json(*step).dump()});
    }
    if (terminal && !e.ended) {
      Json end{{"status", std::string(to_string(s.status()))}, {"step", s.step_count()}};
      end["record_path"] = e.record_path ? Json(e.record_path->string()) : Json(nullptr);
      e.events.push_back({e.events.size(), "end", end.dump()});
      e.ended = true;
    }
    e.snapshot = std::move(snap);
  }
  e.cv.notify_all();
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& handler) {
  try {
    handler();
  } catch (const NotFoundError& e) {
    send_json(res, 404, {{"error", e.what()}});
  } catch (const ValidationError& e) {
    send_json(res, 422, {{"error", "validation failed"}, {"errors", e.violations()}});
  } catch (const StateError& e) {
    send_json(res, 409, {{"error", e.what()}});
  } catch (const Json::exception& e) {
    send_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

Json handle_json(const SessionSnapshot& s) {
  return {{"id", s.id}, {"scenario_id", s.scenario_id}, {"status", std::string(to_string(s.status))},
          {"created_at", s.created_at}, {"step", s.step}};
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& manager) {
  server.Post("/sessions", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Scenario scenario;
      if (req.has_param("template")) {
        scenario = make_scenario(req.get_param_value("template"));
      } else {
        scenario = parse_scenario(req.body);
      }
      send_json(res, 201, handle_json(*manager.create(scenario)));
    });
  });

  server.Get("/sessions", [&manager](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Json out = Json::array();
      for (const auto& s : manager.list()) out.push_back(handle_json(*s));
      send_json(res, 200, out);
    });
  });

  server.Get(R"(/sessions/([^/]+)/state)", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(*manager.state(req.matches[1]))); });
  });

  server.Post(R"(/sessions/([^/]+)/control)", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      manager.state(id);
      const SessionCommand cmd = command_from_json(Json::parse(req.body));
      manager.control(id, cmd);
      send_json(res, 202, {{"accepted", true}, {"id", id}});
    });
  });

  server.Get(R"(/sessions/([^/]+)/frame)", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<std::size_t> heatmap;
      if (req.has_param("heatmap")) {
        const std::string v = req.get_param_value("heatmap");
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 6) {
          throw ValidationError({"heatmap: expected a point index"});
        }
        heatmap = std::stoul(v);
      }
      const std::string png = encode_png(manager.frame(req.matches[1], heatmap));
      res.status = 200;
      res.set_content(png, "image/png");
    });
  });

  server.Get(R"(/sessions/([^/]+)/events)", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      manager.state(id);
      std::size_t from = 0;
      if (req.has_header("Last-Event-ID")) from = std::stoul(req.get_header_value("Last-Event-ID")) + 1;
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [&manager, id, next = from](std::size_t, httplib::DataSink& sink) mutable {
            if (!sink.is_writable()) return false;
            bool ended = false;
            const auto events = manager.events(id, next, 250ms, ended);
            for (const auto& ev : events) {
              const std::string msg =
                  "id: " + std::to_string(ev.index) + "\nevent: " + ev.type + "\ndata: " + ev.data + "\n\n";
              if (!sink.write(msg.data(), msg.size())) return false;
              next = ev.index + 1;
            }
            if (ended) sink.done();
            return true;
          });
    });
  });
}

}  // namespace dragkit
