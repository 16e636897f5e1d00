#pragma once

// Drag sessions behind an HTTP API. Each session owns a worker thread that
// drains a command queue; observers only ever see snapshots taken at step
// boundaries.
//
//   POST /sessions                   ScenarioFile body, or ?template=<name>
//   GET  /sessions
//   GET  /sessions/{id}/state
//   POST /sessions/{id}/control      {"command": "step", "n": N} | {"command": "run"} | {"command": "pause"}
//   GET  /sessions/{id}/frame        PNG; ?heatmap=<point index> paints that point's score map
//   GET  /sessions/{id}/events       server-sent events, one "step" message per StepRecord, then "end"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dragkit/drag_engine.hpp"
#include "dragkit/errors.hpp"
#include "dragkit/image.hpp"
#include "dragkit/io.hpp"

namespace httplib {
class Server;
}

namespace dragkit {

class NotFoundError : public Error {
 public:
  using Error::Error;
};

struct PointView {
  Cell p0;
  Cell p;
  Vec2 target;
  std::optional<double> s1;
  std::optional<double> s;
  bool converged = false;
  std::vector<TrajectoryEntry> trajectory;
};

/// Immutable view of a session between two steps.
struct SessionSnapshot {
  std::string id;
  std::string scenario_id;
  std::string created_at;
  SessionStatus status = SessionStatus::initializing;
  int step = 0;
  double tau = 0.0;
  std::vector<PointView> points;
  std::vector<std::string> gate_history;
  std::vector<double> latent;
  std::vector<ScoreMap> score_maps;  // map each point was last tracked on
  std::string failure;
  std::optional<std::filesystem::path> record_path;  // set once the record is flushed
};

Json to_json(const SessionSnapshot& snapshot);

struct SessionCommand {
  enum class Kind { step, run, pause };
  Kind kind = Kind::step;
  int n = 1;
};

/// Throws ValidationError on an unknown command or a non-positive step count.
SessionCommand command_from_json(const Json& doc);

struct SessionEvent {
  std::size_t index = 0;
  std::string type;  // "step" or "end"
  std::string data;  // JSON text
};

class SessionManager {
 public:
  struct Options {
    std::filesystem::path record_dir;  // empty: no write-through
    SupervisionConfig base;
  };

  explicit SessionManager(Options options);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Validates the scenario and trains its trackers before returning.
  std::shared_ptr<const SessionSnapshot> create(const Scenario& scenario);
  std::vector<std::shared_ptr<const SessionSnapshot>> list() const;
  std::shared_ptr<const SessionSnapshot> state(const std::string& id) const;

  /// Queues a command. Throws NotFoundError, or StateError for a terminal session.
  void control(const std::string& id, const SessionCommand& command);

  Rgb8Image frame(const std::string& id, std::optional<std::size_t> heatmap_point = std::nullopt) const;

  /// Events from `from` on. Blocks up to `timeout` while none are available
  /// and the stream has not ended. `ended` is set once the "end" event is included.
  std::vector<SessionEvent> events(const std::string& id, std::size_t from, std::chrono::milliseconds timeout,
                                   bool& ended) const;

  /// Waits until the command queue is drained and no command is executing.
  bool wait_idle(const std::string& id, std::chrono::milliseconds timeout) const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;
  void work(Entry& entry, std::stop_token stop);
  void publish(Entry& entry, const StepRecord* step);

  Options options_;
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Entry>> entries_;
  std::size_t next_id_ = 1;
};

/// Registers every endpoint on `server`.
void install_routes(httplib::Server& server, SessionManager& manager);

}  // namespace dragkit
