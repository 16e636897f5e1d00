#pragma once

// Drag orchestration: templates and trackers are prepared once, then every
// step gates the loss on tracking confidence, takes one latent update,
// regenerates the field and re-tracks each handle point inside its local
// search window.

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dragkit/feature_field.hpp"
#include "dragkit/motion_supervision.hpp"
#include "dragkit/point_tracker.hpp"
#include "dragkit/scenario.hpp"

namespace dragkit {

enum class SessionStatus { initializing, running, paused, converged, max_steps, failed };
std::string_view to_string(SessionStatus status);
SessionStatus status_from_string(std::string_view text);
bool is_terminal(SessionStatus status);

/// stabledrag: trained trackers, fused scores, confidence-gated loss.
/// baseline: template feature difference only, dynamic loss every step.
enum class EngineKind { stabledrag, baseline };
std::string_view to_string(EngineKind kind);
EngineKind engine_from_string(std::string_view text);

struct TrajectoryEntry {
  int step = 0;
  Cell p;
  double s = 0.0;
  friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

struct DragPointState {
  Cell p0;
  Cell p;
  Vec2 target;
  std::vector<double> f_template;  // F0(p0)
  TrackerModel tracker;
  std::optional<double> s1;
  std::optional<double> s_latest;
  bool converged = false;
  std::vector<TrajectoryEntry> trajectory;
};

struct PointStepRecord {
  Cell p;
  double s = 0.0;
  Gate gate = Gate::L1;
  bool supervised = false;  // false once the point had converged before this step
  bool converged = false;
  friend bool operator==(const PointStepRecord&, const PointStepRecord&) = default;
};

struct StepRecord {
  int step = 0;
  std::string gate_choice;  // "L1", "L2", "mixed", or "none" when no point was supervised
  double loss = 0.0;
  double point_term = 0.0;
  double mask_term = 0.0;
  std::vector<PointStepRecord> points;
  std::vector<double> latent;  // after the update
  double wall_seconds = 0.0;  // not part of record equality or canonical serialization

  friend bool operator==(const StepRecord& a, const StepRecord& b) {
    return a.step == b.step && a.gate_choice == b.gate_choice && a.loss == b.loss && a.point_term == b.point_term &&
           a.mask_term == b.mask_term && a.points == b.points && a.latent == b.latent;
  }
};

struct RunTimings {
  double tracker_seconds = 0.0;
  double drag_seconds = 0.0;
};

/// Everything needed to replay a drag's trajectories without re-running it.
struct RunRecord {
  EngineKind engine = EngineKind::stabledrag;
  Scenario scenario;
  SupervisionConfig config;
  std::vector<std::vector<double>> tracker_traces;  // one L_track trace per point
  std::vector<std::vector<ScoreSnapshot>> tracker_snapshots;
  std::vector<std::optional<double>> s1;
  std::vector<StepRecord> steps;
  SessionStatus status = SessionStatus::initializing;
  std::string failure;
  std::vector<double> final_latent;
  RunTimings timings;  // kept out of the canonical serialization
};

class DragSession {
 public:
  /// Validates the scenario, generates F0, extracts templates and trains one
  /// tracker per handle point. Throws ValidationError or TrainingDivergedError.
  static std::unique_ptr<DragSession> start(const Scenario& scenario, const SupervisionConfig& base_config = {},
                                            EngineKind kind = EngineKind::stabledrag);

  DragSession(const DragSession&) = delete;
  DragSession& operator=(const DragSession&) = delete;

  /// One gate → supervise → regenerate → track iteration. Requires status running.
  const StepRecord& step();

  /// Steps until terminal or until a pause request is seen between steps.
  /// `on_step` observes each completed record.
  SessionStatus run(const std::function<void(const StepRecord&)>& on_step = {});

  /// Asks a running `run()` to stop at the next step boundary.
  void request_pause() { pause_requested_ = true; }
  /// True if a pause was requested since the last call; clears the request.
  bool consume_pause_request() { return pause_requested_.exchange(false); }
  /// paused → running.
  void resume();
  /// Immediately pauses a session that is not inside run().
  void pause();

  SessionStatus status() const { return status_; }
  int step_count() const { return step_; }
  const Scenario& scenario() const { return scenario_; }
  const SupervisionConfig& config() const { return config_; }
  EngineKind kind() const { return kind_; }
  const FieldGenerator& generator() const { return generator_; }
  const LatentCode& latent() const { return w_; }
  const ad::Tensor& initial_field() const { return f0_; }
  const ad::Tensor& field() const { return f_; }
  const MaskGrid& mask() const { return mask_; }
  const std::vector<DragPointState>& points() const { return points_; }
  const RunRecord& record() const { return record_; }

  /// Score map of point `i` around its tracked position, as the engine would use it.
  ScoreMap current_score_map(std::size_t i) const;
  /// The map point `i` was last tracked on; its argmax is the point's current p.
  /// Before the first step it is the map around p0 on F0.
  const ScoreMap& last_score_map(std::size_t i) const { return last_maps_.at(i); }

 private:
  DragSession(const Scenario& scenario, const SupervisionConfig& config, EngineKind kind);
  void finish(SessionStatus status);

  Scenario scenario_;
  SupervisionConfig config_;
  EngineKind kind_;
  FieldGenerator generator_;
  LatentCode w_;
  ad::Tensor f0_;
  ad::Tensor f_;
  MaskGrid mask_;
  std::vector<DragPointState> points_;
  std::vector<ScoreMap> last_maps_;
  Adam optimizer_;
  int step_ = 0;
  SessionStatus status_ = SessionStatus::initializing;
  std::atomic<bool> pause_requested_{false};
  RunRecord record_;
};

/// The plain feature-difference scheme: no tracker, dynamic loss only,
/// tracking by nearest template feature in the search window.
RunRecord run_baseline(const Scenario& scenario, const SupervisionConfig& base_config = {});

/// Builds a session and runs it to a terminal status. A numeric failure is
/// reported through the record's status rather than thrown.
RunRecord run_scenario(const Scenario& scenario, const SupervisionConfig& base_config = {},
                       EngineKind kind = EngineKind::stabledrag);

}  // namespace dragkit
