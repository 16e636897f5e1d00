#include "dragkit/drag_engine.hpp"

#include <chrono>

#include "dragkit/errors.hpp"

namespace dragkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool arrived(Cell p, Vec2 target, double radius) { return distance(p.to_vec(), target) <= radius; }

}  // namespace

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::initializing: return "initializing";
    case SessionStatus::running: return "running";
    case SessionStatus::paused: return "paused";
    case SessionStatus::converged: return "converged";
    case SessionStatus::max_steps: return "max_steps";
    case SessionStatus::failed: return "failed";
  }
  return "failed";
}

SessionStatus status_from_string(std::string_view text) {
  for (auto s : {SessionStatus::initializing, SessionStatus::running, SessionStatus::paused, SessionStatus::converged,
                 SessionStatus::max_steps, SessionStatus::failed}) {
    if (to_string(s) == text) return s;
  }
  throw Error("unknown session status '" + std::string(text) + "'");
}

bool is_terminal(SessionStatus status) {
  return status == SessionStatus::converged || status == SessionStatus::max_steps || status == SessionStatus::failed;
}

std::string_view to_string(EngineKind kind) { return kind == EngineKind::baseline ? "baseline" : "stabledrag"; }

EngineKind engine_from_string(std::string_view text) {
  if (text == "stabledrag") return EngineKind::stabledrag;
  if (text == "baseline") return EngineKind::baseline;
  throw Error("unknown engine '" + std::string(text) + "'");
}

DragSession::DragSession(const Scenario& scenario, const SupervisionConfig& config, EngineKind kind)
    : scenario_(scenario),
      config_(config),
      kind_(kind),
      generator_(scenario.scene),
      w_(scenario.initial_latent()),
      mask_(scenario.mask()),
      optimizer_(config.lr, 0.9, 0.999, config.adam_epsilon) {}

std::unique_ptr<DragSession> DragSession::start(const Scenario& scenario, const SupervisionConfig& base_config,
                                                EngineKind kind) {
  const SupervisionConfig config = scenario.effective_config(base_config);
  scenario.validate(config);

  std::unique_ptr<DragSession> session(new DragSession(scenario, config, kind));
  DragSession& s = *session;
  s.f0_ = s.generator_.generate(s.w_, scenario.id).tensor;
  s.f_ = s.f0_;

  s.record_.engine = kind;
  s.record_.scenario = scenario;
  s.record_.config = config;

  const TrackerTrainingConfig tcfg{config.r2, config.effective_sigma_label(), config.tracker_iterations,
                                   config.tracker_step_size, 100};
  for (const ScenarioPoint& sp : scenario.points) {
    DragPointState pt;
    pt.p0 = sp.handle;
    pt.p = sp.handle;
    pt.target = sp.target;
    pt.f_template = feature_at(s.f0_, sp.handle);
    if (kind == EngineKind::stabledrag) {
      pt.tracker = train_tracker(s.f0_, sp.handle, tcfg);
      s.record_.timings.tracker_seconds += pt.tracker.train_seconds;
    }
    pt.converged = arrived(pt.p, pt.target, config.convergence_radius);
    pt.trajectory.push_back({0, pt.p, 0.0});
    s.record_.tracker_traces.push_back(pt.tracker.train_trace);
    s.record_.tracker_snapshots.push_back(pt.tracker.snapshots);
    s.points_.push_back(std::move(pt));
  }
  for (std::size_t i = 0; i < s.points_.size(); ++i) s.last_maps_.push_back(s.current_score_map(i));
  s.record_.s1.assign(s.points_.size(), std::nullopt);
  s.record_.final_latent = s.w_.values();
  s.status_ = SessionStatus::running;
  s.record_.status = s.status_;
  return session;
}

ScoreMap DragSession::current_score_map(std::size_t i) const {
  const DragPointState& pt = points_.at(i);
  if (kind_ == EngineKind::baseline) return feature_difference_map(f_, pt.p, config_.r2, pt.f_template);
  return score_map(f_, pt.p, config_.r2, pt.f_template, pt.tracker.z.values(), config_.lambda);
}

const StepRecord& DragSession::step() {
  if (status_ != SessionStatus::running) {
    throw StateError("cannot step a session in status " + std::string(to_string(status_)));
  }
  const auto started = Clock::now();
  const int step_index = step_ + 1;

  std::vector<SupervisedPoint> supervised;
  supervised.reserve(points_.size());
  bool any_l1 = false, any_l2 = false;
  for (const DragPointState& pt : points_) {
    SupervisedPoint sp{pt.p0, pt.p, pt.target, !pt.converged, Gate::L1};
    if (kind_ == EngineKind::stabledrag) sp.gate = select_loss(pt.s_latest, pt.s1, config_.tau);
    if (sp.active) (sp.gate == Gate::L1 ? any_l1 : any_l2) = true;
    supervised.push_back(sp);
  }

  StepRecord rec;
  rec.step = step_index;
  rec.gate_choice = any_l1 && any_l2 ? "mixed" : any_l1 ? "L1" : any_l2 ? "L2" : "none";

  try {
    const SupervisionResult res = supervision_step(generator_, w_, optimizer_, f0_, supervised, mask_, config_);
    rec.loss = res.loss;
    rec.point_term = res.point_term;
    rec.mask_term = res.mask_term;
    f_ = generator_.generate(w_, scenario_.id).tensor;
  } catch (const NumericError& e) {
    rec.wall_seconds = seconds_since(started);
    rec.latent = w_.values();
    step_ = step_index;
    record_.steps.push_back(rec);
    record_.failure = e.what();
    finish(SessionStatus::failed);
    throw;
  }

  for (std::size_t i = 0; i < points_.size(); ++i) {
    DragPointState& pt = points_[i];
    PointStepRecord prec;
    prec.gate = supervised[i].gate;
    prec.supervised = supervised[i].active;
    if (!pt.converged) {
      last_maps_[i] = current_score_map(i);
      const TrackResult tr = track_update(last_maps_[i]);
      pt.p = tr.p;
      pt.s_latest = tr.s;
      if (!pt.s1) {
        pt.s1 = tr.s;
        record_.s1[i] = tr.s;
      }
      pt.converged = arrived(pt.p, pt.target, config_.convergence_radius);
      pt.trajectory.push_back({step_index, pt.p, tr.s});
    }
    prec.p = pt.p;
    prec.s = pt.s_latest.value_or(0.0);
    prec.converged = pt.converged;
    rec.points.push_back(prec);
  }

  step_ = step_index;
  rec.latent = w_.values();
  rec.wall_seconds = seconds_since(started);
  record_.timings.drag_seconds += rec.wall_seconds;
  record_.final_latent = w_.values();
  record_.steps.push_back(std::move(rec));

  bool all_done = true;
  for (const auto& pt : points_) all_done = all_done && pt.converged;
  if (all_done) {
    finish(SessionStatus::converged);
  } else if (step_ >= config_.max_steps) {
    finish(SessionStatus::max_steps);
  }
  return record_.steps.back();
}

SessionStatus DragSession::run(const std::function<void(const StepRecord&)>& on_step) {
  if (status_ == SessionStatus::paused) resume();
  while (status_ == SessionStatus::running) {
    if (consume_pause_request()) {
      pause();
      break;
    }
    bool all_done = true;
    for (const auto& pt : points_) all_done = all_done && pt.converged;
    if (all_done) {
      finish(SessionStatus::converged);
      break;
    }
    if (step_ >= config_.max_steps) {
      finish(SessionStatus::max_steps);
      break;
    }
    const StepRecord& rec = step();
    if (on_step) on_step(rec);
  }
  return status_;
}

void DragSession::resume() {
  if (status_ == SessionStatus::paused) {
    status_ = SessionStatus::running;
    record_.status = status_;
  } else if (status_ != SessionStatus::running) {
    throw StateError("cannot resume a session in status " + std::string(to_string(status_)));
  }
}

void DragSession::pause() {
  if (status_ == SessionStatus::running) {
    status_ = SessionStatus::paused;
    record_.status = status_;
  } else if (status_ != SessionStatus::paused) {
    throw StateError("cannot pause a session in status " + std::string(to_string(status_)));
  }
}

void DragSession::finish(SessionStatus status) {
  status_ = status;
  record_.status = status;
  record_.final_latent = w_.values();
}

RunRecord run_scenario(const Scenario& scenario, const SupervisionConfig& base_config, EngineKind kind) {
  auto session = DragSession::start(scenario, base_config, kind);
  try {
    session->run();
  } catch (const NumericError&) {
    // status and failure message are already in the record
  }
  return session->record();
}

RunRecord run_baseline(const Scenario& scenario, const SupervisionConfig& base_config) {
  return run_scenario(scenario, base_config, EngineKind::baseline);
}

}  // namespace dragkit
