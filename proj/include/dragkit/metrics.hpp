#pragma once

// Evaluation of finished drags against the generator's ground truth, plus the
// ablation and sensitivity harnesses built on top of it.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dragkit/drag_engine.hpp"

namespace dragkit {

/// Mean over points of the distance from the blob's true final center to its target.
/// Throws UnsupportedScenarioError when a point has no backing blob.
double mean_distance(const Scenario& scenario, const LatentCode& final_latent);
double mean_distance(const RunRecord& record);

struct Fidelity {
  double value = 1.0;
  bool no_preserved_region = false;  // all-ones mask: value is 1 by convention
};

/// 1 − clamp(mean |F − F0| over preserved cells and channels / (max F0 − min F0), 0, 1).
Fidelity fidelity_proxy(const ad::Tensor& initial_field, const ad::Tensor& final_field, const MaskGrid& mask);
Fidelity fidelity_proxy(const RunRecord& record);

struct EvalResult {
  std::string scenario_id;
  std::string variant;
  double mean_distance = 0.0;
  double fidelity_proxy = 1.0;
  bool fidelity_flagged = false;
  int steps_used = 0;
  double wall_time = 0.0;
  std::string status;  // terminal session status, or "error"
  std::string error;
  double lambda = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
};

EvalResult evaluate(const RunRecord& record, const std::string& variant);

struct Variant {
  std::string label;
  double lambda = 0.3;
  double tau = 0.4;
};

/// full (λ=0.3, τ=0.4), no-DPT (λ=1), no-CMS (τ=0), baseline (λ=1, τ=0).
std::vector<Variant> ablation_variants();

struct BenchOptions {
  SupervisionConfig base;  // max_steps and every other knob except the swept ones
  int threads = 0;         // 0: hardware concurrency
  std::function<void(const EvalResult&)> on_result;  // called as rows finish, from worker threads
};

/// Every scenario under every variant. Failed runs become rows with status
/// "error" instead of aborting. Rows sorted by scenario id, then variant order.
std::vector<EvalResult> ablate(const std::vector<Scenario>& suite, const BenchOptions& options);

enum class SweepParameter { tau, lambda };

struct SweepRow {
  double value = 0.0;
  double mean_distance = 0.0;   // aggregate over successful rows
  double fidelity_proxy = 0.0;  // aggregate over successful rows
  int failures = 0;
  std::vector<EvalResult> rows;
};

/// τ sweeps hold λ = 0; λ sweeps hold τ = 0. Values must lie in [0, 1].
std::vector<SweepRow> sweep(SweepParameter parameter, const std::vector<double>& values,
                            const std::vector<Scenario>& suite, const BenchOptions& options);

/// Runs arbitrary (scenario, config) jobs in parallel; results keep job order.
std::vector<EvalResult> run_jobs(const std::vector<std::pair<Scenario, SupervisionConfig>>& jobs,
                                 const std::vector<std::string>& labels, const BenchOptions& options);

}  // namespace dragkit
