#include "dragkit/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "dragkit/errors.hpp"

namespace dragkit {

double mean_distance(const Scenario& scenario, const LatentCode& final_latent) {
  if (scenario.points.empty()) throw UnsupportedScenarioError("mean_distance: scenario has no points");
  double total = 0.0;
  for (std::size_t i = 0; i < scenario.points.size(); ++i) {
    const auto blob = scenario.oracle_blob(i);
    if (!blob) {
      throw UnsupportedScenarioError("mean_distance: points[" + std::to_string(i) + "] has no semantic oracle");
    }
    total += distance(semantic_oracle(scenario.scene, final_latent, *blob), scenario.points[i].target);
  }
  return total / static_cast<double>(scenario.points.size());
}

double mean_distance(const RunRecord& record) {
  return mean_distance(record.scenario, LatentCode(record.final_latent));
}

Fidelity fidelity_proxy(const ad::Tensor& initial_field, const ad::Tensor& final_field, const MaskGrid& mask) {
  if (initial_field.shape() != final_field.shape() || initial_field.rank() != 3) {
    throw ShapeError("fidelity_proxy: fields must share a C×H×W shape");
  }
  const std::size_t C = initial_field.dim(0), H = initial_field.dim(1), W = initial_field.dim(2);
  if (static_cast<std::size_t>(mask.height()) != H || static_cast<std::size_t>(mask.width()) != W) {
    throw ShapeError("fidelity_proxy: mask does not match the field");
  }
  if (mask.all_editable()) return {1.0, true};

  const auto f0 = initial_field.values();
  const auto f = final_field.values();
  const auto [lo, hi] = std::minmax_element(f0.begin(), f0.end());
  const double range = *hi - *lo;
  const std::size_t plane = H * W;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t idx = 0; idx < plane; ++idx) {
    if (mask.cells()[idx]) continue;
    for (std::size_t c = 0; c < C; ++c) total += std::abs(f[c * plane + idx] - f0[c * plane + idx]);
    count += C;
  }
  const double mean = total / static_cast<double>(count);
  if (range <= 0.0) return {mean == 0.0 ? 1.0 : 0.0, false};
  return {1.0 - std::clamp(mean / range, 0.0, 1.0), false};
}

Fidelity fidelity_proxy(const RunRecord& record) {
  const FieldGenerator gen(record.scenario.scene);
  const ad::Tensor f0 = gen.generate(record.scenario.initial_latent()).tensor;
  const ad::Tensor f = gen.generate(LatentCode(record.final_latent)).tensor;
  return fidelity_proxy(f0, f, record.scenario.mask());
}

EvalResult evaluate(const RunRecord& record, const std::string& variant) {
  EvalResult r;
  r.scenario_id = record.scenario.id;
  r.variant = variant;
  r.mean_distance = mean_distance(record);
  const Fidelity fid = fidelity_proxy(record);
  r.fidelity_proxy = fid.value;
  r.fidelity_flagged = fid.no_preserved_region;
  r.steps_used = static_cast<int>(record.steps.size());
  r.wall_time = record.timings.tracker_seconds + record.timings.drag_seconds;
  r.status = std::string(to_string(record.status));
  r.error = record.failure;
  r.lambda = record.config.lambda;
  r.tau = record.config.tau;
  r.seed = record.scenario.seed;
  return r;
}

std::vector<Variant> ablation_variants() {
  return {{"full", 0.3, 0.4}, {"no-DPT", 1.0, 0.4}, {"no-CMS", 0.3, 0.0}, {"baseline", 1.0, 0.0}};
}

std::vector<EvalResult> run_jobs(const std::vector<std::pair<Scenario, SupervisionConfig>>& jobs,
                                 const std::vector<std::string>& labels, const BenchOptions& options) {
  std::vector<EvalResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto& [scenario, config] = jobs[j];
      EvalResult r;
      const auto started = std::chrono::steady_clock::now();
      try {
        r = evaluate(run_scenario(scenario, config), labels[j]);
      } catch (const std::exception& e) {
        r.scenario_id = scenario.id;
        r.variant = labels[j];
        r.status = "error";
        r.error = e.what();
        r.lambda = config.lambda;
        r.tau = config.tau;
        r.seed = scenario.seed;
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      }
      results[j] = r;
      if (options.on_result) {
        std::lock_guard lock(callback_mutex);
        options.on_result(r);
      }
    }
  };

  std::size_t threads = options.threads > 0 ? static_cast<std::size_t>(options.threads)
                                            : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, jobs.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return results;
}

namespace {

// The swept knobs must win over any override the scenario carries.
std::pair<Scenario, SupervisionConfig> job_for(Scenario scenario, const SupervisionConfig& base, double lambda,
                                               double tau) {
  scenario.config.lambda = lambda;
  scenario.config.tau = tau;
  SupervisionConfig config = base;
  config.lambda = lambda;
  config.tau = tau;
  return {std::move(scenario), config};
}

}  // namespace

std::vector<EvalResult> ablate(const std::vector<Scenario>& suite, const BenchOptions& options) {
  if (suite.empty()) throw ValidationError({"suite: must contain at least one scenario"});
  std::vector<Scenario> sorted = suite;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
  std::vector<std::pair<Scenario, SupervisionConfig>> jobs;
  std::vector<std::string> labels;
  for (const Scenario& sc : sorted) {
    for (const Variant& v : ablation_variants()) {
      jobs.push_back(job_for(sc, options.base, v.lambda, v.tau));
      labels.push_back(v.label);
    }
  }
  return run_jobs(jobs, labels, options);
}

std::vector<SweepRow> sweep(SweepParameter parameter, const std::vector<double>& values,
                            const std::vector<Scenario>& suite, const BenchOptions& options) {
  if (suite.empty()) throw ValidationError({"suite: must contain at least one scenario"});
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      bad.push_back("values[" + std::to_string(i) + "]: " + std::to_string(values[i]) + " is outside [0, 1]");
    }
  }
  if (values.empty()) bad.push_back("values: at least one value is required");
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::vector<Scenario> sorted = suite;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
  std::vector<std::pair<Scenario, SupervisionConfig>> jobs;
  std::vector<std::string> labels;
  const std::string name = parameter == SweepParameter::tau ? "tau" : "lambda";
  for (double v : values) {
    for (const Scenario& sc : sorted) {
      const double lambda = parameter == SweepParameter::tau ? 0.0 : v;
      const double tau = parameter == SweepParameter::tau ? v : 0.0;
      jobs.push_back(job_for(sc, options.base, lambda, tau));
      labels.push_back(name + "=" + std::to_string(v));
    }
  }
  const auto results = run_jobs(jobs, labels, options);

  std::vector<SweepRow> rows;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    SweepRow row;
    row.value = values[vi];
    int ok = 0;
    for (std::size_t s = 0; s < sorted.size(); ++s) {
      const EvalResult& r = results[vi * sorted.size() + s];
      row.rows.push_back(r);
      if (r.status == "error") {
        ++row.failures;
        continue;
      }
      row.mean_distance += r.mean_distance;
      row.fidelity_proxy += r.fidelity_proxy;
      ++ok;
    }
    if (ok > 0) {
      row.mean_distance /= ok;
      row.fidelity_proxy /= ok;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dragkit
