// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "dragkit/cli.hpp"
#include "dragkit/io.hpp"
#include "dragkit/metrics.hpp"
#include "dragkit/scenario_library.hpp"
#include "gradient_cases.hpp"

using namespace dragkit;
namespace fs = std::filesystem;

namespace {

// A1
constexpr int kA1MaxSteps = 100;
constexpr double kA1MaxDistance = 2.0;
constexpr double kA1MinFidelity = 0.95;
constexpr double kA1MaxSeconds = 60.0;
// A2
constexpr int kA2Instances = 100;
constexpr double kA2MaxRelativeError = 1e-4;
// A3, A4
constexpr int kBenchSteps = 60;
constexpr int kA3MinWins = 4;
constexpr double kA3CaptureRadius = 3.0;
constexpr int kA4MinWins = 4;
// A5
const std::vector<double> kSweepValues{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
// A6
constexpr double kA6LossRatio = 1e-2;
constexpr double kA6FarRadius = 3.0;
constexpr double kA6MaxFarScore = 0.5;
constexpr double kA6MaxTimeShare = 0.10;
// A8
constexpr int kA8Grids = 200;

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunRecord run_variant(Scenario sc, double lambda, double tau) {
  SupervisionConfig base;
  base.max_steps = kBenchSteps;
  base.lambda = lambda;
  base.tau = tau;
  sc.config.lambda.reset();
  sc.config.tau.reset();
  sc.config.max_steps.reset();
  return run_scenario(sc, base);
}

void a1() {
  const fs::path dir = fs::temp_directory_path() / "dragkit_acceptance_a1";
  fs::remove_all(dir);
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = cli_main({"dragkit", "run", "--scenario", "single_blob", "--steps", std::to_string(kA1MaxSteps),
                             "--out", dir.string()},
                            out, err);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (code != exit_ok) {
    report("A1", false, fmt("cli exit %d: %s", code, err.str().c_str()));
    return;
  }
  const RunRecord r = load_record(dir / "single_blob" / "record.json");
  const double md = mean_distance(r), fid = fidelity_proxy(r).value;
  const double handle_to_target = distance(r.scenario.points[0].handle.to_vec(), r.scenario.points[0].target);
  const bool pass = r.status == SessionStatus::converged && int(r.steps.size()) <= kA1MaxSteps &&
                    md <= kA1MaxDistance && fid >= kA1MinFidelity && secs <= kA1MaxSeconds;
  report("A1", pass,
         fmt("drag %.0f px: status %s in %zu steps, MD %.3f px, fidelity %.6f, %.1f s", handle_to_target,
             std::string(to_string(r.status)).c_str(), r.steps.size(), md, fid, secs));
  fs::remove_all(dir);
}

void a2() {
  std::mt19937_64 rng(2024);
  double l1 = 0.0, l2 = 0.0, track = 0.0;
  for (int i = 0; i < kA2Instances; ++i) {
    const auto g = testing::gradient_instance(rng);
    l1 = std::max(l1, testing::dynamic_loss_error(g));
    l2 = std::max(l2, testing::template_loss_error(g));
    track = std::max(track, testing::tracker_loss_error(rng));
  }
  const bool pass = l1 < kA2MaxRelativeError && l2 < kA2MaxRelativeError && track < kA2MaxRelativeError;
  report("A2", pass, fmt("max relative error over %d instances: L1 %.2e, L2 %.2e, L_track %.2e", kA2Instances, l1, l2,
                         track));
}

Vec2 final_center(const RunRecord& r, std::size_t blob) {
  return semantic_oracle(r.scenario.scene, LatentCode(r.final_latent), blob);
}

void a3(const std::map<std::string, RunRecord>& full) {
  int wins = 0, captures = 0;
  std::string detail;
  const auto suite = make_suite("distractor");
  for (const Scenario& sc : suite) {
    const RunRecord& fr = full.at(sc.id);
    const RunRecord nd = run_variant(sc, 1.0, 0.4);
    const double md_full = mean_distance(fr), md_nd = mean_distance(nd);
    if (md_full < md_nd) ++wins;
    const std::size_t own = *sc.oracle_blob(0);
    const std::size_t twin = own == 0 ? 1 : 0;
    const Vec2 p_full = fr.steps.back().points[0].p.to_vec(), p_nd = nd.steps.back().points[0].p.to_vec();
    const bool captured = distance(p_nd, final_center(nd, twin)) <= kA3CaptureRadius &&
                          distance(p_full, final_center(fr, own)) <= kA3CaptureRadius;
    if (captured) ++captures;
    detail += fmt(" %s %.2f/%.2f%s;", sc.id.c_str(), md_full, md_nd, captured ? " (twin capture)" : "");
  }
  report("A3", wins >= kA3MinWins && captures >= 1,
         fmt("MD lambda=0.3 < lambda=1 in %d/%zu, twin captures %d:", wins, suite.size(), captures) + detail);
}

// Every supervised step's gate must be L2 exactly when the previous score was at or below tau·s1.
bool gate_audit(const RunRecord& r, int& l2_steps) {
  l2_steps = 0;
  for (std::size_t j = 0; j < r.steps.size(); ++j) {
    for (std::size_t i = 0; i < r.steps[j].points.size(); ++i) {
      const auto& p = r.steps[j].points[i];
      if (!p.supervised) continue;
      const Gate expect =
          j == 0 ? Gate::L1 : (r.steps[j - 1].points[i].s <= r.config.tau * *r.s1[i] ? Gate::L2 : Gate::L1);
      if (p.gate != expect) return false;
      if (p.gate == Gate::L2) ++l2_steps;
    }
  }
  return true;
}

void a4(const std::map<std::string, RunRecord>& full) {
  int wins = 0, audited = 0, with_l2 = 0;
  std::string detail;
  const auto suite = make_suite("drift");
  for (const Scenario& sc : suite) {
    const RunRecord& fr = full.at(sc.id);
    const RunRecord nc = run_variant(sc, 0.3, 0.0);
    const double f_full = fidelity_proxy(fr).value, f_nc = fidelity_proxy(nc).value;
    if (f_full > f_nc) ++wins;
    int l2 = 0;
    if (gate_audit(fr, l2)) ++audited;
    if (l2 > 0) ++with_l2;
    detail += fmt(" %s %.8f/%.8f L2x%d;", sc.id.c_str(), f_full, f_nc, l2);
  }
  const bool pass = wins >= kA4MinWins && audited == int(suite.size()) && with_l2 == int(suite.size());
  report("A4", pass,
         fmt("fidelity tau=0.4 > tau=0 in %d/%zu, gate audit %d/%zu, runs with L2 %d/%zu:", wins, suite.size(),
             audited, suite.size(), with_l2, suite.size()) +
             detail);
}

void a5() {
  const auto suite = make_suite("default");
  BenchOptions opt;
  opt.base.max_steps = kBenchSteps;
  const auto tau_rows = sweep(SweepParameter::tau, kSweepValues, suite, opt);
  bool monotone = true;
  std::size_t argmin = 0;
  int errors = 0;
  std::string detail;
  for (std::size_t i = 0; i < tau_rows.size(); ++i) {
    if (i > 0 && tau_rows[i].fidelity_proxy < tau_rows[i - 1].fidelity_proxy) monotone = false;
    if (tau_rows[i].mean_distance < tau_rows[argmin].mean_distance) argmin = i;
    errors += tau_rows[i].failures;
    detail += fmt(" tau %.1f: MD %.4f fid %.8f;", tau_rows[i].value, tau_rows[i].mean_distance,
                  tau_rows[i].fidelity_proxy);
  }
  const bool interior = argmin > 0 && argmin + 1 < tau_rows.size();
  const auto lambda_rows = sweep(SweepParameter::lambda, kSweepValues, suite, opt);
  int lambda_errors = 0;
  for (const auto& row : lambda_rows) lambda_errors += row.failures;
  report("A5", monotone && interior && errors == 0 && lambda_errors == 0,
         fmt("fidelity monotone %s, MD minimum at tau %.1f (%s), errors tau %d lambda %d:", monotone ? "yes" : "no",
             tau_rows[argmin].value, interior ? "interior" : "endpoint", errors, lambda_errors) +
             detail);
}

void a6(const std::map<std::string, RunRecord>& full) {
  int loss_ok = 0, far_ok = 0, time_ok = 0;
  double worst_ratio = 0.0, worst_far = 0.0, worst_share = 0.0;
  const auto suite = make_suite("default");
  for (const Scenario& sc : suite) {
    const SupervisionConfig cfg = sc.effective_config({});
    const ad::Tensor f0 = generate(sc.scene, sc.initial_latent()).tensor;
    const Cell p = sc.points[0].handle;
    const TrackerModel m =
        train_tracker(f0, p, {cfg.r2, cfg.effective_sigma_label(), cfg.tracker_iterations, cfg.tracker_step_size, 0});
    const double ratio = m.train_trace.back() / m.train_trace.front();
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio < kA6LossRatio) ++loss_ok;

    const ScoreMap s = score_map(f0, p, cfg.r2, feature_at(f0, p), m.z.values(), 0.0);
    double far = -1e300;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      if (distance(s.patch.cell_at(i), p) >= kA6FarRadius) far = std::max(far, s.scores[i]);
    }
    worst_far = std::max(worst_far, far);
    if (far < kA6MaxFarScore) ++far_ok;

    // share of a 60-step drag spent training, from the full-variant run
    const RunRecord& r = full.at(sc.id);
    const double per_step = r.timings.drag_seconds / std::max<std::size_t>(1, r.steps.size());
    const double share = r.timings.tracker_seconds / (r.timings.tracker_seconds + kBenchSteps * per_step);
    worst_share = std::max(worst_share, share);
    if (share < kA6MaxTimeShare) ++time_ok;
  }
  const int n = int(suite.size());
  report("A6", loss_ok == n && far_ok == n && time_ok == n,
         fmt("%d scenarios: loss ratio < 1e-2 in %d (worst %.2e), far score < 0.5 in %d (worst %.3f), "
             "training share < 10%% in %d (worst %.1f%%)",
             n, loss_ok, worst_ratio, far_ok, worst_far, time_ok, 100.0 * worst_share));
}

void a7() {
  int equal = 0, repeat = 0, total = 0;
  std::vector<Scenario> picks;
  for (const auto& name : {"distractor_twin_0", "distractor_twin_3", "drift_0", "drift_4", "plain_1", "long_range_2"}) {
    picks.push_back(make_scenario(name));
  }
  for (const Scenario& sc : picks) {
    ++total;
    SupervisionConfig base;
    base.max_steps = kBenchSteps;
    base.lambda = 1.0;
    base.tau = 0.0;
    Scenario s = sc;
    s.config.lambda.reset();
    s.config.tau.reset();
    s.config.max_steps.reset();
    const RunRecord a = run_scenario(s, base);
    const RunRecord b = run_baseline(s, base);
    if (a.steps == b.steps && a.final_latent == b.final_latent && a.status == b.status) ++equal;
    if (dump_record(run_scenario(s, base)) == dump_record(a)) ++repeat;
  }
  report("A7", equal == total && repeat == total,
         fmt("baseline bit-identical %d/%d, repeated records byte-identical %d/%d", equal, total, repeat, total));
}

void a8() {
  std::mt19937_64 rng(8);
  int agree = 0, with_ties = 0;
  for (int g = 0; g < kA8Grids; ++g) {
    const int w = 1 + int(rng() % 12), h = 1 + int(rng() % 12);
    ScoreMap m;
    m.patch.x0 = int(rng() % 40);
    m.patch.y0 = int(rng() % 40);
    m.patch.x1 = m.patch.x0 + w - 1;
    m.patch.y1 = m.patch.y0 + h - 1;
    m.patch.center = {m.patch.x0 + w / 2, m.patch.y0 + h / 2};
    const int levels = g % 2 == 0 ? 3 : 1000000;
    for (int i = 0; i < w * h; ++i) m.scores.push_back(double(rng() % levels) / levels);
    std::size_t best = 0;
    int count = 0;
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
      if (m.scores[i] > m.scores[best]) best = i;
    }
    for (double v : m.scores) count += v == m.scores[best];
    if (count > 1) ++with_ties;
    const TrackResult r = track_update(m);
    if (r.p == Cell{m.patch.x0 + int(best) % w, m.patch.y0 + int(best) / w} && r.s == m.scores[best]) ++agree;
  }
  report("A8", agree == kA8Grids, fmt("track_update equals brute force on %d/%d grids (%d with tied maxima)", agree,
                                      kA8Grids, with_ties));
}

}  // namespace

int main() {
  a1();
  a2();
  std::map<std::string, RunRecord> full;
  for (const Scenario& sc : make_suite("default")) full.emplace(sc.id, run_variant(sc, 0.3, 0.4));
  a3(full);
  a4(full);
  a5();
  a6(full);
  a7();
  a8();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
