#include "dragkit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"

#include "dragkit/image.hpp"
#include "dragkit/io.hpp"
#include "dragkit/metrics.hpp"
#include "dragkit/report.hpp"
#include "dragkit/scenario_library.hpp"
#include "dragkit/session_service.hpp"

namespace dragkit {

namespace fs = std::filesystem;

namespace {

struct Knobs {
  std::optional<int> steps;
  std::optional<double> tau, lambda, eta, r1;
  std::optional<int> r2;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--steps", steps, "maximum drag steps")->check(CLI::PositiveNumber);
    cmd.add_option("--tau", tau, "confidence threshold tau");
    cmd.add_option("--lambda", lambda, "score fusion weight lambda");
    cmd.add_option("--eta", eta, "mask term weight");
    cmd.add_option("--r1", r1, "supervision radius (px)");
    cmd.add_option("--r2", r2, "tracking window radius (px)");
    cmd.add_option("--seed", seed, "scenario seed");
  }

  // Flags win over whatever the scenario carries.
  void apply(Scenario& sc) const {
    if (steps) sc.config.max_steps = *steps;
    if (tau) sc.config.tau = *tau;
    if (lambda) sc.config.lambda = *lambda;
    if (eta) sc.config.eta = *eta;
    if (r1) sc.config.r1 = *r1;
    if (r2) sc.config.r2 = *r2;
    if (seed) sc.set_seed(*seed);
  }
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "out";
}

Scenario resolve_scenario(const std::string& spec) {
  if (fs::is_regular_file(spec)) return load_scenario(spec);
  if (spec.ends_with(".json")) throw ValidationError({"scenario: no such file '" + spec + "'"});
  return make_scenario(spec);
}

std::vector<Scenario> resolve_suite(const std::string& name, const Knobs& knobs) {
  auto suite = make_suite(name);
  for (auto& sc : suite) {
    // the bench owns steps, tau and lambda; only scene-level knobs pass through
    if (knobs.eta) sc.config.eta = *knobs.eta;
    if (knobs.r1) sc.config.r1 = *knobs.r1;
    if (knobs.r2) sc.config.r2 = *knobs.r2;
    if (knobs.seed) sc.set_seed(*knobs.seed);
  }
  return suite;
}

int cmd_gen(const std::string& name, const Knobs& knobs, const std::string& out_flag, std::ostream& out) {
  Scenario sc = make_scenario(name);
  knobs.apply(sc);
  sc.validate(sc.effective_config({}));
  const fs::path path = output_dir(out_flag) / (sc.id + ".json");
  save_scenario(path, sc);
  out << path.string() << '\n';
  return exit_ok;
}

int cmd_run(const std::string& spec, const Knobs& knobs, const std::string& engine, const std::string& out_flag,
            std::ostream& out) {
  Scenario sc = resolve_scenario(spec);
  knobs.apply(sc);
  if (engine != "stabledrag" && engine != "baseline") {
    throw ValidationError({"engine: expected stabledrag or baseline, got '" + engine + "'"});
  }
  const EngineKind kind = engine_from_string(engine);
  auto session = DragSession::start(sc, {}, kind);
  try {
    session->run();
  } catch (const NumericError&) {
    // recorded as a failed status
  }
  const RunRecord& rec = session->record();
  const fs::path dir = output_dir(out_flag) / sc.id;
  std::vector<ScoreMap> maps;
  for (std::size_t i = 0; i < session->points().size(); ++i) maps.push_back(session->last_score_map(i));
  const RunArtifacts art = save_run(dir, rec, maps);
  const fs::path before = dir / "before.png", after = dir / "after.png";
  write_png(before, render_record_step(rec, 0));
  write_png(after, render_record_step(rec, static_cast<int>(rec.steps.size())));

  for (const fs::path& p : {art.record, art.timings, art.initial_field, art.final_field}) out << p.string() << '\n';
  for (const auto& p : art.score_maps) out << p.string() << '\n';
  out << before.string() << '\n' << after.string() << '\n';

  const EvalResult e = evaluate(rec, std::string(to_string(kind)));
  out << "status " << e.status << "  steps " << e.steps_used << "  mean_distance " << e.mean_distance
      << "  fidelity " << e.fidelity_proxy << '\n';
  if (rec.status == SessionStatus::failed) {
    out << "failure: " << rec.failure << '\n';
    return exit_runtime;
  }
  return exit_ok;
}

BenchOptions bench_options(const Knobs& knobs, int threads, std::ostream& err) {
  BenchOptions opt;
  opt.base.max_steps = knobs.steps.value_or(60);
  opt.threads = threads;
  opt.on_result = [&err](const EvalResult& r) {
    err << "  " << r.scenario_id << " " << r.variant << " " << r.status << '\n';
  };
  return opt;
}

int cmd_ablate(const std::string& suite, const Knobs& knobs, int threads, const std::string& out_flag,
               std::ostream& out, std::ostream& err) {
  if (knobs.tau || knobs.lambda) throw ValidationError({"ablate: tau and lambda are fixed by the variants"});
  const auto opt = bench_options(knobs, threads, err);
  const auto rows = ablate(resolve_suite(suite, knobs), opt);
  const ReportPaths paths = write_ablation_report(output_dir(out_flag), rows, opt.base.max_steps);
  out << ablation_table(rows);
  out << paths.json.string() << '\n' << paths.table.string() << '\n' << paths.timings.string() << '\n';
  for (const auto& r : rows) {
    if (r.status == "error") return exit_runtime;
  }
  return exit_ok;
}

int cmd_sweep(const std::string& param, const std::vector<double>& values, const std::string& suite,
              const Knobs& knobs, int threads, const std::string& out_flag, std::ostream& out, std::ostream& err) {
  SweepParameter p;
  if (param == "tau") {
    p = SweepParameter::tau;
  } else if (param == "lambda") {
    p = SweepParameter::lambda;
  } else {
    throw ValidationError({"param: expected tau or lambda, got '" + param + "'"});
  }
  const auto opt = bench_options(knobs, threads, err);
  const auto rows = sweep(p, values, resolve_suite(suite, knobs), opt);
  const ReportPaths paths = write_sweep_report(output_dir(out_flag), p, rows, opt.base.max_steps);
  out << sweep_table(p, rows);
  out << paths.json.string() << '\n' << paths.table.string() << '\n' << paths.timings.string() << '\n';
  for (const auto& r : rows) {
    if (r.failures > 0) return exit_runtime;
  }
  return exit_ok;
}

int cmd_render(const std::string& record_path, std::optional<int> step, const std::string& out_flag,
               std::ostream& out) {
  if (!fs::is_regular_file(record_path)) throw ValidationError({"record: no such file '" + record_path + "'"});
  const RunRecord rec = load_record(record_path);
  const int k = step.value_or(static_cast<int>(rec.steps.size()));
  if (k < 0 || k > static_cast<int>(rec.steps.size())) {
    throw ValidationError({"step: " + std::to_string(k) + " is outside 0.." + std::to_string(rec.steps.size())});
  }
  const fs::path dir = out_flag.empty() ? fs::path(record_path).parent_path() : fs::path(out_flag);
  const fs::path path = dir / ("step_" + std::to_string(k) + ".png");
  write_png(path, render_record_step(rec, k));
  out << path.string() << '\n';
  return exit_ok;
}

int cmd_serve(const std::string& host, int port, const std::string& out_flag, std::ostream& out) {
  SessionManager::Options opt;
  opt.record_dir = output_dir(out_flag) / "sessions";
  SessionManager manager(opt);
  httplib::Server server;
  install_routes(server, manager);
  out << "serving on http://" << host << ':' << port << "  records in " << opt.record_dir.string() << std::endl;
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return exit_ok;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dragkit: point-based drag editing on synthetic feature fields"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Knobs knobs;
  std::string scenario, out_flag, suite = "default", engine = "stabledrag", record, param, host = "127.0.0.1";
  std::optional<int> step;
  int threads = 0, port = 8080;
  std::vector<double> values{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  auto* gen = app.add_subcommand("gen-scenario", "write a scenario file from a named template");
  gen->add_option("--scenario", scenario, "template name")->required();
  gen->add_option("--out", out_flag, "output directory");
  knobs.add_to(*gen);

  auto* run = app.add_subcommand("run", "run one drag and write its record and images");
  run->add_option("--scenario", scenario, "scenario file or template name")->required();
  run->add_option("--engine", engine, "stabledrag or baseline");
  run->add_option("--out", out_flag, "output directory");
  knobs.add_to(*run);

  auto* abl = app.add_subcommand("ablate", "run the four-variant ablation over a suite");
  abl->add_option("--suite", suite, "suite name");
  abl->add_option("--out", out_flag, "output directory");
  abl->add_option("--threads", threads, "worker threads (0: all cores)");
  knobs.add_to(*abl);

  auto* swp = app.add_subcommand("sweep", "sweep tau or lambda over a suite");
  swp->add_option("--param", param, "tau or lambda")->required();
  swp->add_option("--values", values, "comma separated values in [0, 1]")->delimiter(',');
  swp->add_option("--suite", suite, "suite name");
  swp->add_option("--out", out_flag, "output directory");
  swp->add_option("--threads", threads, "worker threads (0: all cores)");
  knobs.add_to(*swp);

  auto* ren = app.add_subcommand("render", "render a record step with trajectories");
  ren->add_option("--record", record, "record.json path")->required();
  ren->add_option("--step", step, "step to render (default: last)");
  ren->add_option("--out", out_flag, "output directory (default: next to the record)");

  auto* srv = app.add_subcommand("serve", "start the session service");
  srv->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  srv->add_option("--host", host, "bind address");
  srv->add_option("--out", out_flag, "directory for flushed session records");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }

  try {
    if (gen->parsed()) return cmd_gen(scenario, knobs, out_flag, out);
    if (run->parsed()) return cmd_run(scenario, knobs, engine, out_flag, out);
    if (abl->parsed()) return cmd_ablate(suite, knobs, threads, out_flag, out, err);
    if (swp->parsed()) return cmd_sweep(param, values, suite, knobs, threads, out_flag, out, err);
    if (ren->parsed()) return cmd_render(record, step, out_flag, out);
    if (srv->parsed()) return cmd_serve(host, port, out_flag, out);
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) err << "error: " << v << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_validation;
}

}  // namespace dragkit
