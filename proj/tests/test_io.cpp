#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "dragkit/errors.hpp"
#include "dragkit/io.hpp"
#include "dragkit/report.hpp"
#include "dragkit/scenario_library.hpp"

using namespace dragkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dragkit_test_io_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

bool has(const std::vector<std::string>& v, const std::string& text) {
  for (const auto& s : v) {
    if (s.find(text) != std::string::npos) return true;
  }
  return false;
}

RunRecord short_record(const std::string& name, int steps) {
  Scenario sc = make_scenario(name);
  sc.config.max_steps = steps;
  return run_scenario(sc);
}

}  // namespace

TEST_CASE("every template survives a round trip") {
  for (const auto& suite : suite_names()) {
    for (const Scenario& sc : make_suite(suite)) {
    CAPTURE(sc.id);
    CHECK(scenario_from_json(to_json(sc)) == sc);
    const std::string text = dump_scenario(sc);
    CHECK(parse_scenario(text) == sc);
    CHECK(dump_scenario(parse_scenario(text)) == text);
    }
  }
  CHECK(parse_scenario(dump_scenario(make_scenario("single_blob"))) == make_scenario("single_blob"));
}

TEST_CASE("config overrides and masks round trip") {
  Scenario sc = make_scenario("plain_0");
  sc.config.tau = 0.7;
  sc.config.r2 = 9;
  sc.config.sigma_label = 1.25;
  sc.mask_rects.reset();
  const Scenario back = parse_scenario(dump_scenario(sc));
  CHECK(back == sc);
  CHECK(back.mask().all_editable());
  CHECK(to_json(sc)["mask"] == "full");
}

TEST_CASE("strict parsing names every offending field") {
  Json doc = to_json(make_scenario("plain_0"));
  doc["extra"] = 1;
  doc["scene"]["blobs"][0]["sigma"] = "wide";
  doc["points"][0]["handle"] = {1.5, 2};
  doc["config"]["speed"] = 3;
  const auto v = violations_of(doc.dump());
  CHECK(has(v, "extra: unknown key"));
  CHECK(has(v, "scene.blobs[0].sigma"));
  CHECK(has(v, "points[0].handle"));
  CHECK(has(v, "config.speed"));
  CHECK(v.size() >= 4);
}

TEST_CASE("missing keys and malformed documents") {
  Json doc = to_json(make_scenario("plain_0"));
  doc.erase("points");
  CHECK(has(violations_of(doc.dump()), "points"));
  const auto bad = violations_of("{\"id\": ");
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].rfind("document: malformed JSON", 0) == 0);
  CHECK(has(violations_of("[1, 2]"), "document"));
}

TEST_CASE("scenario files on disk") {
  const fs::path dir = scratch_dir("scenario");
  const Scenario sc = make_scenario("drift_2");
  save_scenario(dir / "nested" / "drift_2.json", sc);
  CHECK(load_scenario(dir / "nested" / "drift_2.json") == sc);
  CHECK_THROWS_AS(load_scenario(dir / "missing.json"), Error);
  fs::remove_all(dir);
}

TEST_CASE("supervision config round trip") {
  SupervisionConfig c;
  c.eta = 3.5;
  c.sigma_label = 2.5;
  CHECK(config_from_json(to_json(c)) == c);
  c.sigma_label.reset();
  CHECK(config_from_json(to_json(c)) == c);
  CHECK(to_json(c)["sigma_label"].is_null());
}

TEST_CASE("records round trip and carry no clock readings") {
  const RunRecord r = short_record("distractor_twin_4", 6);
  const std::string text = dump_record(r);
  const RunRecord back = record_from_json(Json::parse(text));
  CHECK(back.steps == r.steps);
  CHECK(back.final_latent == r.final_latent);
  CHECK(back.status == r.status);
  CHECK(back.scenario == r.scenario);
  CHECK(back.config == r.config);
  CHECK(back.s1 == r.s1);
  CHECK(back.tracker_traces == r.tracker_traces);
  CHECK(dump_record(back) == text);
  CHECK(text.find("seconds") == std::string::npos);
  CHECK(text.find("wall") == std::string::npos);
  const Json t = timings_json(r);
  CHECK(t["tracker_seconds"].get<double>() > 0.0);
  CHECK(t["step_seconds"].size() == 6);
}

TEST_CASE("record steps are increasing and replay the trajectory") {
  const RunRecord r = short_record("plain_1", 5);
  const RunRecord back = record_from_json(to_json(r));
  for (std::size_t i = 0; i < back.steps.size(); ++i) CHECK(back.steps[i].step == int(i) + 1);
  const Json j = to_json(r.steps[0]);
  CHECK(step_from_json(j) == r.steps[0]);
  CHECK(j["gate_choice"] == "L1");
}

TEST_CASE("npy encoding") {
  const std::vector<double> data{1.0, -2.5, 3.25, 0.0, 1e-300, 7.0};
  const std::string bytes = encode_npy({2, 3}, data);
  CHECK(bytes.substr(0, 6) == std::string("\x93NUMPY", 6));
  CHECK((bytes.size() - data.size() * 8) % 64 == 0);
  CHECK(bytes.find("'descr': '<f8'") != std::string::npos);
  CHECK(bytes.find("'shape': (2, 3)") != std::string::npos);
  const NpyArray a = decode_npy(bytes);
  CHECK(a.shape == std::vector<std::size_t>{2, 3});
  CHECK(a.data == data);
  CHECK(decode_npy(encode_npy({4}, {1, 2, 3, 4})).shape == std::vector<std::size_t>{4});
  CHECK_THROWS_AS(encode_npy({2, 2}, data), ShapeError);
  CHECK_THROWS_AS(decode_npy("not an array"), Error);
  CHECK_THROWS_AS(decode_npy(bytes.substr(0, bytes.size() - 8)), Error);
}

TEST_CASE("save_run writes the record and its sidecars") {
  const fs::path dir = scratch_dir("run");
  Scenario sc = make_scenario("plain_2");
  sc.config.max_steps = 3;
  auto session = DragSession::start(sc);
  session->run();
  const ScoreMap& m = session->last_score_map(0);
  const RunArtifacts art = save_run(dir, session->record(), {m});
  for (const auto& p : {art.record, art.timings, art.initial_field, art.final_field}) CHECK(fs::exists(p));
  REQUIRE(art.score_maps.size() == 1);

  const Json doc = Json::parse(read_file(art.record));
  CHECK(doc["sidecars"]["initial_field"] == "initial_field.npy");
  CHECK(doc["sidecars"]["score_maps"][0]["x0"] == m.patch.x0);
  CHECK(dump_record(load_record(art.record)) == dump_record(session->record()));

  const NpyArray f = read_npy(art.final_field);
  CHECK(f.shape == std::vector<std::size_t>{sc.scene.channels, std::size_t(sc.scene.height), std::size_t(sc.scene.width)});
  CHECK(std::equal(f.data.begin(), f.data.end(), session->field().values().begin()));
  const NpyArray s = read_npy(art.score_maps[0]);
  CHECK(s.shape == std::vector<std::size_t>{std::size_t(m.patch.height()), std::size_t(m.patch.width())});
  CHECK(s.data == m.scores);

  // identical runs overwrite with identical bytes
  const std::string first = read_file(art.record);
  save_run(dir, run_scenario(sc), {m});
  CHECK(read_file(art.record) == first);
  fs::remove_all(dir);
}

TEST_CASE("reports are byte-identical across reruns and keep timings apart") {
  EvalResult a;
  a.scenario_id = "plain_0";
  a.variant = "full";
  a.mean_distance = 1.5;
  a.status = "converged";
  a.wall_time = 3.0;
  EvalResult b = a;
  b.variant = "no-DPT";
  b.mean_distance = 2.5;
  EvalResult c = a;
  c.scenario_id = "plain_1";
  c.status = "error";
  c.error = "boom";
  std::vector<EvalResult> rows{a, b, c};
  std::vector<EvalResult> slower = rows;
  for (auto& r : slower) r.wall_time += 10.0;

  CHECK(ablation_json(rows, 60).dump() == ablation_json(slower, 60).dump());
  CHECK(ablation_table(rows) == ablation_table(slower));
  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].variant == "full");
  CHECK(summary[0].runs == 1);
  CHECK(summary[0].failures == 1);
  CHECK(summary[0].mean_distance == 1.5);
  const std::string table = ablation_table(rows);
  CHECK(table.find("no-DPT") != std::string::npos);
  CHECK(table.find("error") != std::string::npos);

  const fs::path dir = scratch_dir("report");
  const ReportPaths p = write_ablation_report(dir, rows, 60);
  CHECK(p.json.filename() == "ablation.json");
  CHECK(read_file(p.json).find("wall_time") == std::string::npos);
  CHECK(read_file(p.timings).find("wall_time") != std::string::npos);
  const ReportPaths q = write_sweep_report(dir, SweepParameter::tau, {SweepRow{0.4, 1.0, 0.9, 0, rows}}, 60);
  CHECK(q.json.filename() == "sweep_tau.json");
  CHECK(Json::parse(read_file(q.json))["rows"][0]["value"] == 0.4);
  fs::remove_all(dir);
}
