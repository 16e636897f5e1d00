#include "dragkit/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace dragkit {

namespace {

Json row_json(const EvalResult& r) {
  Json j = to_json(r);
  j.erase("wall_time");
  return j;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Columns padded to their widest cell; numeric columns right-aligned.
std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body,
                   const std::vector<bool>& numeric) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : body) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& row) {
    std::string text;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c > 0) text += "  ";
      text += numeric[c] ? pad + row[c] : row[c] + pad;
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : body) line(row);
  return out.str();
}

ReportPaths write_report(const std::filesystem::path& dir, const std::string& stem, const Json& doc,
                         const std::string& table, const std::vector<EvalResult>& rows) {
  ReportPaths paths{dir / (stem + ".json"), dir / (stem + ".txt"), dir / (stem + "_timings.json")};
  write_file(paths.json, doc.dump(2) + "\n");
  write_file(paths.table, table);
  Json timings = Json::array();
  for (const auto& r : rows) {
    timings.push_back({{"scenario_id", r.scenario_id}, {"variant", r.variant}, {"wall_time", r.wall_time}});
  }
  write_file(paths.timings, timings.dump(2) + "\n");
  return paths;
}

}  // namespace

std::vector<VariantSummary> summarize(const std::vector<EvalResult>& rows) {
  std::vector<VariantSummary> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const VariantSummary& s) { return s.variant == r.variant; });
    if (it == out.end()) {
      out.push_back({r.variant});
      it = out.end() - 1;
    }
    if (r.status == "error") {
      ++it->failures;
      continue;
    }
    it->mean_distance += r.mean_distance;
    it->fidelity_proxy += r.fidelity_proxy;
    ++it->runs;
  }
  for (auto& s : out) {
    if (s.runs > 0) {
      s.mean_distance /= s.runs;
      s.fidelity_proxy /= s.runs;
    }
  }
  return out;
}

Json ablation_json(const std::vector<EvalResult>& rows, int steps) {
  Json j;
  j["kind"] = "ablation";
  j["steps"] = steps;
  Json variants = Json::array();
  for (const auto& v : ablation_variants()) variants.push_back({{"label", v.label}, {"lambda", v.lambda}, {"tau", v.tau}});
  j["variants"] = std::move(variants);
  Json summary = Json::array();
  for (const auto& s : summarize(rows)) {
    summary.push_back({{"variant", s.variant},
                       {"mean_distance", s.mean_distance},
                       {"fidelity_proxy", s.fidelity_proxy},
                       {"runs", s.runs},
                       {"failures", s.failures}});
  }
  j["summary"] = std::move(summary);
  Json body = Json::array();
  for (const auto& r : rows) body.push_back(row_json(r));
  j["rows"] = std::move(body);
  return j;
}

std::string ablation_table(const std::vector<EvalResult>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({r.scenario_id, r.variant, fixed(r.lambda, 2), fixed(r.tau, 2), fixed(r.mean_distance, 3),
                    fixed(r.fidelity_proxy, 6), std::to_string(r.steps_used), r.status});
  }
  std::string out = render({"scenario", "variant", "lambda", "tau", "MD", "fidelity", "steps", "status"}, body,
                           {false, false, true, true, true, true, true, false});
  std::vector<std::vector<std::string>> summary;
  for (const auto& s : summarize(rows)) {
    summary.push_back({s.variant, fixed(s.mean_distance, 3), fixed(s.fidelity_proxy, 6), std::to_string(s.runs),
                       std::to_string(s.failures)});
  }
  out += "\n" + render({"variant", "mean MD", "mean fidelity", "runs", "errors"}, summary,
                       {false, true, true, true, true});
  return out;
}

Json sweep_json(SweepParameter parameter, const std::vector<SweepRow>& rows, int steps) {
  const std::string name = parameter == SweepParameter::tau ? "tau" : "lambda";
  Json j;
  j["kind"] = "sweep";
  j["parameter"] = name;
  j["fixed"] = parameter == SweepParameter::tau ? Json{{"lambda", 0.0}} : Json{{"tau", 0.0}};
  j["steps"] = steps;
  Json body = Json::array();
  for (const auto& row : rows) {
    Json r;
    r["value"] = row.value;
    r["mean_distance"] = row.mean_distance;
    r["fidelity_proxy"] = row.fidelity_proxy;
    r["failures"] = row.failures;
    Json runs = Json::array();
    for (const auto& e : row.rows) runs.push_back(row_json(e));
    r["runs"] = std::move(runs);
    body.push_back(std::move(r));
  }
  j["rows"] = std::move(body);
  return j;
}

std::string sweep_table(SweepParameter parameter, const std::vector<SweepRow>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    body.push_back({fixed(row.value, 2), fixed(row.mean_distance, 3), fixed(row.fidelity_proxy, 6),
                    std::to_string(row.rows.size() - row.failures), std::to_string(row.failures)});
  }
  return render({parameter == SweepParameter::tau ? "tau" : "lambda", "mean MD", "mean fidelity", "runs", "errors"},
                body, {true, true, true, true, true});
}

ReportPaths write_ablation_report(const std::filesystem::path& dir, const std::vector<EvalResult>& rows, int steps) {
  return write_report(dir, "ablation", ablation_json(rows, steps), ablation_table(rows), rows);
}

ReportPaths write_sweep_report(const std::filesystem::path& dir, SweepParameter parameter,
                               const std::vector<SweepRow>& rows, int steps) {
  std::vector<EvalResult> all;
  for (const auto& row : rows) all.insert(all.end(), row.rows.begin(), row.rows.end());
  const std::string stem = parameter == SweepParameter::tau ? "sweep_tau" : "sweep_lambda";
  return write_report(dir, stem, sweep_json(parameter, rows, steps), sweep_table(parameter, rows), all);
}

}  // namespace dragkit
