#pragma once

// Ablation and sweep reports: a JSON document plus an aligned text table.
// Wall-clock times go to a separate timings file so reports of identical runs
// are byte-identical.

#include <filesystem>
#include <string>
#include <vector>

#include "dragkit/io.hpp"
#include "dragkit/metrics.hpp"

namespace dragkit {

struct VariantSummary {
  std::string variant;
  double mean_distance = 0.0;   // over successful rows
  double fidelity_proxy = 0.0;  // over successful rows
  int runs = 0;
  int failures = 0;
};

/// One summary per variant, in first-appearance order.
std::vector<VariantSummary> summarize(const std::vector<EvalResult>& rows);

Json ablation_json(const std::vector<EvalResult>& rows, int steps);
std::string ablation_table(const std::vector<EvalResult>& rows);

Json sweep_json(SweepParameter parameter, const std::vector<SweepRow>& rows, int steps);
std::string sweep_table(SweepParameter parameter, const std::vector<SweepRow>& rows);

struct ReportPaths {
  std::filesystem::path json;
  std::filesystem::path table;
  std::filesystem::path timings;
};

ReportPaths write_ablation_report(const std::filesystem::path& dir, const std::vector<EvalResult>& rows, int steps);
ReportPaths write_sweep_report(const std::filesystem::path& dir, SweepParameter parameter,
                               const std::vector<SweepRow>& rows, int steps);

}  // namespace dragkit
