#pragma once

// Persistence: scenario files and run records as JSON, dense arrays as .npy
// sidecars. Scenario parsing is strict: unknown keys and wrong types are
// reported with the path of the offending field.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dragkit/drag_engine.hpp"
#include "dragkit/metrics.hpp"
#include "dragkit/scenario.hpp"

namespace dragkit {

using Json = nlohmann::ordered_json;

Json to_json(const Scenario& scenario);
/// Throws ValidationError listing every structural problem. Semantic checks
/// (bounds, signatures) are left to Scenario::validate.
Scenario scenario_from_json(const Json& doc);

std::string dump_scenario(const Scenario& scenario);
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

Json to_json(const SupervisionConfig& config);
SupervisionConfig config_from_json(const Json& doc);

Json to_json(const StepRecord& step);
StepRecord step_from_json(const Json& doc);

/// Canonical record document: no wall-clock fields, so equal runs dump to
/// equal bytes.
Json to_json(const RunRecord& record);
RunRecord record_from_json(const Json& doc);
std::string dump_record(const RunRecord& record);
RunRecord load_record(const std::filesystem::path& path);

Json timings_json(const RunRecord& record);

Json to_json(const EvalResult& result);

/// Little-endian float64 C-order .npy.
std::string encode_npy(const std::vector<std::size_t>& shape, const std::vector<double>& data);
void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& data);

struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};
NpyArray decode_npy(std::string_view bytes);
NpyArray read_npy(const std::filesystem::path& path);

/// Paths written by save_run.
struct RunArtifacts {
  std::filesystem::path record;
  std::filesystem::path timings;
  std::filesystem::path initial_field;
  std::filesystem::path final_field;
  std::vector<std::filesystem::path> score_maps;
};

/// Writes record.json, timings.json and the field and final score-map sidecars
/// into `dir`. The record references sidecars by file name.
RunArtifacts save_run(const std::filesystem::path& dir, const RunRecord& record,
                      const std::vector<ScoreMap>& final_maps = {});

std::string read_file(const std::filesystem::path& path);
/// Creates parent directories and replaces the file.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace dragkit
