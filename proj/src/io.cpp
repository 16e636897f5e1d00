#include "dragkit/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "dragkit/errors.hpp"

namespace dragkit {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "npy sidecars assume a little-endian host");

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Walks a document, collecting every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& message) {
    errors.push_back((path.empty() ? std::string("document") : path) + ": " + message);
  }

  bool object(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (auto a : allowed) known = known || a == key;
      if (!known) fail(join(path, key), "unknown key");
    }
    return true;
  }

  const Json* field(const Json& j, const std::string& path, const char* key, bool required) {
    const auto it = j.find(key);
    if (it == j.end()) {
      if (required) fail(join(path, key), "missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const Json& j, const std::string& path, const char* key, bool required = true) {
    const Json* v = field(j, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(join(path, key), "expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<long long> integer(const Json& j, const std::string& path, const char* key, bool required = true) {
    const Json* v = field(j, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      fail(join(path, key), "expected an integer");
      return std::nullopt;
    }
    return v->get<long long>();
  }

  std::optional<std::uint64_t> unsigned_integer(const Json& j, const std::string& path, const char* key) {
    const Json* v = field(j, path, key, true);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) {
      fail(join(path, key), "expected a non-negative integer");
      return std::nullopt;
    }
    return v->get<std::uint64_t>();
  }

  std::optional<std::string> string(const Json& j, const std::string& path, const char* key) {
    const Json* v = field(j, path, key, true);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(join(path, key), "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<Vec2> pair(const Json& j, const std::string& path, const char* key, bool integral) {
    const Json* v = field(j, path, key, true);
    if (!v) return std::nullopt;
    const bool ok = v->is_array() && v->size() == 2 &&
                    ((*v)[0].is_number_integer() || (!integral && (*v)[0].is_number())) &&
                    ((*v)[1].is_number_integer() || (!integral && (*v)[1].is_number()));
    if (!ok) {
      fail(join(path, key), integral ? "expected [x, y] integers" : "expected [x, y] numbers");
      return std::nullopt;
    }
    return Vec2{(*v)[0].get<double>(), (*v)[1].get<double>()};
  }

  std::optional<std::vector<double>> numbers(const Json& j, const std::string& path, const char* key) {
    const Json* v = field(j, path, key, true);
    if (!v) return std::nullopt;
    if (!v->is_array()) {
      fail(join(path, key), "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        fail(index(join(path, key), i), "expected a number");
        return std::nullopt;
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }
};

Json overrides_json(const ConfigOverrides& o) {
  Json j = Json::object();
  auto put = [&](const char* key, const auto& value) {
    if (value) j[key] = *value;
  };
  put("eta", o.eta);
  put("tau", o.tau);
  put("lambda", o.lambda);
  put("r1", o.r1);
  put("r2", o.r2);
  put("lr", o.lr);
  put("adam_epsilon", o.adam_epsilon);
  put("max_steps", o.max_steps);
  put("convergence_radius", o.convergence_radius);
  put("tracker_iterations", o.tracker_iterations);
  put("tracker_step_size", o.tracker_step_size);
  put("sigma_label", o.sigma_label);
  return j;
}

ConfigOverrides read_overrides(Reader& r, const Json& j, const std::string& path) {
  ConfigOverrides o;
  if (!r.object(j, path,
                {"eta", "tau", "lambda", "r1", "lr", "adam_epsilon", "convergence_radius", "tracker_step_size",
                 "sigma_label", "r2", "max_steps", "tracker_iterations"})) {
    return o;
  }
  o.eta = r.number(j, path, "eta", false);
  o.tau = r.number(j, path, "tau", false);
  o.lambda = r.number(j, path, "lambda", false);
  o.r1 = r.number(j, path, "r1", false);
  o.lr = r.number(j, path, "lr", false);
  o.adam_epsilon = r.number(j, path, "adam_epsilon", false);
  o.convergence_radius = r.number(j, path, "convergence_radius", false);
  o.tracker_step_size = r.number(j, path, "tracker_step_size", false);
  o.sigma_label = r.number(j, path, "sigma_label", false);
  auto as_int = [&](const char* key) -> std::optional<int> {
    const auto v = r.integer(j, path, key, false);
    if (!v) return std::nullopt;
    if (*v < INT32_MIN || *v > INT32_MAX) {
      r.fail(join(path, key), "out of range");
      return std::nullopt;
    }
    return static_cast<int>(*v);
  };
  o.r2 = as_int("r2");
  o.max_steps = as_int("max_steps");
  o.tracker_iterations = as_int("tracker_iterations");
  return o;
}

Json cell_json(Cell c) { return Json::array({c.x, c.y}); }
Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }
Cell cell_from(const Json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
std::optional<double> optional_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

Json to_json(const Scenario& sc) {
  Json scene;
  scene["height"] = sc.scene.height;
  scene["width"] = sc.scene.width;
  scene["channels"] = sc.scene.channels;
  scene["noise_amplitude"] = sc.scene.noise_amplitude;
  scene["latent_scale"] = sc.scene.latent_scale;
  Json blobs = Json::array();
  for (std::size_t b = 0; b < sc.scene.blobs.size(); ++b) {
    const BlobSpec& spec = sc.scene.blobs[b];
    Json blob;
    blob["center"] = b < sc.initial_centers.size() ? vec_json(sc.initial_centers[b]) : Json(nullptr);
    blob["sigma"] = spec.sigma;
    blob["amplitude"] = spec.amplitude;
    blob["signature"] = spec.signature;
    blobs.push_back(std::move(blob));
  }
  scene["blobs"] = std::move(blobs);

  Json points = Json::array();
  for (const ScenarioPoint& pt : sc.points) {
    Json p;
    p["handle"] = cell_json(pt.handle);
    p["target"] = vec_json(pt.target);
    if (pt.blob) p["blob"] = *pt.blob;
    points.push_back(std::move(p));
  }

  Json doc;
  doc["format_version"] = sc.format_version;
  doc["id"] = sc.id;
  doc["seed"] = sc.seed;
  doc["scene"] = std::move(scene);
  doc["points"] = std::move(points);
  if (sc.mask_rects) {
    Json rects = Json::array();
    for (const auto& r : *sc.mask_rects) rects.push_back({{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}});
    doc["mask"] = std::move(rects);
  } else {
    doc["mask"] = "full";
  }
  doc["config"] = overrides_json(sc.config);
  return doc;
}

Scenario scenario_from_json(const Json& doc) {
  Reader r;
  Scenario sc;
  if (!r.object(doc, "", {"format_version", "id", "seed", "scene", "points", "mask", "config"})) {
    throw ValidationError(r.errors);
  }
  if (auto v = r.integer(doc, "", "format_version")) sc.format_version = static_cast<int>(*v);
  if (auto v = r.string(doc, "", "id")) sc.id = *v;
  if (auto v = r.unsigned_integer(doc, "", "seed")) sc.set_seed(*v);

  if (const Json* scene = r.field(doc, "", "scene", true)) {
    const std::string path = "scene";
    if (r.object(*scene, path, {"height", "width", "channels", "noise_amplitude", "latent_scale", "blobs"})) {
      if (auto v = r.integer(*scene, path, "height")) sc.scene.height = static_cast<int>(*v);
      if (auto v = r.integer(*scene, path, "width")) sc.scene.width = static_cast<int>(*v);
      if (auto v = r.integer(*scene, path, "channels")) {
        if (*v < 1) r.fail("scene.channels", "must be >= 1");
        else sc.scene.channels = static_cast<std::size_t>(*v);
      }
      if (auto v = r.number(*scene, path, "noise_amplitude", false)) sc.scene.noise_amplitude = *v;
      if (auto v = r.number(*scene, path, "latent_scale", false)) sc.scene.latent_scale = *v;
      if (const Json* blobs = r.field(*scene, path, "blobs", true)) {
        if (!blobs->is_array()) {
          r.fail("scene.blobs", "expected an array");
        } else {
          for (std::size_t b = 0; b < blobs->size(); ++b) {
            const std::string bp = index("scene.blobs", b);
            const Json& bj = (*blobs)[b];
            if (!r.object(bj, bp, {"center", "sigma", "amplitude", "signature"})) continue;
            BlobSpec spec;
            const auto center = r.pair(bj, bp, "center", false);
            if (auto v = r.number(bj, bp, "sigma")) spec.sigma = *v;
            if (auto v = r.number(bj, bp, "amplitude")) spec.amplitude = *v;
            if (auto v = r.numbers(bj, bp, "signature")) spec.signature = *v;
            sc.scene.blobs.push_back(std::move(spec));
            sc.initial_centers.push_back(center.value_or(Vec2{}));
          }
        }
      }
    }
  }

  if (const Json* points = r.field(doc, "", "points", true)) {
    if (!points->is_array()) {
      r.fail("points", "expected an array");
    } else {
      for (std::size_t i = 0; i < points->size(); ++i) {
        const std::string pp = index("points", i);
        const Json& pj = (*points)[i];
        if (!r.object(pj, pp, {"handle", "target", "blob"})) continue;
        ScenarioPoint pt;
        if (auto h = r.pair(pj, pp, "handle", true)) pt.handle = round_to_cell(*h);
        if (auto t = r.pair(pj, pp, "target", false)) pt.target = *t;
        if (pj.contains("blob")) {
          if (!pj["blob"].is_number_unsigned()) r.fail(pp + ".blob", "expected a non-negative integer");
          else pt.blob = pj["blob"].get<std::size_t>();
        }
        sc.points.push_back(pt);
      }
    }
  }

  if (const Json* mask = r.field(doc, "", "mask", true)) {
    if (mask->is_string()) {
      if (mask->get<std::string>() != "full") r.fail("mask", "expected \"full\" or a list of rectangles");
    } else if (mask->is_array()) {
      std::vector<MaskGrid::Rect> rects;
      for (std::size_t i = 0; i < mask->size(); ++i) {
        const std::string mp = index("mask", i);
        const Json& mj = (*mask)[i];
        if (!r.object(mj, mp, {"x0", "y0", "x1", "y1"})) continue;
        MaskGrid::Rect rect;
        if (auto v = r.integer(mj, mp, "x0")) rect.x0 = static_cast<int>(*v);
        if (auto v = r.integer(mj, mp, "y0")) rect.y0 = static_cast<int>(*v);
        if (auto v = r.integer(mj, mp, "x1")) rect.x1 = static_cast<int>(*v);
        if (auto v = r.integer(mj, mp, "y1")) rect.y1 = static_cast<int>(*v);
        rects.push_back(rect);
      }
      sc.mask_rects = std::move(rects);
    } else {
      r.fail("mask", "expected \"full\" or a list of rectangles");
    }
  }

  if (const Json* config = r.field(doc, "", "config", false)) sc.config = read_overrides(r, *config, "config");

  if (!r.errors.empty()) throw ValidationError(r.errors);
  return sc;
}

std::string dump_scenario(const Scenario& scenario) { return to_json(scenario).dump(2) + "\n"; }

Scenario parse_scenario(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError({std::string("document: malformed JSON: ") + e.what()});
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const fs::path& path) { return parse_scenario(read_file(path)); }

void save_scenario(const fs::path& path, const Scenario& scenario) { write_file(path, dump_scenario(scenario)); }

Json to_json(const SupervisionConfig& c) {
  Json j;
  j["eta"] = c.eta;
  j["tau"] = c.tau;
  j["lambda"] = c.lambda;
  j["r1"] = c.r1;
  j["r2"] = c.r2;
  j["lr"] = c.lr;
  j["adam_epsilon"] = c.adam_epsilon;
  j["max_steps"] = c.max_steps;
  j["convergence_radius"] = c.convergence_radius;
  j["tracker_iterations"] = c.tracker_iterations;
  j["tracker_step_size"] = c.tracker_step_size;
  j["sigma_label"] = optional_number(c.sigma_label);
  return j;
}

SupervisionConfig config_from_json(const Json& j) {
  SupervisionConfig c;
  c.eta = j.at("eta").get<double>();
  c.tau = j.at("tau").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.r1 = j.at("r1").get<double>();
  c.r2 = j.at("r2").get<int>();
  c.lr = j.at("lr").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.max_steps = j.at("max_steps").get<int>();
  c.convergence_radius = j.at("convergence_radius").get<double>();
  c.tracker_iterations = j.at("tracker_iterations").get<int>();
  c.tracker_step_size = j.at("tracker_step_size").get<double>();
  c.sigma_label = optional_from(j.at("sigma_label"));
  return c;
}

Json to_json(const StepRecord& step) {
  Json j;
  j["step"] = step.step;
  j["gate_choice"] = step.gate_choice;
  j["loss"] = step.loss;
  j["point_term"] = step.point_term;
  j["mask_term"] = step.mask_term;
  Json points = Json::array();
  for (const auto& p : step.points) {
    points.push_back({{"p", cell_json(p.p)},
                      {"s", p.s},
                      {"gate", std::string(to_string(p.gate))},
                      {"supervised", p.supervised},
                      {"converged", p.converged}});
  }
  j["points"] = std::move(points);
  j["latent"] = step.latent;
  return j;
}

StepRecord step_from_json(const Json& j) {
  StepRecord s;
  s.step = j.at("step").get<int>();
  s.gate_choice = j.at("gate_choice").get<std::string>();
  s.loss = j.at("loss").get<double>();
  s.point_term = j.at("point_term").get<double>();
  s.mask_term = j.at("mask_term").get<double>();
  for (const auto& pj : j.at("points")) {
    PointStepRecord p;
    p.p = cell_from(pj.at("p"));
    p.s = pj.at("s").get<double>();
    p.gate = gate_from_string(pj.at("gate").get<std::string>());
    p.supervised = pj.at("supervised").get<bool>();
    p.converged = pj.at("converged").get<bool>();
    s.points.push_back(p);
  }
  s.latent = j.at("latent").get<std::vector<double>>();
  return s;
}

Json to_json(const RunRecord& rec) {
  Json j;
  j["format_version"] = 1;
  j["engine"] = std::string(to_string(rec.engine));
  j["status"] = std::string(to_string(rec.status));
  j["failure"] = rec.failure;
  j["scenario"] = to_json(rec.scenario);
  j["config"] = to_json(rec.config);
  Json tracker = Json::array();
  for (std::size_t i = 0; i < rec.tracker_traces.size(); ++i) {
    Json t;
    t["s1"] = i < rec.s1.size() ? optional_number(rec.s1[i]) : Json(nullptr);
    t["trace"] = rec.tracker_traces[i];
    Json snaps = Json::array();
    if (i < rec.tracker_snapshots.size()) {
      for (const auto& snap : rec.tracker_snapshots[i]) snaps.push_back({{"iteration", snap.iteration}, {"scores", snap.scores}});
    }
    t["snapshots"] = std::move(snaps);
    tracker.push_back(std::move(t));
  }
  j["tracker"] = std::move(tracker);
  Json steps = Json::array();
  for (const auto& s : rec.steps) steps.push_back(to_json(s));
  j["steps"] = std::move(steps);
  j["final_latent"] = rec.final_latent;
  return j;
}

RunRecord record_from_json(const Json& j) {
  try {
    RunRecord rec;
    if (j.at("format_version").get<int>() != 1) throw Error("record: unsupported format_version");
    rec.engine = engine_from_string(j.at("engine").get<std::string>());
    rec.status = status_from_string(j.at("status").get<std::string>());
    rec.failure = j.at("failure").get<std::string>();
    rec.scenario = scenario_from_json(j.at("scenario"));
    rec.config = config_from_json(j.at("config"));
    for (const auto& t : j.at("tracker")) {
      rec.s1.push_back(optional_from(t.at("s1")));
      rec.tracker_traces.push_back(t.at("trace").get<std::vector<double>>());
      std::vector<ScoreSnapshot> snaps;
      for (const auto& sj : t.at("snapshots")) {
        snaps.push_back({sj.at("iteration").get<int>(), sj.at("scores").get<std::vector<double>>()});
      }
      rec.tracker_snapshots.push_back(std::move(snaps));
    }
    for (const auto& s : j.at("steps")) rec.steps.push_back(step_from_json(s));
    rec.final_latent = j.at("final_latent").get<std::vector<double>>();
    return rec;
  } catch (const Json::exception& e) {
    throw Error(std::string("record: ") + e.what());
  }
}

std::string dump_record(const RunRecord& record) { return to_json(record).dump(2) + "\n"; }

RunRecord load_record(const fs::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(path.string() + ": malformed JSON: " + e.what());
  }
  return record_from_json(doc);
}

Json timings_json(const RunRecord& record) {
  Json j;
  j["tracker_seconds"] = record.timings.tracker_seconds;
  j["drag_seconds"] = record.timings.drag_seconds;
  Json steps = Json::array();
  for (const auto& s : record.steps) steps.push_back(s.wall_seconds);
  j["step_seconds"] = std::move(steps);
  return j;
}

Json to_json(const EvalResult& r) {
  Json j;
  j["scenario_id"] = r.scenario_id;
  j["variant"] = r.variant;
  j["lambda"] = r.lambda;
  j["tau"] = r.tau;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["mean_distance"] = r.mean_distance;
  j["fidelity_proxy"] = r.fidelity_proxy;
  j["fidelity_flagged"] = r.fidelity_flagged;
  j["steps_used"] = r.steps_used;
  j["wall_time"] = r.wall_time;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

std::string encode_npy(const std::vector<std::size_t>& shape, const std::vector<double>& data) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  if (count != data.size()) throw ShapeError("encode_npy: shape does not match data size");
  std::ostringstream dict;
  dict << "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) dict << (i > 0 ? ", " : "") << shape[i];
  if (shape.size() == 1) dict << ',';
  dict << "), }";
  std::string header = dict.str();
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::string out("\x93NUMPY\x01\x00", 8);
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>(header.size() >> 8));
  out += header;
  const std::size_t offset = out.size();
  out.resize(offset + data.size() * sizeof(double));
  std::memcpy(out.data() + offset, data.data(), data.size() * sizeof(double));
  return out;
}

void write_npy(const fs::path& path, const std::vector<std::size_t>& shape, const std::vector<double>& data) {
  write_file(path, encode_npy(shape, data));
}

NpyArray decode_npy(std::string_view bytes) {
  if (bytes.size() < 10 || bytes.substr(0, 6) != std::string_view("\x93NUMPY", 6)) throw Error("npy: bad magic");
  if (bytes[6] != 1) throw Error("npy: only format version 1 is supported");
  const std::size_t header_len =
      static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < 10 + header_len) throw Error("npy: truncated header");
  const std::string header(bytes.substr(10, header_len));
  if (header.find("'descr': '<f8'") == std::string::npos) throw Error("npy: only <f8 arrays are supported");
  if (header.find("'fortran_order': False") == std::string::npos) throw Error("npy: fortran order not supported");
  const auto open = header.find('(', header.find("'shape'"));
  const auto close = header.find(')', open);
  if (open == std::string::npos || close == std::string::npos) throw Error("npy: missing shape");
  NpyArray arr;
  std::stringstream dims(header.substr(open + 1, close - open - 1));
  std::string part;
  std::size_t count = 1;
  while (std::getline(dims, part, ',')) {
    if (part.find_first_not_of(' ') == std::string::npos) continue;
    arr.shape.push_back(std::stoul(part));
    count *= arr.shape.back();
  }
  const std::size_t offset = 10 + header_len;
  if (bytes.size() != offset + count * sizeof(double)) throw Error("npy: payload size does not match the shape");
  arr.data.resize(count);
  std::memcpy(arr.data.data(), bytes.data() + offset, count * sizeof(double));
  return arr;
}

NpyArray read_npy(const fs::path& path) { return decode_npy(read_file(path)); }

RunArtifacts save_run(const fs::path& dir, const RunRecord& record, const std::vector<ScoreMap>& final_maps) {
  RunArtifacts out;
  out.record = dir / "record.json";
  out.timings = dir / "timings.json";
  out.initial_field = dir / "initial_field.npy";
  out.final_field = dir / "final_field.npy";

  const FieldGenerator gen(record.scenario.scene);
  const ad::Tensor f0 = gen.generate(record.scenario.initial_latent()).tensor;
  const ad::Tensor f = gen.generate(LatentCode(record.final_latent)).tensor;
  auto vec = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
  write_npy(out.initial_field, f0.shape(), vec(f0.values()));
  write_npy(out.final_field, f.shape(), vec(f.values()));

  Json doc = to_json(record);
  Json sidecars;
  sidecars["initial_field"] = out.initial_field.filename().string();
  sidecars["final_field"] = out.final_field.filename().string();
  Json maps = Json::array();
  for (std::size_t i = 0; i < final_maps.size(); ++i) {
    const ScoreMap& m = final_maps[i];
    const fs::path path = dir / ("score_map_" + std::to_string(i) + ".npy");
    write_npy(path, {static_cast<std::size_t>(m.patch.height()), static_cast<std::size_t>(m.patch.width())}, m.scores);
    maps.push_back({{"path", path.filename().string()}, {"x0", m.patch.x0}, {"y0", m.patch.y0}});
    out.score_maps.push_back(path);
  }
  sidecars["score_maps"] = std::move(maps);
  doc["sidecars"] = std::move(sidecars);
  write_file(out.record, doc.dump(2) + "\n");
  write_file(out.timings, timings_json(record).dump(2) + "\n");
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace dragkit
