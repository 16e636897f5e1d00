#include "dragkit/point_tracker.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "dragkit/errors.hpp"

namespace dragkit {

SearchPatch make_search_patch(Cell center, int radius, int field_height, int field_width) {
  SearchPatch patch;
  patch.center = center;
  patch.radius = radius;
  patch.x0 = std::max(0, center.x - radius + 1);
  patch.x1 = std::min(field_width - 1, center.x + radius - 1);
  patch.y0 = std::max(0, center.y - radius + 1);
  patch.y1 = std::min(field_height - 1, center.y + radius - 1);
  if (radius < 1 || patch.x0 > patch.x1 || patch.y0 > patch.y1) {
    std::ostringstream os;
    os << "search window of radius " << radius << " at " << center << " is empty inside " << field_width << "x"
       << field_height << " field";
    throw BoundsError(os.str());
  }
  return patch;
}

TrackLabel gaussian_label(const SearchPatch& patch, double sigma_label) {
  if (!(sigma_label > 0.0)) throw Error("gaussian_label: sigma_label must be positive");
  std::vector<double> y(patch.size());
  const double inv2s2 = 1.0 / (2.0 * sigma_label * sigma_label);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Cell q = patch.cell_at(i);
    const double dx = q.x - patch.center.x, dy = q.y - patch.center.y;
    y[i] = std::exp(-(dx * dx + dy * dy) * inv2s2);
  }
  return {patch, ad::Tensor::constant({static_cast<std::size_t>(patch.height()), static_cast<std::size_t>(patch.width())},
                                      std::move(y))};
}

ad::Tensor extract_patch(const ad::Tensor& field, const SearchPatch& patch) {
  if (field.rank() != 3) throw ShapeError("extract_patch: expected C×H×W field");
  const std::size_t C = field.dim(0), H = field.dim(1), W = field.dim(2);
  if (patch.x0 < 0 || patch.y0 < 0 || static_cast<std::size_t>(patch.x1) >= W || static_cast<std::size_t>(patch.y1) >= H) {
    throw BoundsError("extract_patch: window exceeds the field");
  }
  const std::size_t h = patch.height(), w = patch.width();
  const auto fv = field.values();
  std::vector<double> out(C * h * w);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* src = fv.data() + c * H * W + (patch.y0 + y) * W + patch.x0;
      std::copy(src, src + w, out.begin() + static_cast<std::ptrdiff_t>((c * h + y) * w));
    }
  }
  return ad::Tensor::constant({C, h, w}, std::move(out));
}

std::vector<double> feature_at(const ad::Tensor& field, Cell cell) {
  if (field.rank() != 3) throw ShapeError("feature_at: expected C×H×W field");
  const std::size_t C = field.dim(0), H = field.dim(1), W = field.dim(2);
  if (cell.x < 0 || cell.y < 0 || static_cast<std::size_t>(cell.x) >= W || static_cast<std::size_t>(cell.y) >= H) {
    std::ostringstream os;
    os << "feature_at: cell " << cell << " outside the field";
    throw BoundsError(os.str());
  }
  std::vector<double> f(C);
  const auto fv = field.values();
  for (std::size_t c = 0; c < C; ++c) f[c] = fv[c * H * W + static_cast<std::size_t>(cell.y) * W + cell.x];
  return f;
}

ad::Tensor apply_tracker(const ad::Tensor& field_patch, const ad::Tensor& z) { return ad::channel_dot(field_patch, z); }

ad::Tensor tracker_loss(const ad::Tensor& field_patch, const ad::Tensor& label, const ad::Tensor& z) {
  return ad::sum(ad::square(ad::sub(apply_tracker(field_patch, z), label)));
}

TrackerModel train_tracker(const ad::Tensor& initial_field, Cell p0, const TrackerTrainingConfig& config) {
  if (config.iterations < 1) throw Error("train_tracker: iterations must be >= 1");
  if (!(config.step_size > 0.0)) throw Error("train_tracker: step_size must be positive");
  const auto start = std::chrono::steady_clock::now();

  TrackerModel model;
  model.patch = make_search_patch(p0, config.radius, static_cast<int>(initial_field.dim(1)),
                                  static_cast<int>(initial_field.dim(2)));
  const ad::Tensor patch = extract_patch(initial_field, model.patch);
  const ad::Tensor label = gaussian_label(model.patch, config.sigma_label).values;
  std::vector<double> z = feature_at(initial_field, p0);
  const std::size_t C = z.size();

  const int divergence_check_from = std::max(1, config.iterations / 10);
  auto snapshot = [&](int iteration, const ad::Tensor& scores) {
    model.snapshots.push_back({iteration, std::vector<double>(scores.values().begin(), scores.values().end())});
  };

  for (int it = 0; it <= config.iterations; ++it) {
    ad::Tape tape;
    const ad::Tensor zv = tape.variable({C}, z);
    ad::Tensor scores, loss;
    try {
      scores = apply_tracker(patch, zv);
      loss = ad::sum(ad::square(ad::sub(scores, label)));
    } catch (const NumericError&) {
      std::ostringstream os;
      os << "tracker training overflowed at iteration " << it << "; try a smaller step_size than "
         << config.step_size;
      throw TrainingDivergedError(os.str());
    }
    const double value = loss.item();
    model.train_trace.push_back(value);

    if (config.snapshot_every > 0 && (it % config.snapshot_every == 0 || it == config.iterations)) snapshot(it, scores);
    if (it >= divergence_check_from && value > 10.0 * model.train_trace.front()) {
      std::ostringstream os;
      os << "tracker training diverged at iteration " << it << " (loss " << value << " vs initial "
         << model.train_trace.front() << "); try a smaller step_size than " << config.step_size;
      throw TrainingDivergedError(os.str());
    }
    if (it == config.iterations) break;

    tape.backward(loss);
    const auto g = zv.grad();
    for (std::size_t c = 0; c < C; ++c) z[c] -= config.step_size * g[c];
  }

  model.z = ad::Tensor::constant({C}, std::move(z));
  model.trained = true;
  model.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

double ScoreMap::at(Cell field_cell) const {
  if (!patch.contains(field_cell)) throw BoundsError("ScoreMap::at: cell outside the window");
  return scores[static_cast<std::size_t>(field_cell.y - patch.y0) * patch.width() + (field_cell.x - patch.x0)];
}

namespace {

// Mean absolute per-channel difference to the template at every window cell.
std::vector<double> mean_abs_difference(const ad::Tensor& field, const SearchPatch& patch, std::span<const double> templ) {
  const std::size_t C = field.dim(0), H = field.dim(1), W = field.dim(2);
  if (templ.size() != C) throw ShapeError("template length does not match the field's channels");
  const auto fv = field.values();
  const int w = patch.width();
  std::vector<double> diff(patch.size(), 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double t = templ[c];
    for (int y = patch.y0; y <= patch.y1; ++y) {
      const double* row = fv.data() + c * H * W + static_cast<std::size_t>(y) * W;
      double* out = diff.data() + static_cast<std::size_t>(y - patch.y0) * w;
      for (int x = patch.x0; x <= patch.x1; ++x) out[x - patch.x0] += std::abs(row[x] - t);
    }
  }
  for (double& d : diff) d /= static_cast<double>(C);
  return diff;
}

}  // namespace

ScoreMap score_map(const ad::Tensor& field, Cell p, int radius, std::span<const double> templ, std::span<const double> z,
                   double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("score_map: lambda must lie in [0, 1]");
  if (field.rank() != 3) throw ShapeError("score_map: expected C×H×W field");
  const std::size_t C = field.dim(0), H = field.dim(1), W = field.dim(2);
  if (z.size() != C) throw ShapeError("score_map: filter length does not match the field's channels");

  ScoreMap map;
  map.patch = make_search_patch(p, radius, static_cast<int>(H), static_cast<int>(W));
  const std::vector<double> diff = mean_abs_difference(field, map.patch, templ);

  std::vector<double> response(map.patch.size(), 0.0);
  const auto fv = field.values();
  const int w = map.patch.width();
  for (std::size_t c = 0; c < C; ++c) {
    const double zc = z[c];
    for (int y = map.patch.y0; y <= map.patch.y1; ++y) {
      const double* row = fv.data() + c * H * W + static_cast<std::size_t>(y) * W;
      double* out = response.data() + static_cast<std::size_t>(y - map.patch.y0) * w;
      for (int x = map.patch.x0; x <= map.patch.x1; ++x) out[x - map.patch.x0] += zc * row[x];
    }
  }

  map.scores.resize(map.patch.size());
  for (std::size_t i = 0; i < map.scores.size(); ++i) {
    map.scores[i] = lambda * std::exp(-diff[i]) + (1.0 - lambda) * response[i];
  }
  return map;
}

ScoreMap feature_difference_map(const ad::Tensor& field, Cell p, int radius, std::span<const double> templ) {
  if (field.rank() != 3) throw ShapeError("feature_difference_map: expected C×H×W field");
  ScoreMap map;
  map.patch = make_search_patch(p, radius, static_cast<int>(field.dim(1)), static_cast<int>(field.dim(2)));
  map.scores = mean_abs_difference(field, map.patch, templ);
  for (double& d : map.scores) d = std::exp(-d);
  return map;
}

TrackResult track_update(const ScoreMap& map) {
  if (map.scores.empty() || map.scores.size() != map.patch.size()) throw ShapeError("track_update: empty score grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.scores.size(); ++i) {
    if (map.scores[i] > map.scores[best]) best = i;
  }
  return {map.patch.cell_at(best), map.scores[best]};
}

}  // namespace dragkit
