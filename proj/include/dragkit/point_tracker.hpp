#pragma once

// Discriminative point tracking.
//
// Each handle point owns a C-vector filter z (a 1×1 convolution) regressed once
// on the initial field against a Gaussian label, so the filter responds at the
// handle point and stays quiet on the surrounding background. At every drag
// step the filter response is fused with the feature-difference similarity to
// the template f and the argmax inside the local search window becomes the new
// handle position.

#include <cstddef>
#include <vector>

#include "dragkit/geometry.hpp"
#include "dragkit/tensor.hpp"

namespace dragkit {

/// Square window {q : |q.x − center.x| < radius, |q.y − center.y| < radius} clipped to the field.
struct SearchPatch {
  Cell center;
  int radius = 0;
  int x0 = 0, y0 = 0;  // inclusive bounds in field coordinates
  int x1 = -1, y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::size_t size() const { return static_cast<std::size_t>(width()) * height(); }
  bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
  Cell cell_at(std::size_t local_index) const {
    return {x0 + static_cast<int>(local_index % width()), y0 + static_cast<int>(local_index / width())};
  }
};

/// Throws BoundsError when the clipped window is empty.
SearchPatch make_search_patch(Cell center, int radius, int field_height, int field_width);

/// Patch-shaped Gaussian label peaking at 1 on the patch center.
struct TrackLabel {
  SearchPatch patch;
  ad::Tensor values;  // height × width
};

TrackLabel gaussian_label(const SearchPatch& patch, double sigma_label);

/// C×h×w sub-grid of a C×H×W field (constant, no gradient history).
ad::Tensor extract_patch(const ad::Tensor& field, const SearchPatch& patch);

/// Feature vector of a field at one cell.
std::vector<double> feature_at(const ad::Tensor& field, Cell cell);

struct ScoreSnapshot {
  int iteration = 0;
  std::vector<double> scores;  // patch-shaped, row-major
};

struct TrackerModel {
  ad::Tensor z;  // {C}
  bool trained = false;
  std::vector<double> train_trace;  // L_track per iteration, before each update
  std::vector<ScoreSnapshot> snapshots;
  SearchPatch patch;  // window the filter was trained on
  double train_seconds = 0.0;
};

/// Filter response z·F(q) at every patch position; differentiable in both inputs.
ad::Tensor apply_tracker(const ad::Tensor& field_patch, const ad::Tensor& z);

struct TrackerTrainingConfig {
  int radius = 12;             // r2
  double sigma_label = 2.0;    // px
  int iterations = 1000;
  double step_size = 0.01;
  int snapshot_every = 100;    // 0 disables snapshots
};

/// L_track = ‖z·F0(patch) − y‖² for the given filter.
ad::Tensor tracker_loss(const ad::Tensor& field_patch, const ad::Tensor& label, const ad::Tensor& z);

/// Plain gradient descent on L_track, starting from z = F0(p0). Only z receives
/// gradients. Raises TrainingDivergedError when the loss exceeds 10× its initial
/// value once 10% of the iterations have run.
TrackerModel train_tracker(const ad::Tensor& initial_field, Cell p0, const TrackerTrainingConfig& config);

/// Fused score map over a window and the window itself.
struct ScoreMap {
  SearchPatch patch;
  std::vector<double> scores;  // patch-shaped, row-major

  double at(Cell field_cell) const;
};

/// S(q) = λ·exp(−‖F(q) − f‖₁ / C) + (1 − λ)·z·F(q) over the window of radius r2 at p.
ScoreMap score_map(const ad::Tensor& field, Cell p, int radius, std::span<const double> templ,
                   std::span<const double> z, double lambda);

/// exp(−‖F(q) − f‖₁ / C) alone: the plain feature-difference similarity.
ScoreMap feature_difference_map(const ad::Tensor& field, Cell p, int radius, std::span<const double> templ);

struct TrackResult {
  Cell p;
  double s = 0.0;
};

/// Argmax of the score map in field coordinates; ties go to the first row-major cell.
TrackResult track_update(const ScoreMap& map);

}  // namespace dragkit
