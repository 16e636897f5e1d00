#include "dragkit/scenario.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dragkit/errors.hpp"

namespace dragkit {

SupervisionConfig ConfigOverrides::apply(SupervisionConfig base) const {
  if (eta) base.eta = *eta;
  if (tau) base.tau = *tau;
  if (lambda) base.lambda = *lambda;
  if (r1) base.r1 = *r1;
  if (lr) base.lr = *lr;
  if (adam_epsilon) base.adam_epsilon = *adam_epsilon;
  if (convergence_radius) base.convergence_radius = *convergence_radius;
  if (tracker_step_size) base.tracker_step_size = *tracker_step_size;
  if (sigma_label) base.sigma_label = *sigma_label;
  if (r2) base.r2 = *r2;
  if (max_steps) base.max_steps = *max_steps;
  if (tracker_iterations) base.tracker_iterations = *tracker_iterations;
  return base;
}

MaskGrid Scenario::mask() const {
  if (!mask_rects) return MaskGrid::full(scene.height, scene.width);
  return MaskGrid::from_rects(scene.height, scene.width, *mask_rects);
}

LatentCode Scenario::initial_latent() const { return LatentCode::from_centers(scene, initial_centers); }

std::vector<std::string> Scenario::violations(const SupervisionConfig& config) const {
  std::vector<std::string> out = scene.violations();
  if (format_version != 1) out.push_back("format_version: unsupported version " + std::to_string(format_version));
  if (id.empty()) out.push_back("id: must not be empty");
  if (scene.background_noise_seed != seed) out.push_back("seed: scene noise seed does not match the scenario seed");
  if (initial_centers.size() != scene.blobs.size()) {
    out.push_back("scene.blobs: every blob needs a center");
  }
  for (const auto& v : config.violations()) out.push_back(v);

  if (points.empty()) out.push_back("points: at least one handle/target pair is required");
  const int W = scene.width, H = scene.height;
  const int margin = config.r2;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ScenarioPoint& pt = points[i];
    const std::string where = "points[" + std::to_string(i) + "]";
    if (pt.handle.x < 0 || pt.handle.y < 0 || pt.handle.x >= W || pt.handle.y >= H) {
      std::ostringstream os;
      os << where << ".handle: " << pt.handle << " is outside the " << W << "x" << H << " field";
      out.push_back(os.str());
    } else if (pt.handle.x < margin || pt.handle.y < margin || pt.handle.x > W - 1 - margin ||
               pt.handle.y > H - 1 - margin) {
      std::ostringstream os;
      os << where << ".handle: " << pt.handle << " is closer than r2=" << margin << " px to the border";
      out.push_back(os.str());
    }
    if (!std::isfinite(pt.target.x) || !std::isfinite(pt.target.y) || pt.target.x < 0 || pt.target.y < 0 ||
        pt.target.x > W - 1 || pt.target.y > H - 1) {
      std::ostringstream os;
      os << where << ".target: " << pt.target << " is outside the " << W << "x" << H << " field";
      out.push_back(os.str());
    }
    if (pt.blob && *pt.blob >= scene.blobs.size()) {
      out.push_back(where + ".blob: index " + std::to_string(*pt.blob) + " does not name a blob");
    }
  }
  if (mask_rects) {
    for (std::size_t r = 0; r < mask_rects->size(); ++r) {
      const auto& rect = (*mask_rects)[r];
      if (rect.x0 > rect.x1 || rect.y0 > rect.y1) {
        out.push_back("mask[" + std::to_string(r) + "]: x0 <= x1 and y0 <= y1 required");
      }
    }
  }
  return out;
}

void Scenario::validate(const SupervisionConfig& config) const {
  auto v = violations(config);
  if (!v.empty()) throw ValidationError(std::move(v));
}

std::optional<std::size_t> Scenario::oracle_blob(std::size_t i) const {
  const ScenarioPoint& pt = points.at(i);
  if (pt.blob) return pt.blob;
  std::optional<std::size_t> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < scene.blobs.size() && b < initial_centers.size(); ++b) {
    const double dist = distance(pt.handle.to_vec(), initial_centers[b]);
    if (dist <= 3.0 * scene.blobs[b].sigma && dist < best_distance) {
      best = b;
      best_distance = dist;
    }
  }
  return best;
}

}  // namespace dragkit
