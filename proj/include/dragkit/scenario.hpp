#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dragkit/feature_field.hpp"
#include "dragkit/geometry.hpp"
#include "dragkit/motion_supervision.hpp"

namespace dragkit {

struct ScenarioPoint {
  Cell handle;
  Vec2 target;
  std::optional<std::size_t> blob;  // blob whose center is the semantic ground truth

  friend bool operator==(const ScenarioPoint&, const ScenarioPoint&) = default;
};

/// Partial configuration carried by a scenario; unset fields keep the caller's value.
struct ConfigOverrides {
  std::optional<double> eta, tau, lambda, r1, lr, adam_epsilon, convergence_radius, tracker_step_size, sigma_label;
  std::optional<int> r2, max_steps, tracker_iterations;

  SupervisionConfig apply(SupervisionConfig base) const;
  friend bool operator==(const ConfigOverrides&, const ConfigOverrides&) = default;
};

/// Declarative input of one drag: scene, initial latent, points, mask, config overrides.
struct Scenario {
  int format_version = 1;
  std::string id;
  BlobSceneSpec scene;               // background_noise_seed mirrors `seed`
  std::vector<Vec2> initial_centers;  // pixels, one per blob
  std::uint64_t seed = 0;
  std::vector<ScenarioPoint> points;
  std::optional<std::vector<MaskGrid::Rect>> mask_rects;  // nullopt: everything editable
  ConfigOverrides config;

  MaskGrid mask() const;
  LatentCode initial_latent() const;
  SupervisionConfig effective_config(const SupervisionConfig& base) const { return config.apply(base); }

  /// Every problem with the scenario under `config`, each naming the offending field.
  std::vector<std::string> violations(const SupervisionConfig& config) const;
  void validate(const SupervisionConfig& config) const;

  /// Blob backing point `i`: the explicit one, else the nearest blob within 3σ of the handle.
  std::optional<std::size_t> oracle_blob(std::size_t i) const;

  /// Replaces the seed everywhere it is used.
  void set_seed(std::uint64_t s) {
    seed = s;
    scene.background_noise_seed = s;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

}  // namespace dragkit
