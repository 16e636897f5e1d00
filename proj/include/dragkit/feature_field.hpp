#pragma once

// Synthetic differentiable feature generators.
//
// A scene is a sum of Gaussian blobs, each with a unit-norm channel signature,
// over a frozen noise floor:
//
//   F[c](x, y) = Σ_b amplitude_b · signature_b[c] · exp(−|(x, y) − center_b|² / 2σ_b²) + noise[c](x, y)
//
// The latent code holds the blob centers in latent units; one latent unit is
// `latent_scale` pixels. Gradients of F with respect to the latent are exact.

#include <cstddef>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dragkit/geometry.hpp"
#include "dragkit/tensor.hpp"

namespace dragkit {

struct BlobSpec {
  std::vector<double> signature;  // unit L2 norm, one entry per channel
  double sigma = 2.0;             // pixels, > 0.5
  double amplitude = 1.0;         // > 0

  friend bool operator==(const BlobSpec&, const BlobSpec&) = default;
};

struct BlobSceneSpec {
  int height = 256;
  int width = 256;
  std::size_t channels = 64;
  std::vector<BlobSpec> blobs;
  std::uint64_t background_noise_seed = 0;
  double noise_amplitude = 0.01;
  double latent_scale = 100.0;  // pixels per latent unit

  /// Human-readable violations; empty when the spec is well-formed.
  std::vector<std::string> violations() const;
  /// Throws ValidationError listing every violation.
  void validate() const;
  /// True when at least two blobs carry the same signature.
  bool has_twin_signatures() const;

  friend bool operator==(const BlobSceneSpec&, const BlobSceneSpec&) = default;
};

/// Blob centers in latent units, flattened as (x_0, y_0, x_1, y_1, ...).
class LatentCode {
 public:
  LatentCode() = default;
  explicit LatentCode(std::vector<double> values) : values_(std::move(values)) {}

  static LatentCode from_centers(const BlobSceneSpec& spec, const std::vector<Vec2>& centers_px);

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t blob_count() const { return values_.size() / 2; }

  friend bool operator==(const LatentCode&, const LatentCode&) = default;

 private:
  std::vector<double> values_;
};

struct FeatureField {
  ad::Tensor tensor;  // C×H×W
  std::string scenario_id;
  std::vector<double> latent;

  std::size_t channels() const { return tensor.dim(0); }
  int height() const { return static_cast<int>(tensor.dim(1)); }
  int width() const { return static_cast<int>(tensor.dim(2)); }
};

/// Pixel center of blob `b` as rendered: latent × scale, clamped to the field.
Vec2 blob_center(const BlobSceneSpec& spec, std::span<const double> latent, std::size_t b);

/// Ground-truth semantic position of a blob under latent `w`.
Vec2 semantic_oracle(const BlobSceneSpec& spec, const LatentCode& w, std::size_t blob_index);

/// Holds the frozen noise floor of one scene so repeated generation is cheap.
class FieldGenerator {
 public:
  explicit FieldGenerator(BlobSceneSpec spec);

  const BlobSceneSpec& spec() const { return spec_; }

  /// Differentiable generation: `w` is a {2·blobs} tensor, usually a tape variable.
  ad::Tensor generate(const ad::Tensor& w) const;
  FeatureField generate(const LatentCode& w, const std::string& scenario_id = {}) const;

 private:
  BlobSceneSpec spec_;
  std::vector<double> noise_;
};

/// One-shot generation; prefer FieldGenerator when generating repeatedly.
FeatureField generate(const BlobSceneSpec& spec, const LatentCode& w);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, 3 values per pixel, each in [0, 1]

  std::array<double, 3> at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
};

/// C×3 projection matrix stored row-major (channel-major).
struct Projection {
  std::size_t channels = 0;
  std::vector<double> weights;
};

/// Deterministic pseudo-random projection that keeps distinct signatures apart.
Projection default_projection(std::size_t channels, std::uint64_t seed = 7);

/// Linear projection to RGB followed by min-max normalization over the whole
/// image. A constant field renders as uniform mid-gray.
RgbImage render_rgb(const ad::Tensor& field, const Projection& projection);

}  // namespace dragkit
