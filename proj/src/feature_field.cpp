#include "dragkit/feature_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dragkit/errors.hpp"

namespace dragkit {

namespace {

// Blob contributions are evaluated inside a box of this many sigmas; beyond it
// the Gaussian is below e^-32 of the peak.
constexpr double kSupportSigmas = 8.0;

struct ClampedCenter {
  Vec2 px;
  bool clamped_x = false;
  bool clamped_y = false;
};

ClampedCenter clamped_center(const BlobSceneSpec& spec, std::span<const double> latent, std::size_t b) {
  const double raw_x = latent[2 * b] * spec.latent_scale;
  const double raw_y = latent[2 * b + 1] * spec.latent_scale;
  const double max_x = spec.width - 1.0, max_y = spec.height - 1.0;
  ClampedCenter out;
  out.px = {std::clamp(raw_x, 0.0, max_x), std::clamp(raw_y, 0.0, max_y)};
  out.clamped_x = raw_x < 0.0 || raw_x > max_x;
  out.clamped_y = raw_y < 0.0 || raw_y > max_y;
  return out;
}

struct Box {
  int x0, x1, y0, y1;  // inclusive
};

Box support_box(const BlobSceneSpec& spec, Vec2 c, double sigma) {
  const double r = kSupportSigmas * sigma;
  return {std::max(0, static_cast<int>(std::floor(c.x - r))), std::min(spec.width - 1, static_cast<int>(std::ceil(c.x + r))),
          std::max(0, static_cast<int>(std::floor(c.y - r))), std::min(spec.height - 1, static_cast<int>(std::ceil(c.y + r)))};
}

}  // namespace

std::vector<std::string> BlobSceneSpec::violations() const {
  std::vector<std::string> out;
  if (height <= 0 || width <= 0) out.push_back("scene: height and width must be positive");
  if (channels == 0) out.push_back("scene: channels must be positive");
  if (!(noise_amplitude >= 0.0) || !std::isfinite(noise_amplitude)) out.push_back("scene: noise_amplitude must be >= 0");
  if (!(latent_scale > 0.0) || !std::isfinite(latent_scale)) out.push_back("scene: latent_scale must be > 0");
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    const auto& blob = blobs[b];
    const std::string where = "scene.blobs[" + std::to_string(b) + "]";
    if (blob.signature.size() != channels) {
      out.push_back(where + ".signature: expected " + std::to_string(channels) + " entries, got " +
                    std::to_string(blob.signature.size()));
    } else {
      double norm2 = 0.0;
      for (double v : blob.signature) norm2 += v * v;
      if (!std::isfinite(norm2) || std::abs(std::sqrt(norm2) - 1.0) > 1e-6) {
        out.push_back(where + ".signature: must have unit L2 norm");
      }
    }
    if (!(blob.sigma > 0.5)) out.push_back(where + ".sigma: must be > 0.5 px");
    if (!(blob.amplitude > 0.0)) out.push_back(where + ".amplitude: must be > 0");
  }
  return out;
}

void BlobSceneSpec::validate() const {
  auto v = violations();
  if (!v.empty()) throw ValidationError(std::move(v));
}

bool BlobSceneSpec::has_twin_signatures() const {
  for (std::size_t a = 0; a < blobs.size(); ++a) {
    for (std::size_t b = a + 1; b < blobs.size(); ++b) {
      if (blobs[a].signature == blobs[b].signature) return true;
    }
  }
  return false;
}

LatentCode LatentCode::from_centers(const BlobSceneSpec& spec, const std::vector<Vec2>& centers_px) {
  std::vector<double> values;
  values.reserve(2 * centers_px.size());
  for (Vec2 c : centers_px) {
    values.push_back(c.x / spec.latent_scale);
    values.push_back(c.y / spec.latent_scale);
  }
  return LatentCode(std::move(values));
}

Vec2 blob_center(const BlobSceneSpec& spec, std::span<const double> latent, std::size_t b) {
  if (2 * b + 1 >= latent.size()) throw BoundsError("blob index " + std::to_string(b) + " out of range");
  return clamped_center(spec, latent, b).px;
}

Vec2 semantic_oracle(const BlobSceneSpec& spec, const LatentCode& w, std::size_t blob_index) {
  return blob_center(spec, w.values(), blob_index);
}

FieldGenerator::FieldGenerator(BlobSceneSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t n = spec_.channels * static_cast<std::size_t>(spec_.height) * spec_.width;
  noise_.assign(n, 0.0);
  if (spec_.noise_amplitude > 0.0) {
    std::mt19937_64 rng(spec_.background_noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : noise_) v = spec_.noise_amplitude * normal(rng);
  }
}

ad::Tensor FieldGenerator::generate(const ad::Tensor& w) const {
  const std::size_t B = spec_.blobs.size();
  if (w.shape() != ad::Shape{2 * B}) {
    throw ShapeError("generate: latent of shape " + ad::shape_string(w.shape()) + " for a scene with " +
                     std::to_string(B) + " blobs");
  }
  const std::size_t C = spec_.channels, W = spec_.width;
  const std::size_t plane = static_cast<std::size_t>(spec_.height) * W;
  const auto latent = w.values();

  std::vector<double> out = noise_;
  std::vector<double> gauss;
  for (std::size_t b = 0; b < B; ++b) {
    const BlobSpec& blob = spec_.blobs[b];
    const Vec2 c = clamped_center(spec_, latent, b).px;
    const Box box = support_box(spec_, c, blob.sigma);
    const double inv2s2 = 1.0 / (2.0 * blob.sigma * blob.sigma);
    const int bw = box.x1 - box.x0 + 1;
    gauss.assign(static_cast<std::size_t>(bw) * (box.y1 - box.y0 + 1), 0.0);
    for (int y = box.y0; y <= box.y1; ++y) {
      for (int x = box.x0; x <= box.x1; ++x) {
        const double dx = x - c.x, dy = y - c.y;
        gauss[static_cast<std::size_t>(y - box.y0) * bw + (x - box.x0)] = blob.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2);
      }
    }
    for (std::size_t ch = 0; ch < C; ++ch) {
      const double s = blob.signature[ch];
      if (s == 0.0) continue;
      double* p = out.data() + ch * plane;
      for (int y = box.y0; y <= box.y1; ++y) {
        const double* g = gauss.data() + static_cast<std::size_t>(y - box.y0) * bw;
        double* row = p + static_cast<std::size_t>(y) * W;
        for (int x = box.x0; x <= box.x1; ++x) row[x] += s * g[x - box.x0];
      }
    }
  }

  return ad::make_op_result(
      {C, static_cast<std::size_t>(spec_.height), W}, std::move(out), {w}, "generate",
      [spec = spec_, w, C, W, plane](std::span<const double> g) {
        auto* gw = ad::OpAccess::grad_of(w);
        const auto& latent = ad::OpAccess::value_of(w);
        for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
          const BlobSpec& blob = spec.blobs[b];
          const ClampedCenter cc = clamped_center(spec, latent, b);
          if (cc.clamped_x && cc.clamped_y) continue;
          const Vec2 c = cc.px;
          const Box box = support_box(spec, c, blob.sigma);
          const double inv2s2 = 1.0 / (2.0 * blob.sigma * blob.sigma);
          const double inv_s2 = 1.0 / (blob.sigma * blob.sigma);
          double dcx = 0.0, dcy = 0.0;
          for (int y = box.y0; y <= box.y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
              const std::size_t idx = static_cast<std::size_t>(y) * W + x;
              double projected = 0.0;
              for (std::size_t ch = 0; ch < C; ++ch) projected += g[ch * plane + idx] * blob.signature[ch];
              if (projected == 0.0) continue;
              const double dx = x - c.x, dy = y - c.y;
              const double value = blob.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2);
              // d/dc of exp(-|p-c|²/2σ²) = exp(...) · (p-c)/σ²
              dcx += projected * value * dx * inv_s2;
              dcy += projected * value * dy * inv_s2;
            }
          }
          if (!cc.clamped_x) (*gw)[2 * b] += dcx * spec.latent_scale;
          if (!cc.clamped_y) (*gw)[2 * b + 1] += dcy * spec.latent_scale;
        }
      });
}

FeatureField FieldGenerator::generate(const LatentCode& w, const std::string& scenario_id) const {
  FeatureField field;
  field.tensor = generate(ad::Tensor::constant({w.values().size()}, w.values()));
  field.scenario_id = scenario_id;
  field.latent = w.values();
  return field;
}

FeatureField generate(const BlobSceneSpec& spec, const LatentCode& w) { return FieldGenerator(spec).generate(w); }

Projection default_projection(std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Projection p;
  p.channels = channels;
  p.weights.resize(channels * 3);
  for (double& v : p.weights) v = uniform(rng);
  return p;
}

RgbImage render_rgb(const ad::Tensor& field, const Projection& projection) {
  if (field.rank() != 3) throw ShapeError("render_rgb: expected C×H×W field");
  const std::size_t C = field.dim(0), H = field.dim(1), W = field.dim(2);
  if (projection.channels != C || projection.weights.size() != 3 * C) {
    throw ShapeError("render_rgb: projection does not match " + std::to_string(C) + " channels");
  }
  for (double v : projection.weights) {
    if (!std::isfinite(v)) throw NumericError("render_rgb: non-finite projection weight");
  }
  const std::size_t plane = H * W;
  const auto fv = field.values();
  RgbImage img;
  img.width = static_cast<int>(W);
  img.height = static_cast<int>(H);
  img.pixels.assign(3 * plane, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double* p = fv.data() + c * plane;
    for (int k = 0; k < 3; ++k) {
      const double wk = projection.weights[3 * c + k];
      if (wk == 0.0) continue;
      for (std::size_t i = 0; i < plane; ++i) img.pixels[3 * i + k] += wk * p[i];
    }
  }
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double min = *lo, range = *hi - *lo;
  if (!(range > 1e-12)) {
    std::fill(img.pixels.begin(), img.pixels.end(), 0.5);
    return img;
  }
  for (double& v : img.pixels) v = (v - min) / range;
  return img;
}

}  // namespace dragkit
