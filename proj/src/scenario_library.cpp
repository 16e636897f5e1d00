#include "dragkit/scenario_library.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dragkit/errors.hpp"

namespace dragkit {

namespace {

constexpr double kBlobSigma = 2.0;
constexpr double kBlobAmplitude = 2.0;
constexpr int kMaskMargin = 18;

class Builder {
 public:
  Builder(std::string id, std::uint64_t seed, int height, int width, std::size_t channels) : rng_(seed) {
    sc_.id = std::move(id);
    sc_.scene.height = height;
    sc_.scene.width = width;
    sc_.scene.channels = channels;
    sc_.set_seed(seed);
  }

  std::mt19937_64& rng() { return rng_; }
  Scenario& scenario() { return sc_; }

  std::vector<double> signature() { return random_signature(sc_.scene.channels, rng_); }

  std::size_t blob(Vec2 center, std::vector<double> signature, double sigma = kBlobSigma,
                   double amplitude = kBlobAmplitude) {
    sc_.scene.blobs.push_back({std::move(signature), sigma, amplitude});
    sc_.initial_centers.push_back(center);
    return sc_.scene.blobs.size() - 1;
  }

  void point(std::size_t blob_index, Vec2 target) {
    const Vec2 c = sc_.initial_centers[blob_index];
    sc_.points.push_back({round_to_cell(c), target, blob_index});
  }

  /// Editable region: bounding box of every handle and target, grown by `margin`.
  void corridor_mask(int margin = kMaskMargin) {
    std::vector<MaskGrid::Rect> rects;
    for (const auto& pt : sc_.points) {
      const double x0 = std::min<double>(pt.handle.x, pt.target.x), x1 = std::max<double>(pt.handle.x, pt.target.x);
      const double y0 = std::min<double>(pt.handle.y, pt.target.y), y1 = std::max<double>(pt.handle.y, pt.target.y);
      rects.push_back({static_cast<int>(std::floor(x0)) - margin, static_cast<int>(std::floor(y0)) - margin,
                       static_cast<int>(std::ceil(x1)) + margin, static_cast<int>(std::ceil(y1)) + margin});
    }
    sc_.mask_rects = rects;
  }

  /// Scatters static background blobs outside the editable region and away from other blobs.
  void background(int count) {
    const MaskGrid mask = sc_.mask();
    std::uniform_real_distribution<double> ux(8.0, sc_.scene.width - 9.0), uy(8.0, sc_.scene.height - 9.0);
    int placed = 0;
    for (int attempt = 0; attempt < 2000 && placed < count; ++attempt) {
      const Vec2 c{ux(rng_), uy(rng_)};
      if (!clear_of_mask(mask, c, 10)) continue;
      bool far = true;
      for (const Vec2& o : sc_.initial_centers) far = far && distance(o, c) > 20.0;
      if (!far) continue;
      blob(c, signature());
      ++placed;
    }
  }

  Scenario finish() {
    sc_.validate(sc_.effective_config({}));
    return sc_;
  }

 private:
  static bool clear_of_mask(const MaskGrid& mask, Vec2 c, int radius) {
    const int cx = static_cast<int>(std::lround(c.x)), cy = static_cast<int>(std::lround(c.y));
    for (int y = std::max(0, cy - radius); y <= std::min(mask.height() - 1, cy + radius); ++y) {
      for (int x = std::max(0, cx - radius); x <= std::min(mask.width() - 1, cx + radius); ++x) {
        if (mask.editable(x, y)) return false;
      }
    }
    return true;
  }

  Scenario sc_;
  std::mt19937_64 rng_;
};

Vec2 polar(double length, double angle) { return {length * std::cos(angle), length * std::sin(angle)}; }

Scenario single_blob() {
  Builder b("single_blob", 1, 256, 256, 64);
  const std::size_t h = b.blob({108, 128}, b.signature());
  b.point(h, {148, 128});
  b.corridor_mask();
  b.background(6);
  return b.finish();
}

// A 30-45 px drag in a random direction on a smaller scene.
Scenario plain(int k) {
  Builder b("plain_" + std::to_string(k), 100 + k, 160, 160, 32);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), len(30.0, 45.0);
  const Vec2 start{80.0, 80.0};
  const Vec2 target = start + polar(len(b.rng()), angle(b.rng()));
  const std::size_t h = b.blob(start, b.signature());
  b.point(h, {std::round(target.x), std::round(target.y)});
  b.corridor_mask();
  b.background(5);
  return b.finish();
}

// A drag of at least 60 px across the scene.
Scenario long_range(int k) {
  Builder b("long_range_" + std::to_string(k), 200 + k, 160, 160, 32);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), len(62.0, 72.0);
  const double a = angle(b.rng());
  const double l = len(b.rng());
  const Vec2 mid{80.0, 80.0};
  const Vec2 start = mid + polar(-l / 2, a), target = mid + polar(l / 2, a);
  const std::size_t h = b.blob({std::round(start.x), std::round(start.y)}, b.signature());
  b.point(h, {std::round(target.x), std::round(target.y)});
  b.corridor_mask();
  b.background(4);
  return b.finish();
}

// Twin blob with the handle's exact signature beside the drag path. The twin
// sits on a faint one-channel context blob that only a trained filter can see.
Scenario distractor(int k) {
  Builder b("distractor_twin_" + std::to_string(k), 300 + k, 128, 128, 32);
  b.scenario().scene.noise_amplitude = 0.002;
  auto& rng = b.rng();
  const std::size_t C = b.scenario().scene.channels;
  const std::size_t ctx_channel = k % C;
  std::vector<double> s = b.signature();
  s[ctx_channel] = 0.0;
  double n = 0.0;
  for (double v : s) n += v * v;
  for (double& v : s) v /= std::sqrt(n);

  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const Vec2 start{44.0, 60.0};
  const double side = (k % 2 == 0) ? 1.0 : -1.0;
  const Vec2 twin_at{start.x + 11.0, start.y + side * 8.0};
  const std::size_t h = b.blob(start, s);
  b.blob(twin_at, s);
  std::vector<double> ctx(C, 0.0);
  ctx[ctx_channel] = 1.0;
  b.blob(twin_at, ctx, 3.0, 0.1);
  b.point(h, {std::round(start.x + 40.0 + 3.0 * jitter(rng)), std::round(start.y + 3.0 * jitter(rng))});
  b.corridor_mask();
  b.background(3);
  return b.finish();
}

// The handle blob is dragged straight through a broad anti-blob whose
// signature cancels it, so tracking confidence sags midway along the path.
Scenario drift(int k) {
  Builder b("drift_" + std::to_string(k), 400 + k, 96, 128, 32);
  const std::vector<double> s = b.signature();
  std::vector<double> anti(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) anti[c] = -s[c];
  const Vec2 start{30.0, 48.0};
  const std::size_t h = b.blob(start, s);
  b.blob({start.x + 26.0, start.y}, anti, 5.0, 2.0);
  b.point(h, {start.x + 40.0, start.y});
  b.corridor_mask(10);
  b.background(2);
  return b.finish();
}

int parse_index(std::string_view name, std::string_view prefix) {
  const std::string_view rest = name.substr(prefix.size());
  if (rest.empty()) throw ValidationError({"scenario: missing index in '" + std::string(name) + "'"});
  int k = 0;
  for (char ch : rest) {
    if (ch < '0' || ch > '9') throw ValidationError({"scenario: bad index in '" + std::string(name) + "'"});
    k = k * 10 + (ch - '0');
    if (k > 999) throw ValidationError({"scenario: index too large in '" + std::string(name) + "'"});
  }
  return k;
}

}  // namespace

std::vector<double> random_signature(std::size_t channels, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> s(channels);
  double n2 = 0.0;
  for (double& v : s) {
    v = normal(rng);
    n2 += v * v;
  }
  const double n = std::sqrt(n2);
  for (double& v : s) v /= n;
  return s;
}

Scenario make_scenario(std::string_view name) {
  if (name == "single_blob") return single_blob();
  const std::pair<std::string_view, Scenario (*)(int)> families[] = {
      {"plain_", plain}, {"long_range_", long_range}, {"distractor_twin_", distractor}, {"drift_", drift}};
  for (const auto& [prefix, make] : families) {
    if (name.starts_with(prefix)) return make(parse_index(name, prefix));
  }
  throw ValidationError({"scenario: unknown template '" + std::string(name) + "' (known: single_blob, plain_<k>, "
                         "long_range_<k>, distractor_twin_<k>, drift_<k>)"});
}

std::vector<std::string> template_names() {
  return {"single_blob", "plain_<k>", "long_range_<k>", "distractor_twin_<k>", "drift_<k>"};
}

std::vector<std::string> suite_names() { return {"plain", "long_range", "distractor", "drift", "default"}; }

std::vector<Scenario> make_suite(std::string_view name) {
  auto family = [](std::string_view prefix, int count) {
    std::vector<Scenario> out;
    for (int k = 0; k < count; ++k) out.push_back(make_scenario(std::string(prefix) + std::to_string(k)));
    return out;
  };
  std::vector<Scenario> out;
  if (name == "plain") {
    out = family("plain_", 3);
  } else if (name == "long_range") {
    out = family("long_range_", 3);
  } else if (name == "distractor") {
    out = family("distractor_twin_", 5);
  } else if (name == "drift") {
    out = family("drift_", 5);
  } else if (name == "default") {
    for (std::string_view s : {"plain", "long_range", "distractor", "drift"}) {
      auto part = make_suite(s);
      out.insert(out.end(), part.begin(), part.end());
    }
  } else {
    throw ValidationError({"suite: unknown suite '" + std::string(name) + "' (known: plain, long_range, distractor, "
                           "drift, default)"});
  }
  std::sort(out.begin(), out.end(), [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
  return out;
}

}  // namespace dragkit
