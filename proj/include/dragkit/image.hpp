#pragma once

// 8-bit RGB frames, PNG coding, and the overlays drawn on rendered fields:
// per-point trajectories with handle/target markers, and score heatmaps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dragkit/drag_engine.hpp"
#include "dragkit/feature_field.hpp"
#include "dragkit/point_tracker.hpp"

namespace dragkit {

struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  Rgb8Image() = default;
  Rgb8Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::array<std::uint8_t, 3> at(int x, int y) const;
  void set(int x, int y, std::array<std::uint8_t, 3> rgb);
  friend bool operator==(const Rgb8Image&, const Rgb8Image&) = default;
};

Rgb8Image to_rgb8(const RgbImage& image);

/// Field rendered through the default channel projection.
Rgb8Image field_image(const ad::Tensor& field);

std::string encode_png(const Rgb8Image& image);
Rgb8Image decode_png(std::string_view bytes);
void write_png(const std::filesystem::path& path, const Rgb8Image& image);

inline constexpr std::array<std::uint8_t, 3> kHandleColor{230, 40, 40};
inline constexpr std::array<std::uint8_t, 3> kTargetColor{40, 90, 230};
inline constexpr std::array<std::uint8_t, 3> kPathColor{60, 220, 90};

void draw_line(Rgb8Image& image, Vec2 a, Vec2 b, std::array<std::uint8_t, 3> color);
/// Filled square of half-width `radius`.
void draw_marker(Rgb8Image& image, Vec2 center, int radius, std::array<std::uint8_t, 3> color);

/// Polyline through each path, a red marker at its last cell, a blue marker at its target.
void overlay_trajectories(Rgb8Image& image, const std::vector<std::vector<Cell>>& paths,
                          const std::vector<Vec2>& targets);

/// Dims the frame to 40% and paints the score window with a heat ramp whose
/// brightness rises with the score; the maximum score is pure white.
void overlay_heatmap(Rgb8Image& image, const ScoreMap& map);

/// Field at `step` of a record (0 is the initial field) with trajectories up to that step.
Rgb8Image render_record_step(const RunRecord& record, int step);

}  // namespace dragkit
