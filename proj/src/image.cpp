#include "dragkit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dragkit/errors.hpp"
#include "dragkit/io.hpp"

namespace dragkit {

std::array<std::uint8_t, 3> Rgb8Image::at(int x, int y) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Rgb8Image::set(int x, int y, std::array<std::uint8_t, 3> rgb) {
  if (!inside(x, y)) return;
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  pixels[i] = rgb[0];
  pixels[i + 1] = rgb[1];
  pixels[i + 2] = rgb[2];
}

Rgb8Image to_rgb8(const RgbImage& image) {
  Rgb8Image out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

Rgb8Image field_image(const ad::Tensor& field) {
  return to_rgb8(render_rgb(field, default_projection(field.dim(0))));
}

namespace {

void write_to_string(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void flush_noop(png_structp) {}

struct ReadCursor {
  std::string_view bytes;
  std::size_t offset = 0;
};

void read_from_view(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, cur->bytes.data() + cur->offset, length);
  cur->offset += length;
}

}  // namespace

std::string encode_png(const Rgb8Image& image) {
  if (image.width <= 0 || image.height <= 0) throw Error("encode_png: empty image");
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("encode_png: libpng initialization failed");
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("encode_png: libpng failed");
  }
  png_set_write_fn(png, &out, write_to_string, flush_noop);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Rgb8Image decode_png(std::string_view bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw Error("decode_png: not a PNG");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("decode_png: libpng initialization failed");
  }
  ReadCursor cursor{bytes, 0};
  Rgb8Image image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("decode_png: malformed PNG");
  }
  png_set_read_fn(png, &cursor, read_from_view);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  image = Rgb8Image(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
  rows.resize(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png(const std::filesystem::path& path, const Rgb8Image& image) { write_file(path, encode_png(image)); }

void draw_line(Rgb8Image& image, Vec2 a, Vec2 b, std::array<std::uint8_t, 3> color) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(b.x - a.x), std::abs(b.y - a.y)))));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    image.set(static_cast<int>(std::lround(a.x + t * (b.x - a.x))), static_cast<int>(std::lround(a.y + t * (b.y - a.y))),
              color);
  }
}

void draw_marker(Rgb8Image& image, Vec2 center, int radius, std::array<std::uint8_t, 3> color) {
  const int cx = static_cast<int>(std::lround(center.x)), cy = static_cast<int>(std::lround(center.y));
  for (int y = cy - radius; y <= cy + radius; ++y) {
    for (int x = cx - radius; x <= cx + radius; ++x) image.set(x, y, color);
  }
}

void overlay_trajectories(Rgb8Image& image, const std::vector<std::vector<Cell>>& paths,
                          const std::vector<Vec2>& targets) {
  for (std::size_t i = 0; i < targets.size(); ++i) draw_marker(image, targets[i], 1, kTargetColor);
  for (const auto& path : paths) {
    for (std::size_t k = 1; k < path.size(); ++k) draw_line(image, path[k - 1].to_vec(), path[k].to_vec(), kPathColor);
    if (!path.empty()) draw_marker(image, path.back().to_vec(), 1, kHandleColor);
  }
}

void overlay_heatmap(Rgb8Image& image, const ScoreMap& map) {
  for (auto& v : image.pixels) v = static_cast<std::uint8_t>(v * 2 / 5);
  if (map.scores.empty()) return;
  const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
  const double range = *hi - *lo;
  for (std::size_t k = 0; k < map.scores.size(); ++k) {
    const double h = range > 0.0 ? (map.scores[k] - *lo) / range : 1.0;
    auto channel = [&](double offset) {
      return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(3.0 * h - offset, 0.0, 1.0)));
    };
    const Cell c = map.patch.cell_at(k);
    image.set(c.x, c.y, {channel(0.0), channel(1.0), channel(2.0)});
  }
}

Rgb8Image render_record_step(const RunRecord& record, int step) {
  if (step < 0 || step > static_cast<int>(record.steps.size())) {
    throw BoundsError("render: step " + std::to_string(step) + " is outside 0.." + std::to_string(record.steps.size()));
  }
  const FieldGenerator gen(record.scenario.scene);
  const LatentCode w = step == 0 ? record.scenario.initial_latent() : LatentCode(record.steps[step - 1].latent);
  Rgb8Image image = field_image(gen.generate(w).tensor);

  std::vector<std::vector<Cell>> paths;
  std::vector<Vec2> targets;
  for (std::size_t i = 0; i < record.scenario.points.size(); ++i) {
    std::vector<Cell> path{record.scenario.points[i].handle};
    for (int k = 0; k < step; ++k) {
      const Cell p = record.steps[k].points.at(i).p;
      if (!(p == path.back())) path.push_back(p);
    }
    paths.push_back(std::move(path));
    targets.push_back(record.scenario.points[i].target);
  }
  overlay_trajectories(image, paths, targets);
  return image;
}

}  // namespace dragkit
