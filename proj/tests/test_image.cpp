#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dragkit/errors.hpp"
#include "dragkit/image.hpp"
#include "dragkit/scenario_library.hpp"

using namespace dragkit;

namespace {

Cell brightest(const Rgb8Image& img) {
  Cell best{0, 0};
  int v = -1;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto p = img.at(x, y);
      if (p[0] + p[1] + p[2] > v) {
        v = p[0] + p[1] + p[2];
        best = {x, y};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("png round trip") {
  Rgb8Image img(7, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) img.set(x, y, {std::uint8_t(x * 30), std::uint8_t(y * 50), std::uint8_t(x + y)});
  }
  const std::string png = encode_png(img);
  CHECK(png.substr(1, 3) == "PNG");
  CHECK(decode_png(png) == img);
  CHECK_THROWS_AS(decode_png("garbage"), Error);
}

TEST_CASE("field images") {
  const Rgb8Image gray = field_image(ad::Tensor::zeros({4, 3, 6}));
  CHECK(gray.width == 6);
  CHECK(gray.height == 3);
  for (auto v : gray.pixels) CHECK((v == 127 || v == 128));
}

TEST_CASE("markers and lines") {
  Rgb8Image img(20, 20);
  draw_marker(img, {5, 5}, 1, kHandleColor);
  CHECK(img.at(4, 4) == kHandleColor);
  CHECK(img.at(6, 6) == kHandleColor);
  CHECK(img.at(7, 5) == std::array<std::uint8_t, 3>{0, 0, 0});
  draw_marker(img, {-3, 19}, 1, kTargetColor);  // clipped, no crash
  draw_line(img, {0, 10}, {19, 10}, kPathColor);
  for (int x = 0; x < 20; ++x) CHECK(img.at(x, 10) == kPathColor);
}

TEST_CASE("trajectory overlay ends in a red handle and a blue target") {
  Rgb8Image img(40, 40);
  overlay_trajectories(img, {{{5, 20}, {10, 20}, {15, 21}}}, {{32, 20}});
  CHECK(img.at(15, 21) == kHandleColor);
  CHECK(img.at(32, 20) == kTargetColor);
  CHECK(img.at(8, 20) == kPathColor);
}

TEST_CASE("heatmap paints the maximum score white") {
  Rgb8Image img(30, 30);
  for (auto& v : img.pixels) v = 200;
  ScoreMap m;
  m.patch = make_search_patch({15, 15}, 3, 30, 30);
  m.scores.assign(m.patch.size(), 0.1);
  m.scores[7] = 0.9;
  overlay_heatmap(img, m);
  const Cell top = m.patch.cell_at(7);
  CHECK(img.at(top.x, top.y) == std::array<std::uint8_t, 3>{255, 255, 255});
  CHECK(brightest(img) == top);
  CHECK(img.at(0, 0)[0] == 80);  // dimmed to 40%
}

TEST_CASE("record frames follow the trajectory") {
  Scenario sc = make_scenario("single_blob");
  sc.config.max_steps = 6;
  const RunRecord r = run_scenario(sc);
  const Rgb8Image first = render_record_step(r, 0);
  const Rgb8Image last = render_record_step(r, 6);
  CHECK(first.width == sc.scene.width);
  const Cell p = r.steps.back().points[0].p;
  CHECK(last.at(p.x, p.y) == kHandleColor);
  const Cell t = round_to_cell(sc.points[0].target);
  CHECK(last.at(t.x, t.y) == kTargetColor);
  CHECK(first.at(sc.points[0].handle.x, sc.points[0].handle.y) == kHandleColor);
  CHECK_FALSE(first == last);
  CHECK_THROWS(render_record_step(r, 7));
}
