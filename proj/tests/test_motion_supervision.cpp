#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dragkit/errors.hpp"
#include "dragkit/motion_supervision.hpp"
#include "dragkit/scenario_library.hpp"
#include "gradient_cases.hpp"

using namespace dragkit;

namespace {

// one channel, F(x, y) = x + shift
ad::Tensor ramp(int H, int W, double shift = 0.0) {
  std::vector<double> v(static_cast<std::size_t>(H) * W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) v[static_cast<std::size_t>(y) * W + x] = x + shift;
  }
  return ad::Tensor::constant({1, std::size_t(H), std::size_t(W)}, v);
}

ad::Tensor constant_field(std::size_t C, int H, int W, double value) {
  return ad::Tensor::constant({C, std::size_t(H), std::size_t(W)},
                              std::vector<double>(C * H * W, value));
}

SupervisedPoint point_at(Cell p, Vec2 t) { return {p, p, t, true, Gate::L1}; }

}  // namespace

TEST_CASE("deviation vector") {
  const auto a = deviation_vector({0, 0}, {3, 4});
  REQUIRE(a);
  CHECK(a->x == doctest::Approx(0.6));
  CHECK(a->y == doctest::Approx(0.8));
  CHECK(*deviation_vector({1, 1}, {1, 5}) == Vec2{0, 1});
  CHECK_FALSE(deviation_vector({7, 7}, {7, 7}));
}

TEST_CASE("gate threshold") {
  CHECK(select_loss(0.5, 1.0, 0.4) == Gate::L1);
  CHECK(select_loss(0.4, 1.0, 0.4) == Gate::L2);
  CHECK(select_loss(0.39, 1.0, 0.4) == Gate::L2);
  CHECK(select_loss(std::nullopt, 1.0, 0.4) == Gate::L1);
  CHECK(select_loss(0.01, std::nullopt, 1.0) == Gate::L1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double s = u(rng), s1 = u(rng), tau = u(rng);
    CHECK(select_loss(s, s1, 0.0) == Gate::L1);
    CHECK(select_loss(s, s1, tau) == (s > tau * s1 ? Gate::L1 : Gate::L2));
    if (s <= s1) CHECK(select_loss(s, s1, 1.0) == Gate::L2);
  }
  CHECK(gate_from_string(to_string(Gate::L2)) == Gate::L2);
}

TEST_CASE("disk offsets match a brute-force count") {
  for (double r : {0.5, 1.0, 1.5, 3.0, 4.2}) {
    std::vector<Cell> expect;
    for (int y = -5; y <= 5; ++y) {
      for (int x = -5; x <= 5; ++x) {
        if (x * x + y * y < r * r) expect.push_back({x, y});
      }
    }
    CHECK(disk_offsets(r) == expect);
  }
  CHECK(disk_patch({0, 0}, 3.0, 10, 10).size() == 9);  // (0..2)² minus nothing outside the disk
}

TEST_CASE("mask grid") {
  const MaskGrid full = MaskGrid::full(4, 5);
  CHECK(full.all_editable());
  CHECK(full.preserved_count() == 0);
  const MaskGrid m = MaskGrid::from_rects(4, 5, {{1, 1, 2, 2}, {4, 3, 9, 9}});
  CHECK(m.editable(1, 1));
  CHECK(m.editable(4, 3));
  CHECK_FALSE(m.editable(0, 0));
  CHECK(m.preserved_count() == 20 - 5);
}

TEST_CASE("ramp field: dynamic term is one per pixel") {
  const ad::Tensor f = ramp(5, 6);
  const std::vector<SupervisedPoint> pts{point_at({2, 2}, {5, 2})};
  const LossTerms l = loss_dynamic(f, f, pts, MaskGrid::full(5, 6), 20.0, 1.0);
  CHECK(l.point_term == doctest::Approx(1.0));
  CHECK(l.mask_term == 0.0);
}

TEST_CASE("ramp field: drifted template adds the drift") {
  const ad::Tensor f = ramp(5, 6), f0 = ramp(5, 6, -0.5);
  const std::vector<SupervisedPoint> pts{point_at({2, 2}, {5, 2})};
  const double l1 = loss_dynamic(f, f0, pts, MaskGrid::full(5, 6), 0.0, 1.0).point_term;
  const double l2 = loss_template(f, f0, pts, MaskGrid::full(5, 6), 0.0, 1.0).point_term;
  CHECK(l2 - l1 == doctest::Approx(0.5));
}

TEST_CASE("losses vanish on constant fields and with no active points") {
  const ad::Tensor c = constant_field(3, 12, 12, 0.7);
  std::vector<SupervisedPoint> pts{point_at({5, 5}, {9, 8})};
  CHECK(loss_dynamic(c, c, pts, MaskGrid::full(12, 12), 20.0, 3.0).total.item() == 0.0);
  CHECK(loss_template(c, c, pts, MaskGrid::full(12, 12), 20.0, 3.0).total.item() == 0.0);

  const Scenario sc = make_scenario("plain_0");
  const ad::Tensor f0 = generate(sc.scene, sc.initial_latent()).tensor;
  pts = {point_at(sc.points[0].handle, sc.points[0].target)};
  pts[0].active = false;
  CHECK(loss_dynamic(f0, f0, pts, sc.mask(), 20.0, 3.0).total.item() == 0.0);
  CHECK(loss_template(f0, f0, pts, sc.mask(), 20.0, 3.0).total.item() == 0.0);
}

TEST_CASE("mask term") {
  const ad::Tensor f0 = constant_field(2, 4, 4, 0.0);
  std::vector<double> v(32, 0.0);
  v[0] = 0.5;    // channel 0, (0,0): preserved
  v[5] = -0.25;  // channel 0, (1,1): editable
  v[16] = -1.0;  // channel 1, (0,0): preserved
  const MaskGrid m = MaskGrid::from_rects(4, 4, {{1, 1, 3, 3}});
  CHECK(mask_term(ad::Tensor::constant({2, 4, 4}, v), f0, MaskGrid::full(4, 4), 20.0).item() == 0.0);
  CHECK(mask_term(ad::Tensor::constant({2, 4, 4}, v), f0, m, 0.0).item() == 0.0);
  CHECK(mask_term(ad::Tensor::constant({2, 4, 4}, v), f0, m, 2.0).item() == doctest::Approx(2.0 * 1.5));

  ad::Tape tape;
  const ad::Tensor f = tape.variable({2, 4, 4}, v);
  tape.backward(mask_term(f, f0, m, 20.0));
  const auto g = f.grad();
  CHECK(g[0] == 20.0);
  CHECK(g[16] == -20.0);
  CHECK(g[5] == 0.0);
}

TEST_CASE("dynamic loss sends no gradient into its detached operand") {
  const ad::Tensor r = ramp(5, 6);
  ad::Tape tape;
  const ad::Tensor f = tape.variable({1, 5, 6}, std::vector<double>(r.values().begin(), r.values().end()));
  const std::vector<SupervisedPoint> pts{point_at({2, 2}, {5, 2})};
  tape.backward(loss_dynamic(f, f.detached(), pts, MaskGrid::full(5, 6), 20.0, 1.0).total);
  const auto g = f.grad();
  CHECK(g[2 * 6 + 2] == 0.0);  // reference cell
  CHECK(g[2 * 6 + 3] == 1.0);  // sample at p + d; F(p) − F(p + d) < 0
  double rest = 0.0;
  for (double x : g) rest += std::abs(x);
  CHECK(rest == 1.0);
}

TEST_CASE("losses are never negative") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const auto g = testing::gradient_instance(rng);
    const ad::Tensor f = g.generator.generate(g.w).tensor;
    const std::vector<SupervisedPoint> pts{g.point};
    CHECK(loss_dynamic(f, g.initial_field, pts, g.mask, g.eta, g.r1).total.item() >= 0.0);
    CHECK(loss_template(f, g.initial_field, pts, g.mask, g.eta, g.r1).total.item() >= 0.0);
  }
}

TEST_CASE("clipped patches and fully outside patches") {
  const ad::Tensor f = ramp(6, 6);
  // patch around a corner keeps only in-bounds pixels
  CHECK(dynamic_point_term(f, point_at({0, 0}, {5, 0}), 2.0).item() == doctest::Approx(4.0));
  CHECK_THROWS_AS(dynamic_point_term(f, point_at({9, 9}, {12, 9}), 1.0), DegeneratePatchError);
}

TEST_CASE("loss gradients agree with central differences") {
  std::mt19937_64 rng(41);
  double dyn = 0.0, tmpl = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto g = testing::gradient_instance(rng);
    dyn = std::max(dyn, testing::dynamic_loss_error(g));
    tmpl = std::max(tmpl, testing::template_loss_error(g));
  }
  CHECK(dyn < 1e-4);
  CHECK(tmpl < 1e-4);
}

TEST_CASE("gated loss picks each point's own term") {
  std::mt19937_64 rng(43);
  const auto g = testing::gradient_instance(rng);
  const ad::Tensor f = g.generator.generate(g.w).tensor;
  SupervisedPoint a = g.point, b = g.point;
  a.gate = Gate::L1;
  b.gate = Gate::L2;
  const double expect = dynamic_point_term(f, a, g.r1).item() + template_point_term(f, g.initial_field, b, g.r1).item();
  CHECK(loss_gated(f, g.initial_field, {a, b}, MaskGrid::full(22, 24), 0.0, g.r1).point_term ==
        doctest::Approx(expect));
}

TEST_CASE("adam matches the recurrence by hand") {
  // f(x) = x², x0 = 1
  Adam adam(0.01);
  std::vector<double> x{1.0};
  adam.step(x, std::vector<double>{2.0});
  // m̂ = 2, v̂ = 4
  CHECK(x[0] == doctest::Approx(1.0 - 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  const double g2 = 2.0 * x[0];
  const double m = 0.9 * 0.2 + 0.1 * g2, v = 0.999 * 0.004 + 0.001 * g2 * g2;
  const double expect = x[0] - 0.01 * (m / 0.19) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  adam.step(x, std::vector<double>{g2});
  CHECK(x[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(adam.iterations() == 2);
  CHECK_THROWS_AS(adam.step(x, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST_CASE("zero loss landscape leaves the latent alone") {
  const Scenario sc = make_scenario("plain_1");
  const FieldGenerator gen(sc.scene);
  LatentCode w = sc.initial_latent();
  const LatentCode before = w;
  const ad::Tensor f0 = gen.generate(w).tensor;
  SupervisedPoint p = point_at(sc.points[0].handle, sc.points[0].target);
  p.active = false;
  Adam adam(0.01);
  SupervisionConfig cfg;
  const auto r = supervision_step(gen, w, adam, f0, {p}, MaskGrid::full(sc.scene.height, sc.scene.width), cfg);
  CHECK(r.loss == 0.0);
  for (std::size_t i = 0; i < w.values().size(); ++i) CHECK(std::abs(w.values()[i] - before.values()[i]) < 1e-8);
}

TEST_CASE("one step moves the blob toward the target") {
  const Scenario sc = make_scenario("single_blob");
  const SupervisionConfig cfg = sc.effective_config({});
  const FieldGenerator gen(sc.scene);
  LatentCode w = sc.initial_latent();
  const ad::Tensor f0 = gen.generate(w).tensor;
  const std::size_t b = *sc.oracle_blob(0);
  const Vec2 c0 = semantic_oracle(sc.scene, w, b);
  Adam adam(cfg.lr, 0.9, 0.999, cfg.adam_epsilon);
  const auto r = supervision_step(gen, w, adam, f0, {point_at(sc.points[0].handle, sc.points[0].target)}, sc.mask(), cfg);
  CHECK(r.loss > 0.0);
  const Vec2 c1 = semantic_oracle(sc.scene, w, b);
  const Vec2 dir = sc.points[0].target - c0, moved = c1 - c0;
  CHECK(moved.x * dir.x + moved.y * dir.y > 0.0);
}

TEST_CASE("config validation lists every violation") {
  SupervisionConfig c;
  c.tau = 1.5;
  c.lambda = -0.1;
  c.r2 = 1;
  c.eta = -1;
  CHECK(c.violations().size() == 4);
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(SupervisionConfig{}.violations().empty());
  CHECK(SupervisionConfig{}.effective_sigma_label() == 2.0);
}
