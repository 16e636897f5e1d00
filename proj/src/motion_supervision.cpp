#include "dragkit/motion_supervision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dragkit/errors.hpp"

namespace dragkit {

// ---------------------------------------------------------------------------
// MaskGrid

MaskGrid MaskGrid::full(int height, int width) {
  MaskGrid m;
  m.height_ = height;
  m.width_ = width;
  m.cells_.assign(static_cast<std::size_t>(height) * width, 1);
  return m;
}

MaskGrid MaskGrid::from_rects(int height, int width, const std::vector<Rect>& rects) {
  MaskGrid m;
  m.height_ = height;
  m.width_ = width;
  m.cells_.assign(static_cast<std::size_t>(height) * width, 0);
  for (const Rect& r : rects) {
    for (int y = std::max(0, r.y0); y <= std::min(height - 1, r.y1); ++y) {
      for (int x = std::max(0, r.x0); x <= std::min(width - 1, r.x1); ++x) {
        m.cells_[static_cast<std::size_t>(y) * width + x] = 1;
      }
    }
  }
  return m;
}

bool MaskGrid::all_editable() const {
  return std::all_of(cells_.begin(), cells_.end(), [](unsigned char c) { return c != 0; });
}

std::size_t MaskGrid::preserved_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 0));
}

// ---------------------------------------------------------------------------
// Geometry helpers

std::vector<Cell> disk_offsets(double radius) {
  std::vector<Cell> out;
  const int r = static_cast<int>(std::ceil(radius));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (std::hypot(dx, dy) < radius) out.push_back({dx, dy});
    }
  }
  return out;
}

std::vector<Cell> disk_patch(Cell center, double radius, int field_height, int field_width) {
  std::vector<Cell> out;
  for (Cell o : disk_offsets(radius)) {
    const Cell q{center.x + o.x, center.y + o.y};
    if (q.x >= 0 && q.y >= 0 && q.x < field_width && q.y < field_height) out.push_back(q);
  }
  return out;
}

std::optional<Vec2> deviation_vector(Vec2 p, Vec2 t) {
  const Vec2 delta = t - p;
  const double n = delta.norm();
  if (n == 0.0) return std::nullopt;
  return Vec2{delta.x / n, delta.y / n};
}

std::string_view to_string(Gate gate) { return gate == Gate::L1 ? "L1" : "L2"; }

Gate gate_from_string(std::string_view text) {
  if (text == "L1") return Gate::L1;
  if (text == "L2") return Gate::L2;
  throw Error("unknown gate '" + std::string(text) + "'");
}

Gate select_loss(std::optional<double> s_i, std::optional<double> s_1, double tau) {
  if (!s_i || !s_1) return Gate::L1;
  return *s_i > tau * *s_1 ? Gate::L1 : Gate::L2;
}

// ---------------------------------------------------------------------------
// SupervisionConfig

std::vector<std::string> SupervisionConfig::violations() const {
  std::vector<std::string> out;
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(eta >= 0.0) || !std::isfinite(eta)) out.push_back("config.eta: must be >= 0");
  if (!unit(tau)) out.push_back("config.tau: must lie in [0, 1]");
  if (!unit(lambda)) out.push_back("config.lambda: must lie in [0, 1]");
  if (!(r1 > 0.0)) out.push_back("config.r1: must be > 0");
  if (r2 < 2) out.push_back("config.r2: must be >= 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) out.push_back("config.lr: must be > 0");
  if (!(adam_epsilon > 0.0) || !std::isfinite(adam_epsilon)) out.push_back("config.adam_epsilon: must be > 0");
  if (max_steps < 0) out.push_back("config.max_steps: must be >= 0");
  if (!(convergence_radius >= 0.0)) out.push_back("config.convergence_radius: must be >= 0");
  if (tracker_iterations < 1) out.push_back("config.tracker_iterations: must be >= 1");
  if (!(tracker_step_size > 0.0)) out.push_back("config.tracker_step_size: must be > 0");
  if (sigma_label && !(*sigma_label > 0.0)) out.push_back("config.sigma_label: must be > 0");
  return out;
}

void SupervisionConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ValidationError(std::move(v));
}

// ---------------------------------------------------------------------------
// Loss terms

ad::Tensor mask_term(const ad::Tensor& field, const ad::Tensor& initial_field, const MaskGrid& mask, double eta) {
  if (field.shape() != initial_field.shape() || field.rank() != 3) {
    throw ShapeError("mask_term: field shapes differ");
  }
  const std::size_t C = field.dim(0), H = field.dim(1), W = field.dim(2);
  if (static_cast<std::size_t>(mask.height()) != H || static_cast<std::size_t>(mask.width()) != W) {
    throw ShapeError("mask_term: mask does not match the field");
  }
  if (eta == 0.0 || mask.all_editable()) return ad::Tensor::scalar(0.0);

  const std::size_t plane = H * W;
  const auto& keep = mask.cells();
  const auto fv = field.values(), f0 = initial_field.values();
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double* a = fv.data() + c * plane;
    const double* b = f0.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      if (!keep[i]) total += std::abs(a[i] - b[i]);
    }
  }
  return ad::make_op_result({}, {eta * total}, {field}, "mask_term",
                            [field, initial_field, keep, eta, C, plane](std::span<const double> g) {
                              auto* gf = ad::OpAccess::grad_of(field);
                              const auto& a = ad::OpAccess::value_of(field);
                              const auto& b = ad::OpAccess::value_of(initial_field);
                              const double scale = eta * g[0];
                              for (std::size_t c = 0; c < C; ++c) {
                                for (std::size_t i = 0; i < plane; ++i) {
                                  if (keep[i]) continue;
                                  const std::size_t k = c * plane + i;
                                  const double diff = a[k] - b[k];
                                  if (diff > 0.0) (*gf)[k] += scale;
                                  else if (diff < 0.0) (*gf)[k] -= scale;
                                }
                              }
                            });
}

namespace {

struct PatchPairs {
  std::vector<Cell> fixed;        // cells whose content is the reference
  std::vector<double> displaced;  // N×2 positions sampled bilinearly
};

PatchPairs supervision_pairs(Cell reference_center, Cell sample_center, Vec2 d, double r1, int H, int W) {
  PatchPairs pairs;
  for (Cell o : disk_offsets(r1)) {
    const Cell ref{reference_center.x + o.x, reference_center.y + o.y};
    const Cell cur{sample_center.x + o.x, sample_center.y + o.y};
    const double sx = cur.x + d.x, sy = cur.y + d.y;
    const bool ref_ok = ref.x >= 0 && ref.y >= 0 && ref.x < W && ref.y < H;
    const bool cur_ok = cur.x >= 0 && cur.y >= 0 && cur.x < W && cur.y < H;
    const bool sample_ok = sx >= 0.0 && sy >= 0.0 && sx <= W - 1.0 && sy <= H - 1.0;
    if (!(ref_ok && cur_ok && sample_ok)) continue;
    pairs.fixed.push_back(ref);
    pairs.displaced.push_back(sx);
    pairs.displaced.push_back(sy);
  }
  if (pairs.fixed.empty()) {
    std::ostringstream os;
    os << "supervision patch around " << sample_center << " lies entirely outside the field";
    throw DegeneratePatchError(os.str());
  }
  return pairs;
}

ad::Tensor point_term(const ad::Tensor& field, const ad::Tensor& reference_field, Cell reference_center,
                      const SupervisedPoint& point, double r1) {
  const auto d = deviation_vector(point.p.to_vec(), point.target);
  if (!d) return ad::Tensor::scalar(0.0);
  const int H = static_cast<int>(field.dim(1)), W = static_cast<int>(field.dim(2));
  PatchPairs pairs = supervision_pairs(reference_center, point.p, *d, r1, H, W);
  const std::size_t n = pairs.fixed.size();
  const ad::Tensor reference = ad::detach(ad::gather_cells(reference_field, pairs.fixed));
  const ad::Tensor moved = ad::bilinear_sample(field, ad::Tensor::constant({n, 2}, std::move(pairs.displaced)));
  return ad::l1_norm(ad::sub(reference, moved));
}

template <typename TermFn>
LossTerms assemble(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                   const MaskGrid& mask, double eta, TermFn term) {
  LossTerms out;
  ad::Tensor total = ad::Tensor::scalar(0.0);
  for (const SupervisedPoint& point : points) {
    if (!point.active) continue;
    total = ad::add(total, term(point));
  }
  out.point_term = total.item();
  const ad::Tensor m = mask_term(field, initial_field, mask, eta);
  out.mask_term = m.item();
  out.total = ad::add(total, m);
  return out;
}

}  // namespace

ad::Tensor dynamic_point_term(const ad::Tensor& field, const SupervisedPoint& point, double r1) {
  return point_term(field, field, point.p, point, r1);
}

ad::Tensor template_point_term(const ad::Tensor& field, const ad::Tensor& initial_field, const SupervisedPoint& point,
                               double r1) {
  return point_term(field, initial_field, point.p0, point, r1);
}

LossTerms loss_dynamic(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                       const MaskGrid& mask, double eta, double r1) {
  return assemble(field, initial_field, points, mask, eta,
                  [&](const SupervisedPoint& p) { return dynamic_point_term(field, p, r1); });
}

LossTerms loss_template(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                        const MaskGrid& mask, double eta, double r1) {
  return assemble(field, initial_field, points, mask, eta,
                  [&](const SupervisedPoint& p) { return template_point_term(field, initial_field, p, r1); });
}

LossTerms loss_gated(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                     const MaskGrid& mask, double eta, double r1) {
  return assemble(field, initial_field, points, mask, eta, [&](const SupervisedPoint& p) {
    return p.gate == Gate::L1 ? dynamic_point_term(field, p, r1) : template_point_term(field, initial_field, p, r1);
  });
}

// ---------------------------------------------------------------------------
// Optimizer

void Adam::step(std::vector<double>& params, std::span<const double> grads) {
  if (grads.size() != params.size()) throw ShapeError("Adam::step: gradient size mismatch");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

SupervisionResult supervision_step(const FieldGenerator& generator, LatentCode& w, Adam& optimizer,
                                   const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                                   const MaskGrid& mask, const SupervisionConfig& config) {
  ad::Tape tape;
  const ad::Tensor wv = tape.variable({w.values().size()}, w.values());
  const ad::Tensor field = generator.generate(wv);
  const LossTerms terms = loss_gated(field, initial_field, points, mask, config.eta, config.r1);

  SupervisionResult result{terms.total.item(), terms.point_term, terms.mask_term};
  if (!std::isfinite(result.loss)) throw NumericError("supervision loss is not finite");

  std::vector<double> grad(w.values().size(), 0.0);
  if (terms.total.requires_grad()) {
    tape.backward(terms.total);
    const auto g = wv.grad();
    if (!g.empty()) grad.assign(g.begin(), g.end());
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("supervision gradient is not finite");
  }
  optimizer.step(w.values(), grad);
  return result;
}

}  // namespace dragkit
