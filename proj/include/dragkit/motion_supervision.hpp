#pragma once

// Motion supervision: the dynamic loss (current content around the handle is
// pushed one pixel along the drag direction), the template loss (initial
// content is the target instead), the confidence gate choosing between them,
// and the Adam update of the latent code.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dragkit/feature_field.hpp"
#include "dragkit/geometry.hpp"
#include "dragkit/tensor.hpp"

namespace dragkit {

/// Editable-region mask: 1 marks pixels that may change freely.
class MaskGrid {
 public:
  struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
    friend bool operator==(const Rect&, const Rect&) = default;
  };

  MaskGrid() = default;
  static MaskGrid full(int height, int width);
  /// Union of rectangles, clipped to the grid.
  static MaskGrid from_rects(int height, int width, const std::vector<Rect>& rects);

  int height() const { return height_; }
  int width() const { return width_; }
  bool editable(int x, int y) const { return cells_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  bool all_editable() const;
  std::size_t preserved_count() const;
  const std::vector<unsigned char>& cells() const { return cells_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<unsigned char> cells_;
};

/// Integer offsets with Euclidean length < radius, row-major order.
std::vector<Cell> disk_offsets(double radius);

/// Θ(p): the integer pixels of the disk around `center` that lie inside the field.
std::vector<Cell> disk_patch(Cell center, double radius, int field_height, int field_width);

struct SupervisionConfig {
  double eta = 20.0;
  double tau = 0.4;
  double lambda = 0.3;
  double r1 = 3.0;
  int r2 = 12;
  double lr = 0.01;
  double adam_epsilon = 1e-8;
  int max_steps = 100;
  double convergence_radius = 1.0;
  // Tracker regression, run once before the first step.
  int tracker_iterations = 1000;
  double tracker_step_size = 0.01;
  std::optional<double> sigma_label;  // defaults to r2 / 6

  double effective_sigma_label() const { return sigma_label.value_or(r2 / 6.0); }
  std::vector<std::string> violations() const;
  void validate() const;

  friend bool operator==(const SupervisionConfig&, const SupervisionConfig&) = default;
};

/// d = (t − p)/‖t − p‖; nullopt when p == t, meaning the point has arrived.
std::optional<Vec2> deviation_vector(Vec2 p, Vec2 t);

enum class Gate { L1, L2 };
std::string_view to_string(Gate gate);
Gate gate_from_string(std::string_view text);

/// L1 iff s_i > τ·s_1; the boundary goes to L2. Before a first score exists the
/// gate is L1 unconditionally.
Gate select_loss(std::optional<double> s_i, std::optional<double> s_1, double tau);

/// Per-point input to the supervision losses.
struct SupervisedPoint {
  Cell p0;        // initial handle
  Cell p;         // current handle
  Vec2 target;
  bool active = true;  // false once converged
  Gate gate = Gate::L1;
};

struct LossTerms {
  ad::Tensor total;
  double point_term = 0.0;
  double mask_term = 0.0;
};

/// η·Σ_c Σ_{M=0} |F − F0|; gradient ±η at preserved pixels.
ad::Tensor mask_term(const ad::Tensor& field, const ad::Tensor& initial_field, const MaskGrid& mask, double eta);

/// Σ_{q∈Θ(p)} ‖detach(F(q)) − F(q + d)‖₁ for one point.
ad::Tensor dynamic_point_term(const ad::Tensor& field, const SupervisedPoint& point, double r1);
/// Σ_{q∈Θ(p0)} ‖F0(q) − F(q − p0 + p + d)‖₁ for one point; the template side is constant.
ad::Tensor template_point_term(const ad::Tensor& field, const ad::Tensor& initial_field, const SupervisedPoint& point,
                               double r1);

/// Dynamic loss L1 over all active points plus the mask term.
LossTerms loss_dynamic(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                       const MaskGrid& mask, double eta, double r1);
/// Template loss L2 over all active points plus the mask term.
LossTerms loss_template(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                        const MaskGrid& mask, double eta, double r1);
/// Each active point contributes the term selected by its own gate.
LossTerms loss_gated(const ad::Tensor& field, const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                     const MaskGrid& mask, double eta, double r1);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(std::vector<double>& params, std::span<const double> grads);
  int iterations() const { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

struct SupervisionResult {
  double loss = 0.0;  // before the update
  double point_term = 0.0;
  double mask_term = 0.0;
};

/// One Adam step on the latent code minimizing the gated loss. Throws
/// NumericError if the loss or its gradient is not finite.
SupervisionResult supervision_step(const FieldGenerator& generator, LatentCode& w, Adam& optimizer,
                                   const ad::Tensor& initial_field, const std::vector<SupervisedPoint>& points,
                                   const MaskGrid& mask, const SupervisionConfig& config);

}  // namespace dragkit
