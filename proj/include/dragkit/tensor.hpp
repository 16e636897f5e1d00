#pragma once

// Dense float64 tensors with tape-based reverse-mode differentiation.
//
// A Tape owns the ordered list of operations recorded while computing a
// value. Leaves created through Tape::variable() require gradients; every op
// whose inputs require gradients is appended to the tape of those inputs and
// its output requires gradients too. Tensors built without a tape are
// constants and never record anything.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dragkit/geometry.hpp"

namespace dragkit::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct TapeState;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::weak_ptr<TapeState> tape;

  std::vector<double>& grad_buffer();
};
}  // namespace detail

class Tape;

class Tensor {
 public:
  /// Empty rank-0 constant holding 0.
  Tensor();

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double value);

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> values() const;
  double item() const;
  double operator[](std::size_t flat_index) const;

  bool requires_grad() const;
  /// Gradient accumulated by the last backward pass; empty when none reached it.
  std::span<const double> grad() const;

  /// Same values, no gradient history.
  Tensor detached() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  friend class Tape;
  friend Tensor make_op_result(Shape, std::vector<double>, const std::vector<Tensor>&,
                               const char*,
                               std::function<void(std::span<const double>)>);
  friend struct OpAccess;

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of differentiable operations.
class Tape {
 public:
  Tape();

  /// Leaf whose gradient is wanted.
  Tensor variable(Shape shape, std::vector<double> values);

  /// Reverse sweep seeded with d(root)/d(root) = 1. Root must be a scalar on this tape.
  /// Gradients of all nodes are reset first, so calling twice gives the same result.
  void backward(const Tensor& root);

  std::size_t size() const;

 private:
  std::shared_ptr<detail::TapeState> state_;
};

/// Mutable access to the gradient slot of an op input; used by backward rules.
struct OpAccess {
  static std::vector<double>* grad_of(const Tensor& t);
  static const std::vector<double>& value_of(const Tensor& t);
};

/// Builds an op output. When any input requires gradients, the op is appended to
/// their tape and `backward` is invoked during the reverse sweep with the output
/// gradient; it must accumulate into inputs via OpAccess::grad_of. The output is
/// checked for non-finite values (NumericError naming `op_name`).
Tensor make_op_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                      const char* op_name,
                      std::function<void(std::span<const double>)> backward);

// Elementwise arithmetic. Tensor/tensor forms require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor mul(const Tensor& a, double b);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);

// Reductions to a scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum of absolute values; subgradient at 0 is 0.
Tensor l1_norm(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor detach(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

/// Rows of a C×H×W field at integer cells, as an N×C tensor.
Tensor gather_cells(const Tensor& field, std::span<const Cell> cells);

/// Bilinear sample of a C×H×W field. `pos` is either shape {2} holding (x, y),
/// giving a {C} result, or shape {N, 2}, giving {N, C}. x indexes width, y height.
/// Differentiable with respect to both the field and the positions. Positions
/// outside [0, W−1]×[0, H−1] raise BoundsError.
Tensor bilinear_sample(const Tensor& field, const Tensor& pos);
Tensor bilinear_sample(const Tensor& field, Vec2 pos);

/// Per-position inner product of a C×H×W field with a C-vector filter: an H×W map.
Tensor channel_dot(const Tensor& field, const Tensor& filter);

/// Scalar-valued function of one tensor, used by the gradient checker.
using ScalarFunction = std::function<Tensor(const Tensor&)>;

/// Central-difference check of the analytic gradient of `f` at `x`. Returns the
/// largest per-coordinate relative error, with denominator
/// max(|analytic|, |numeric|, 1e−8).
double finite_difference_check(const ScalarFunction& f, const Tensor& x, double eps);

}  // namespace dragkit::ad
