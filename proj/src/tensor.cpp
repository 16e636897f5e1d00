#include "dragkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dragkit/errors.hpp"

namespace dragkit::ad {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

struct Op {
  std::shared_ptr<Node> output;
  std::function<void(std::span<const double>)> backward;
};

struct TapeState {
  std::vector<std::shared_ptr<Node>> leaves;
  std::vector<Op> ops;
};

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

}  // namespace detail

namespace {

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> values) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor of shape " + shape_string(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return node;
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + what);
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Fn>
std::vector<double> map_values(const Tensor& a, Fn fn) {
  std::vector<double> out(a.numel());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : node_(make_node({}, {0.0})) {}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  require_finite(values, "constant");
  return Tensor(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = ad::numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->value.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw ShapeError("axis out of range for " + shape_string(shape()));
  return shape()[axis];
}

std::span<const double> Tensor::values() const { return node_->value; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

double Tensor::operator[](std::size_t flat_index) const { return node_->value.at(flat_index); }

bool Tensor::requires_grad() const { return node_->requires_grad; }

std::span<const double> Tensor::grad() const { return node_->grad; }

Tensor Tensor::detached() const { return Tensor(make_node(shape(), node_->value)); }

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() : state_(std::make_shared<detail::TapeState>()) {}

Tensor Tape::variable(Shape shape, std::vector<double> values) {
  require_finite(values, "variable");
  auto node = make_node(std::move(shape), std::move(values));
  node->requires_grad = true;
  node->tape = state_;
  state_->leaves.push_back(node);
  return Tensor(node);
}

std::size_t Tape::size() const { return state_->ops.size(); }

void Tape::backward(const Tensor& root) {
  if (root.numel() != 1) throw ShapeError("backward() needs a scalar root, got " + shape_string(root.shape()));
  if (!root.requires_grad() || root.node_->tape.lock() != state_) {
    throw Error("backward() root was not recorded on this tape");
  }
  for (auto& leaf : state_->leaves) leaf->grad.clear();
  for (auto& op : state_->ops) op.output->grad.clear();

  root.node_->grad_buffer()[0] = 1.0;
  for (auto it = state_->ops.rbegin(); it != state_->ops.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward(it->output->grad);
  }
  for (auto& leaf : state_->leaves) require_finite(leaf->grad, "backward pass");
}

std::vector<double>* OpAccess::grad_of(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  return &t.node_->grad_buffer();
}

const std::vector<double>& OpAccess::value_of(const Tensor& t) { return t.node_->value; }

Tensor make_op_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                      const char* op_name, std::function<void(std::span<const double>)> backward) {
  require_finite(values, op_name);
  auto node = make_node(std::move(shape), std::move(values));

  std::shared_ptr<detail::TapeState> tape;
  for (const auto& in : inputs) {
    if (!in.requires_grad()) continue;
    auto t = in.node_->tape.lock();
    if (!t) throw Error(std::string(op_name) + ": input belongs to a tape that no longer exists");
    if (tape && tape != t) throw Error(std::string(op_name) + ": inputs recorded on different tapes");
    tape = t;
  }
  if (tape) {
    node->requires_grad = true;
    node->tape = tape;
    tape->ops.push_back({node, std::move(backward)});
  }
  return Tensor(node);
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "add", [a, b](std::span<const double> g) {
    for (const Tensor* t : {&a, &b}) {
      if (auto* gt = OpAccess::grad_of(*t)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gt)[i] += g[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "sub", [a, b](std::span<const double> g) {
    if (auto* ga = OpAccess::grad_of(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (auto* gb = OpAccess::grad_of(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "mul", [a, b](std::span<const double> g) {
    const auto& av = OpAccess::value_of(a);
    const auto& bv = OpAccess::value_of(b);
    if (auto* ga = OpAccess::grad_of(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (auto* gb = OpAccess::grad_of(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Tensor add(const Tensor& a, double b) {
  return make_op_result(a.shape(), map_values(a, [b](double v) { return v + b; }), {a}, "add_scalar",
                        [a](std::span<const double> g) {
                          auto* ga = OpAccess::grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
                        });
}

Tensor mul(const Tensor& a, double b) {
  return make_op_result(a.shape(), map_values(a, [b](double v) { return v * b; }), {a}, "mul_scalar",
                        [a, b](std::span<const double> g) {
                          auto* ga = OpAccess::grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b;
                        });
}

Tensor neg(const Tensor& a) {
  return make_op_result(a.shape(), map_values(a, [](double v) { return -v; }), {a}, "neg",
                        [a](std::span<const double> g) {
                          auto* ga = OpAccess::grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] -= g[i];
                        });
}

Tensor exp(const Tensor& a) {
  auto out = map_values(a, [](double v) { return std::exp(v); });
  auto result_values = out;
  return make_op_result(a.shape(), std::move(out), {a}, "exp",
                        [a, e = std::move(result_values)](std::span<const double> g) {
                          auto* ga = OpAccess::grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * e[i];
                        });
}

Tensor square(const Tensor& a) {
  return make_op_result(a.shape(), map_values(a, [](double v) { return v * v; }), {a}, "square",
                        [a](std::span<const double> g) {
                          const auto& av = OpAccess::value_of(a);
                          auto* ga = OpAccess::grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += 2.0 * av[i] * g[i];
                        });
}

Tensor abs(const Tensor& a) {
  return make_op_result(a.shape(), map_values(a, [](double v) { return std::abs(v); }), {a}, "abs",
                        [a](std::span<const double> g) {
                          const auto& av = OpAccess::value_of(a);
                          auto* ga = OpAccess::grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += sign(av[i]) * g[i];
                        });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  auto v = a.values();
  double total = std::accumulate(v.begin(), v.end(), 0.0);
  return make_op_result({}, {total}, {a}, "sum", [a](std::span<const double> g) {
    auto* ga = OpAccess::grad_of(a);
    for (double& x : *ga) x += g[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
  return mul(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor l1_norm(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += std::abs(v);
  return make_op_result({}, {total}, {a}, "l1_norm", [a](std::span<const double> g) {
    const auto& av = OpAccess::value_of(a);
    auto* ga = OpAccess::grad_of(a);
    for (std::size_t i = 0; i < av.size(); ++i) (*ga)[i] += sign(av[i]) * g[0];
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  auto av = a.values(), bv = b.values();
  double total = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i] * bv[i];
  return make_op_result({}, {total}, {a, b}, "dot", [a, b](std::span<const double> g) {
    const auto& av = OpAccess::value_of(a);
    const auto& bv = OpAccess::value_of(b);
    if (auto* ga = OpAccess::grad_of(a)) {
      for (std::size_t i = 0; i < av.size(); ++i) (*ga)[i] += g[0] * bv[i];
    }
    if (auto* gb = OpAccess::grad_of(b)) {
      for (std::size_t i = 0; i < av.size(); ++i) (*gb)[i] += g[0] * av[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Structural

Tensor detach(const Tensor& a) { return a.detached(); }

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw ShapeError("cannot reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> values(a.values().begin(), a.values().end());
  return make_op_result(std::move(shape), std::move(values), {a}, "reshape", [a](std::span<const double> g) {
    auto* ga = OpAccess::grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

namespace {

struct FieldDims {
  std::size_t c, h, w;
};

FieldDims field_dims(const Tensor& field, const char* op) {
  if (field.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected C×H×W field, got " + shape_string(field.shape()));
  }
  return {field.dim(0), field.dim(1), field.dim(2)};
}

}  // namespace

Tensor gather_cells(const Tensor& field, std::span<const Cell> cells) {
  const auto [C, H, W] = field_dims(field, "gather_cells");
  const std::size_t plane = H * W;
  std::vector<std::size_t> offsets;
  offsets.reserve(cells.size());
  for (const Cell& cell : cells) {
    if (cell.x < 0 || cell.y < 0 || static_cast<std::size_t>(cell.x) >= W ||
        static_cast<std::size_t>(cell.y) >= H) {
      std::ostringstream os;
      os << "gather_cells: cell " << cell << " outside " << W << "x" << H << " field";
      throw BoundsError(os.str());
    }
    offsets.push_back(static_cast<std::size_t>(cell.y) * W + static_cast<std::size_t>(cell.x));
  }
  const auto fv = field.values();
  std::vector<double> out(offsets.size() * C);
  for (std::size_t n = 0; n < offsets.size(); ++n) {
    for (std::size_t c = 0; c < C; ++c) out[n * C + c] = fv[c * plane + offsets[n]];
  }
  return make_op_result({offsets.size(), C}, std::move(out), {field}, "gather_cells",
                        [field, offsets, C, plane](std::span<const double> g) {
                          auto* gf = OpAccess::grad_of(field);
                          for (std::size_t n = 0; n < offsets.size(); ++n) {
                            for (std::size_t c = 0; c < C; ++c) (*gf)[c * plane + offsets[n]] += g[n * C + c];
                          }
                        });
}

namespace {

struct BilinearCorner {
  std::size_t x0, x1, y0, y1;
  double fx, fy;
};

BilinearCorner bilinear_corner(double x, double y, std::size_t H, std::size_t W) {
  if (!(x >= 0.0 && y >= 0.0 && x <= static_cast<double>(W - 1) && y <= static_cast<double>(H - 1))) {
    std::ostringstream os;
    os << "bilinear_sample: position (" << x << ", " << y << ") outside " << W << "x" << H << " field";
    throw BoundsError(os.str());
  }
  auto axis = [](double v, std::size_t extent, std::size_t& i0, std::size_t& i1, double& frac) {
    if (extent == 1) {
      i0 = i1 = 0;
      frac = 0.0;
      return;
    }
    i0 = std::min(static_cast<std::size_t>(std::floor(v)), extent - 2);
    i1 = i0 + 1;
    frac = v - static_cast<double>(i0);
  };
  BilinearCorner k{};
  axis(x, W, k.x0, k.x1, k.fx);
  axis(y, H, k.y0, k.y1, k.fy);
  return k;
}

}  // namespace

Tensor bilinear_sample(const Tensor& field, const Tensor& pos) {
  const auto [C, H, W] = field_dims(field, "bilinear_sample");
  const bool single = pos.shape() == Shape{2};
  if (!single && !(pos.rank() == 2 && pos.dim(1) == 2)) {
    throw ShapeError("bilinear_sample: positions must be {2} or {N,2}, got " + shape_string(pos.shape()));
  }
  const std::size_t N = single ? 1 : pos.dim(0);
  const std::size_t plane = H * W;
  const auto fv = field.values();
  const auto pv = pos.values();

  std::vector<BilinearCorner> corners;
  corners.reserve(N);
  std::vector<double> out(N * C);
  for (std::size_t n = 0; n < N; ++n) {
    const BilinearCorner k = bilinear_corner(pv[2 * n], pv[2 * n + 1], H, W);
    corners.push_back(k);
    const double w00 = (1.0 - k.fx) * (1.0 - k.fy), w01 = k.fx * (1.0 - k.fy);
    const double w10 = (1.0 - k.fx) * k.fy, w11 = k.fx * k.fy;
    for (std::size_t c = 0; c < C; ++c) {
      const double* p = fv.data() + c * plane;
      out[n * C + c] = w00 * p[k.y0 * W + k.x0] + w01 * p[k.y0 * W + k.x1] + w10 * p[k.y1 * W + k.x0] +
                       w11 * p[k.y1 * W + k.x1];
    }
  }

  Shape out_shape = single ? Shape{C} : Shape{N, C};
  return make_op_result(
      std::move(out_shape), std::move(out), {field, pos}, "bilinear_sample",
      [field, pos, corners, C, W, plane](std::span<const double> g) {
        auto* gf = OpAccess::grad_of(field);
        auto* gp = OpAccess::grad_of(pos);
        const auto& fv = OpAccess::value_of(field);
        for (std::size_t n = 0; n < corners.size(); ++n) {
          const BilinearCorner& k = corners[n];
          const std::size_t i00 = k.y0 * W + k.x0, i01 = k.y0 * W + k.x1;
          const std::size_t i10 = k.y1 * W + k.x0, i11 = k.y1 * W + k.x1;
          const double w00 = (1.0 - k.fx) * (1.0 - k.fy), w01 = k.fx * (1.0 - k.fy);
          const double w10 = (1.0 - k.fx) * k.fy, w11 = k.fx * k.fy;
          double dx = 0.0, dy = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            const double gc = g[n * C + c];
            if (gc == 0.0) continue;
            if (gf) {
              double* q = gf->data() + c * plane;
              q[i00] += w00 * gc;
              q[i01] += w01 * gc;
              q[i10] += w10 * gc;
              q[i11] += w11 * gc;
            }
            if (gp) {
              const double* p = fv.data() + c * plane;
              dx += gc * ((1.0 - k.fy) * (p[i01] - p[i00]) + k.fy * (p[i11] - p[i10]));
              dy += gc * ((1.0 - k.fx) * (p[i10] - p[i00]) + k.fx * (p[i11] - p[i01]));
            }
          }
          if (gp) {
            (*gp)[2 * n] += dx;
            (*gp)[2 * n + 1] += dy;
          }
        }
      });
}

Tensor bilinear_sample(const Tensor& field, Vec2 pos) {
  return bilinear_sample(field, Tensor::constant({2}, {pos.x, pos.y}));
}

Tensor channel_dot(const Tensor& field, const Tensor& filter) {
  const auto [C, H, W] = field_dims(field, "channel_dot");
  if (filter.shape() != Shape{C}) {
    throw ShapeError("channel_dot: filter " + shape_string(filter.shape()) + " does not match " +
                     std::to_string(C) + " channels");
  }
  const std::size_t plane = H * W;
  const auto fv = field.values();
  const auto zv = filter.values();
  std::vector<double> out(plane, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double zc = zv[c];
    const double* p = fv.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) out[i] += zc * p[i];
  }
  return make_op_result({H, W}, std::move(out), {field, filter}, "channel_dot",
                        [field, filter, C, plane](std::span<const double> g) {
                          const auto& fv = OpAccess::value_of(field);
                          const auto& zv = OpAccess::value_of(filter);
                          if (auto* gf = OpAccess::grad_of(field)) {
                            for (std::size_t c = 0; c < C; ++c) {
                              double* q = gf->data() + c * plane;
                              for (std::size_t i = 0; i < plane; ++i) q[i] += g[i] * zv[c];
                            }
                          }
                          if (auto* gz = OpAccess::grad_of(filter)) {
                            for (std::size_t c = 0; c < C; ++c) {
                              const double* p = fv.data() + c * plane;
                              double acc = 0.0;
                              for (std::size_t i = 0; i < plane; ++i) acc += g[i] * p[i];
                              (*gz)[c] += acc;
                            }
                          }
                        });
}

// ---------------------------------------------------------------------------
// Gradient check

double finite_difference_check(const ScalarFunction& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw Error("finite_difference_check: eps must be positive");
  std::vector<double> base(x.values().begin(), x.values().end());

  Tape tape;
  Tensor var = tape.variable(x.shape(), base);
  Tensor y = f(var);
  if (y.numel() != 1) throw ShapeError("finite_difference_check: f must return a scalar");
  std::vector<double> analytic(base.size(), 0.0);
  if (y.requires_grad()) {
    tape.backward(y);
    auto g = var.grad();
    if (!g.empty()) analytic.assign(g.begin(), g.end());
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> plus = base, minus = base;
    plus[i] += eps;
    minus[i] -= eps;
    const double fp = f(Tensor::constant(x.shape(), std::move(plus))).item();
    const double fm = f(Tensor::constant(x.shape(), std::move(minus))).item();
    const double numeric = (fp - fm) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace dragkit::ad
