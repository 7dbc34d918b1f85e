#include "clslu/tensor.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

namespace clslu {

namespace {

std::atomic<uint64_t> g_next_graph_id{1};

using detail::TensorData;
using TD = std::shared_ptr<TensorData>;

std::vector<double>& grad_buf(TensorData& t) {
  if (t.grad.empty()) t.grad.assign(t.values.size(), 0.0);
  return t.grad;
}

// Output gradient of a node, or nullptr when the node was never reached
// from the root (its contribution is identically zero).
const std::vector<double>* out_grad(const TensorData& t) {
  return t.grad.empty() ? nullptr : &t.grad;
}

}  // namespace

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '{';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << '}';
  return os.str();
}

ShapeError::ShapeError(const std::string& op, const Shape& a, const Shape& b)
    : Error(op + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b)) {}

ShapeError::ShapeError(const std::string& op, const std::string& detail)
    : Error(op + ": " + detail) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto d = std::make_shared<TensorData>();
  d->values.assign(static_cast<size_t>(numel(shape)), 0.0);
  d->shape = std::move(shape);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.d_->values) v = value;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != static_cast<int64_t>(values.size()))
    throw ShapeError("Tensor::from", "value count " + std::to_string(values.size()) +
                                         " does not match shape " + shape_str(shape));
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->values = std::move(values);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

double Tensor::item() const {
  if (d_->values.size() != 1)
    throw ShapeError("Tensor::item", "tensor " + shape_str(d_->shape) + " is not a scalar");
  return d_->values[0];
}

Tensor xavier_uniform(const Shape& shape, Rng& rng) {
  double fan_in = 1.0, fan_out = 1.0;
  if (shape.size() == 2) {
    fan_out = static_cast<double>(shape[0]);
    fan_in = static_cast<double>(shape[1]);
  } else if (shape.size() == 1) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = 1.0;
  }
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t = Tensor::zeros(shape, true);
  for (auto& v : t.mutable_values()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return t;
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

Graph::Graph() : id_(g_next_graph_id.fetch_add(1)) {}

Tensor Graph::make(Shape shape, bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  if (requires_grad) t.d_->graph_id = id_;
  return t;
}

void Graph::check_operand(const char* op, const Tensor& t) const {
  if (!t.defined()) throw Error(std::string(op) + ": undefined tensor operand");
  if (t.d_->graph_id != 0 && t.d_->graph_id != id_)
    throw Error(std::string(op) + ": operand belongs to a different graph");
}

void Graph::reset() {
  tape_.clear();
  backward_done_ = false;
}

void Graph::backward(const Tensor& root) {
  if (!root.defined()) throw Error("backward: undefined root");
  if (root.size() != 1)
    throw ShapeError("backward", "root has shape " + shape_str(root.shape()) +
                                     ", expected a scalar");
  if (root.d_->graph_id == 0)
    throw Error("backward: root is detached (not produced by any graph)");
  if (root.d_->graph_id != id_)
    throw Error("backward: root was produced by a different graph");
  if (backward_done_)
    throw Error("backward: gradients already propagated on this graph; reset() first");
  grad_buf(*root.d_)[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)->backward();
  backward_done_ = true;
}

// ---------------------------------------------------------------------------
// Op nodes
// ---------------------------------------------------------------------------

namespace {

struct AddNode final : detail::OpNode {
  TD a, b, out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    if (a->requires_grad) {
      auto& ga = grad_buf(*a);
      for (size_t i = 0; i < g->size(); ++i) ga[i] += (*g)[i];
    }
    if (b->requires_grad) {
      auto& gb = grad_buf(*b);
      for (size_t i = 0; i < g->size(); ++i) gb[i] += (*g)[i];
    }
  }
};

struct MulNode final : detail::OpNode {
  TD a, b, out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    if (a->requires_grad) {
      auto& ga = grad_buf(*a);
      for (size_t i = 0; i < g->size(); ++i) ga[i] += (*g)[i] * b->values[i];
    }
    if (b->requires_grad) {
      auto& gb = grad_buf(*b);
      for (size_t i = 0; i < g->size(); ++i) gb[i] += (*g)[i] * a->values[i];
    }
  }
};

struct ScaleNode final : detail::OpNode {
  TD x, out;
  double c;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !x->requires_grad) return;
    auto& gx = grad_buf(*x);
    for (size_t i = 0; i < g->size(); ++i) gx[i] += (*g)[i] * c;
  }
};

struct UnaryNode final : detail::OpNode {
  TD x, out;
  double (*dfdy)(double y, double x);
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !x->requires_grad) return;
    auto& gx = grad_buf(*x);
    for (size_t i = 0; i < g->size(); ++i)
      gx[i] += (*g)[i] * dfdy(out->values[i], x->values[i]);
  }
};

struct MatmulNode final : detail::OpNode {
  TD a, b, out;
  int64_t m, k, n;  // always the 2-D view of the multiply
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    if (a->requires_grad) {
      auto& ga = grad_buf(*a);
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
          const double gij = (*g)[static_cast<size_t>(i * n + j)];
          if (gij == 0.0) continue;
          for (int64_t p = 0; p < k; ++p)
            ga[static_cast<size_t>(i * k + p)] += gij * b->values[static_cast<size_t>(p * n + j)];
        }
    }
    if (b->requires_grad) {
      auto& gb = grad_buf(*b);
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
          const double gij = (*g)[static_cast<size_t>(i * n + j)];
          if (gij == 0.0) continue;
          for (int64_t p = 0; p < k; ++p)
            gb[static_cast<size_t>(p * n + j)] += gij * a->values[static_cast<size_t>(i * k + p)];
        }
    }
  }
};

struct DotNode final : detail::OpNode {
  TD a, b, out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    const double gv = (*g)[0];
    if (a->requires_grad) {
      auto& ga = grad_buf(*a);
      for (size_t i = 0; i < a->values.size(); ++i) ga[i] += gv * b->values[i];
    }
    if (b->requires_grad) {
      auto& gb = grad_buf(*b);
      for (size_t i = 0; i < b->values.size(); ++i) gb[i] += gv * a->values[i];
    }
  }
};

struct ConcatNode final : detail::OpNode {
  std::vector<TD> parts;
  TD out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    size_t off = 0;
    for (auto& p : parts) {
      if (p->requires_grad) {
        auto& gp = grad_buf(*p);
        for (size_t i = 0; i < p->values.size(); ++i) gp[i] += (*g)[off + i];
      }
      off += p->values.size();
    }
  }
};

struct SliceNode final : detail::OpNode {
  TD x, out;
  int64_t start;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !x->requires_grad) return;
    auto& gx = grad_buf(*x);
    for (size_t i = 0; i < g->size(); ++i) gx[static_cast<size_t>(start) + i] += (*g)[i];
  }
};

struct RowNode final : detail::OpNode {
  TD m, out;
  int64_t r, cols;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !m->requires_grad) return;
    auto& gm = grad_buf(*m);
    const size_t base = static_cast<size_t>(r * cols);
    for (size_t i = 0; i < g->size(); ++i) gm[base + i] += (*g)[i];
  }
};

struct StackNode final : detail::OpNode {
  std::vector<TD> rows;
  TD out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    size_t off = 0;
    for (auto& r : rows) {
      if (r->requires_grad) {
        auto& gr = grad_buf(*r);
        for (size_t i = 0; i < r->values.size(); ++i) gr[i] += (*g)[off + i];
      }
      off += r->values.size();
    }
  }
};

struct SoftmaxNode final : detail::OpNode {
  TD x, out;
  int64_t rows, cols;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !x->requires_grad) return;
    auto& gx = grad_buf(*x);
    for (int64_t r = 0; r < rows; ++r) {
      const size_t base = static_cast<size_t>(r * cols);
      double gdotp = 0.0;
      for (int64_t j = 0; j < cols; ++j)
        gdotp += (*g)[base + static_cast<size_t>(j)] * out->values[base + static_cast<size_t>(j)];
      for (int64_t j = 0; j < cols; ++j) {
        const size_t i = base + static_cast<size_t>(j);
        gx[i] += out->values[i] * ((*g)[i] - gdotp);
      }
    }
  }
};

struct MeanNode final : detail::OpNode {
  TD x, out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !x->requires_grad) return;
    const double gv = (*g)[0] / static_cast<double>(x->values.size());
    auto& gx = grad_buf(*x);
    for (auto& v : gx) v += gv;
  }
};

struct MseNode final : detail::OpNode {
  TD a, b, out;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    const double gv = (*g)[0] * 2.0 / static_cast<double>(a->values.size());
    if (a->requires_grad) {
      auto& ga = grad_buf(*a);
      for (size_t i = 0; i < a->values.size(); ++i)
        ga[i] += gv * (a->values[i] - b->values[i]);
    }
    if (b->requires_grad) {
      auto& gb = grad_buf(*b);
      for (size_t i = 0; i < b->values.size(); ++i)
        gb[i] -= gv * (a->values[i] - b->values[i]);
    }
  }
};

struct NllNode final : detail::OpNode {
  TD p, out;
  int64_t target;
  double p_safe;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !p->requires_grad) return;
    // d(-log(max(p_t, eps)))/dp_t; zero once the guard is active.
    if (p->values[static_cast<size_t>(target)] > 1e-12)
      grad_buf(*p)[static_cast<size_t>(target)] -= (*g)[0] / p_safe;
  }
};

struct CosineNode final : detail::OpNode {
  TD a, b, out;
  double na, nb;  // cached norms, both nonzero
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    const double gv = (*g)[0];
    const double c = out->values[0];
    const double inv = 1.0 / (na * nb);
    if (a->requires_grad) {
      auto& ga = grad_buf(*a);
      for (size_t i = 0; i < a->values.size(); ++i)
        ga[i] += gv * (b->values[i] * inv - c * a->values[i] / (na * na));
    }
    if (b->requires_grad) {
      auto& gb = grad_buf(*b);
      for (size_t i = 0; i < b->values.size(); ++i)
        gb[i] += gv * (a->values[i] * inv - c * b->values[i] / (nb * nb));
    }
  }
};

struct DropoutNode final : detail::OpNode {
  TD x, out;
  std::vector<double> mask;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g || !x->requires_grad) return;
    auto& gx = grad_buf(*x);
    for (size_t i = 0; i < g->size(); ++i) gx[i] += (*g)[i] * mask[i];
  }
};

struct GaussianSampleNode final : detail::OpNode {
  TD mu, log_var, out;
  std::vector<double> sigma, eps;
  void backward() override {
    const auto* g = out_grad(*out);
    if (!g) return;
    if (mu->requires_grad) {
      auto& gm = grad_buf(*mu);
      for (size_t i = 0; i < g->size(); ++i) gm[i] += (*g)[i];
    }
    if (log_var->requires_grad) {
      auto& gl = grad_buf(*log_var);
      for (size_t i = 0; i < g->size(); ++i) {
        const double lv = log_var->values[i];
        if (lv > -30.0 && lv < 30.0)
          gl[i] += (*g)[i] * 0.5 * sigma[i] * eps[i];
      }
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Op construction
// ---------------------------------------------------------------------------

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  check_operand("add", a);
  check_operand("add", b);
  if (a.shape() != b.shape()) throw ShapeError("add", a.shape(), b.shape());
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make(a.shape(), rg);
  auto& ov = out.d_->values;
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = a.d_->values[i] + b.d_->values[i];
  if (rg) {
    auto node = std::make_unique<AddNode>();
    node->a = a.d_;
    node->b = b.d_;
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  check_operand("mul", a);
  check_operand("mul", b);
  if (a.shape() != b.shape()) throw ShapeError("mul", a.shape(), b.shape());
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make(a.shape(), rg);
  auto& ov = out.d_->values;
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = a.d_->values[i] * b.d_->values[i];
  if (rg) {
    auto node = std::make_unique<MulNode>();
    node->a = a.d_;
    node->b = b.d_;
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::scale(const Tensor& x, double c) {
  check_operand("scale", x);
  const bool rg = x.requires_grad();
  Tensor out = make(x.shape(), rg);
  auto& ov = out.d_->values;
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = x.d_->values[i] * c;
  if (rg) {
    auto node = std::make_unique<ScaleNode>();
    node->x = x.d_;
    node->out = out.d_;
    node->c = c;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  check_operand("matmul", a);
  check_operand("matmul", b);
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  int64_t m, k, n;
  Shape out_shape;
  if (sa.size() == 2 && sb.size() == 2) {
    m = sa[0], k = sa[1], n = sb[1];
    if (sb[0] != k) throw ShapeError("matmul", sa, sb);
    out_shape = {m, n};
  } else if (sa.size() == 2 && sb.size() == 1) {
    m = sa[0], k = sa[1], n = 1;
    if (sb[0] != k) throw ShapeError("matmul", sa, sb);
    out_shape = {m};
  } else if (sa.size() == 1 && sb.size() == 2) {
    m = 1, k = sa[0], n = sb[1];
    if (sb[0] != k) throw ShapeError("matmul", sa, sb);
    out_shape = {n};
  } else {
    throw ShapeError("matmul", sa, sb);
  }
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make(std::move(out_shape), rg);
  auto& ov = out.d_->values;
  const auto& av = a.d_->values;
  const auto& bv = b.d_->values;
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < k; ++p) {
      const double aip = av[static_cast<size_t>(i * k + p)];
      if (aip == 0.0) continue;
      for (int64_t j = 0; j < n; ++j)
        ov[static_cast<size_t>(i * n + j)] += aip * bv[static_cast<size_t>(p * n + j)];
    }
  if (rg) {
    auto node = std::make_unique<MatmulNode>();
    node->a = a.d_;
    node->b = b.d_;
    node->out = out.d_;
    node->m = m;
    node->k = k;
    node->n = n;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::dot(const Tensor& a, const Tensor& b) {
  check_operand("dot", a);
  check_operand("dot", b);
  if (a.shape().size() != 1 || a.shape() != b.shape())
    throw ShapeError("dot", a.shape(), b.shape());
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make({1}, rg);
  double s = 0.0;
  for (size_t i = 0; i < a.d_->values.size(); ++i) s += a.d_->values[i] * b.d_->values[i];
  out.d_->values[0] = s;
  if (rg) {
    auto node = std::make_unique<DotNode>();
    node->a = a.d_;
    node->b = b.d_;
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat", "no operands");
  int64_t total = 0;
  bool rg = false;
  for (const auto& p : parts) {
    check_operand("concat", p);
    if (p.shape().size() != 1)
      throw ShapeError("concat", "operand " + shape_str(p.shape()) + " is not 1-D");
    total += p.shape()[0];
    rg = rg || p.requires_grad();
  }
  Tensor out = make({total}, rg);
  size_t off = 0;
  for (const auto& p : parts) {
    for (size_t i = 0; i < p.d_->values.size(); ++i) out.d_->values[off + i] = p.d_->values[i];
    off += p.d_->values.size();
  }
  if (rg) {
    auto node = std::make_unique<ConcatNode>();
    for (const auto& p : parts) node->parts.push_back(p.d_);
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::slice(const Tensor& x, int64_t start, int64_t len) {
  check_operand("slice", x);
  if (x.shape().size() != 1)
    throw ShapeError("slice", "operand " + shape_str(x.shape()) + " is not 1-D");
  if (start < 0 || len <= 0 || start + len > x.shape()[0])
    throw ShapeError("slice", "range [" + std::to_string(start) + "," +
                                  std::to_string(start + len) + ") out of bounds for " +
                                  shape_str(x.shape()));
  const bool rg = x.requires_grad();
  Tensor out = make({len}, rg);
  for (int64_t i = 0; i < len; ++i)
    out.d_->values[static_cast<size_t>(i)] = x.d_->values[static_cast<size_t>(start + i)];
  if (rg) {
    auto node = std::make_unique<SliceNode>();
    node->x = x.d_;
    node->out = out.d_;
    node->start = start;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::row(const Tensor& m, int64_t r) {
  check_operand("row", m);
  if (m.shape().size() != 2)
    throw ShapeError("row", "operand " + shape_str(m.shape()) + " is not 2-D");
  if (r < 0 || r >= m.shape()[0])
    throw ShapeError("row", "row " + std::to_string(r) + " out of bounds for " +
                                shape_str(m.shape()));
  const int64_t cols = m.shape()[1];
  const bool rg = m.requires_grad();
  Tensor out = make({cols}, rg);
  const size_t base = static_cast<size_t>(r * cols);
  for (int64_t i = 0; i < cols; ++i)
    out.d_->values[static_cast<size_t>(i)] = m.d_->values[base + static_cast<size_t>(i)];
  if (rg) {
    auto node = std::make_unique<RowNode>();
    node->m = m.d_;
    node->out = out.d_;
    node->r = r;
    node->cols = cols;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::stack(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack", "no operands");
  const int64_t d = rows.front().shape().size() == 1 ? rows.front().shape()[0] : -1;
  bool rg = false;
  for (const auto& r : rows) {
    check_operand("stack", r);
    if (r.shape().size() != 1 || r.shape()[0] != d)
      throw ShapeError("stack", rows.front().shape(), r.shape());
    rg = rg || r.requires_grad();
  }
  Tensor out = make({static_cast<int64_t>(rows.size()), d}, rg);
  size_t off = 0;
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.d_->values.size(); ++i) out.d_->values[off + i] = r.d_->values[i];
    off += r.d_->values.size();
  }
  if (rg) {
    auto node = std::make_unique<StackNode>();
    for (const auto& r : rows) node->rows.push_back(r.d_);
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::unary_map(const char* name, const Tensor& x, double (*fwd)(double),
                        double (*dfdy)(double, double)) {
  check_operand(name, x);
  const bool rg = x.requires_grad();
  Tensor out = make(x.shape(), rg);
  for (size_t i = 0; i < out.d_->values.size(); ++i) out.d_->values[i] = fwd(x.d_->values[i]);
  if (rg) {
    auto node = std::make_unique<UnaryNode>();
    node->x = x.d_;
    node->out = out.d_;
    node->dfdy = dfdy;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::tanh(const Tensor& x) {
  return unary_map(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double y, double) { return 1.0 - y * y; });
}

Tensor Graph::sigmoid(const Tensor& x) {
  return unary_map(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor Graph::exp(const Tensor& x) {
  return unary_map(
      "exp", x, [](double v) { return std::exp(v); },
      [](double y, double) { return y; });
}

Tensor Graph::log(const Tensor& x) {
  return unary_map(
      "log", x, [](double v) { return std::log(v); },
      [](double, double v) { return 1.0 / v; });
}

Tensor Graph::softmax(const Tensor& x) {
  check_operand("softmax", x);
  const auto& s = x.shape();
  int64_t rows, cols;
  if (s.size() == 1) {
    rows = 1;
    cols = s[0];
  } else if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
  } else {
    throw ShapeError("softmax", "operand " + shape_str(s) + " is not 1-D or 2-D");
  }
  for (double v : x.d_->values)
    if (!std::isfinite(v)) throw Error("softmax: non-finite input");
  const bool rg = x.requires_grad();
  Tensor out = make(s, rg);
  for (int64_t r = 0; r < rows; ++r) {
    const size_t base = static_cast<size_t>(r * cols);
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < cols; ++j) mx = std::max(mx, x.d_->values[base + static_cast<size_t>(j)]);
    double sum = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      const double e = std::exp(x.d_->values[base + static_cast<size_t>(j)] - mx);
      out.d_->values[base + static_cast<size_t>(j)] = e;
      sum += e;
    }
    for (int64_t j = 0; j < cols; ++j) out.d_->values[base + static_cast<size_t>(j)] /= sum;
  }
  if (rg) {
    auto node = std::make_unique<SoftmaxNode>();
    node->x = x.d_;
    node->out = out.d_;
    node->rows = rows;
    node->cols = cols;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::mean(const Tensor& x) {
  check_operand("mean", x);
  const bool rg = x.requires_grad();
  Tensor out = make({1}, rg);
  double s = 0.0;
  for (double v : x.d_->values) s += v;
  out.d_->values[0] = s / static_cast<double>(x.d_->values.size());
  if (rg) {
    auto node = std::make_unique<MeanNode>();
    node->x = x.d_;
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::mse(const Tensor& a, const Tensor& b) {
  check_operand("mse", a);
  check_operand("mse", b);
  if (a.shape() != b.shape()) throw ShapeError("mse", a.shape(), b.shape());
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make({1}, rg);
  double s = 0.0;
  for (size_t i = 0; i < a.d_->values.size(); ++i) {
    const double d = a.d_->values[i] - b.d_->values[i];
    s += d * d;
  }
  out.d_->values[0] = s / static_cast<double>(a.d_->values.size());
  if (rg) {
    auto node = std::make_unique<MseNode>();
    node->a = a.d_;
    node->b = b.d_;
    node->out = out.d_;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::nll_onehot(const Tensor& p, int64_t target) {
  check_operand("nll_onehot", p);
  if (p.shape().size() != 1)
    throw ShapeError("nll_onehot", "operand " + shape_str(p.shape()) + " is not 1-D");
  if (target < 0 || target >= p.shape()[0])
    throw ShapeError("nll_onehot", "target " + std::to_string(target) +
                                       " out of bounds for " + shape_str(p.shape()));
  const bool rg = p.requires_grad();
  Tensor out = make({1}, rg);
  const double p_safe = std::max(p.d_->values[static_cast<size_t>(target)], 1e-12);
  out.d_->values[0] = -std::log(p_safe);
  if (rg) {
    auto node = std::make_unique<NllNode>();
    node->p = p.d_;
    node->out = out.d_;
    node->target = target;
    node->p_safe = p_safe;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::cosine(const Tensor& a, const Tensor& b) {
  check_operand("cosine", a);
  check_operand("cosine", b);
  if (a.shape().size() != 1 || a.shape() != b.shape())
    throw ShapeError("cosine", a.shape(), b.shape());
  double sa = 0.0, sb = 0.0, d = 0.0;
  for (size_t i = 0; i < a.d_->values.size(); ++i) {
    sa += a.d_->values[i] * a.d_->values[i];
    sb += b.d_->values[i] * b.d_->values[i];
    d += a.d_->values[i] * b.d_->values[i];
  }
  const double na = std::sqrt(sa), nb = std::sqrt(sb);
  if (na == 0.0 || nb == 0.0) {
    // Undefined similarity: report 0 with no gradient path.
    ++zero_norm_cosines_;
    return Tensor::scalar(0.0);
  }
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make({1}, rg);
  out.d_->values[0] = d / (na * nb);
  if (rg) {
    auto node = std::make_unique<CosineNode>();
    node->a = a.d_;
    node->b = b.d_;
    node->out = out.d_;
    node->na = na;
    node->nb = nb;
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::dropout(const Tensor& x, double p, bool train_mode, Rng& rng) {
  check_operand("dropout", x);
  if (p < 0.0 || p >= 1.0)
    throw Error("dropout: rate " + std::to_string(p) + " outside [0, 1)");
  if (!train_mode || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.d_->values.size());
  for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  const bool rg = x.requires_grad();
  Tensor out = make(x.shape(), rg);
  for (size_t i = 0; i < mask.size(); ++i) out.d_->values[i] = x.d_->values[i] * mask[i];
  if (rg) {
    auto node = std::make_unique<DropoutNode>();
    node->x = x.d_;
    node->out = out.d_;
    node->mask = std::move(mask);
    tape_.push_back(std::move(node));
  }
  return out;
}

Tensor Graph::detach(const Tensor& x) {
  check_operand("detach", x);
  return Tensor::from(x.shape(), std::vector<double>(x.d_->values));
}

Tensor Graph::gaussian_sample(const Tensor& mu, const Tensor& log_var, Rng& rng) {
  check_operand("gaussian_sample", mu);
  check_operand("gaussian_sample", log_var);
  if (mu.shape() != log_var.shape())
    throw ShapeError("gaussian_sample", mu.shape(), log_var.shape());
  const size_t n = mu.d_->values.size();
  std::vector<double> sigma(n), eps(n);
  for (size_t i = 0; i < n; ++i) {
    const double lv = std::min(std::max(log_var.d_->values[i], -30.0), 30.0);
    sigma[i] = lv <= -30.0 ? 0.0 : std::exp(0.5 * lv);
    eps[i] = rng.normal();
  }
  const bool rg = mu.requires_grad() || log_var.requires_grad();
  Tensor out = make(mu.shape(), rg);
  for (size_t i = 0; i < n; ++i)
    out.d_->values[i] = mu.d_->values[i] + sigma[i] * eps[i];
  if (rg) {
    auto node = std::make_unique<GaussianSampleNode>();
    node->mu = mu.d_;
    node->log_var = log_var.d_;
    node->out = out.d_;
    node->sigma = std::move(sigma);
    node->eps = std::move(eps);
    tape_.push_back(std::move(node));
  }
  return out;
}

}  // namespace clslu
