#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clslu/rng.hpp"

namespace clslu {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shape mismatch; message names the op and both shapes.
class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, const Shape& a, const Shape& b);
  ShapeError(const std::string& op, const std::string& detail);
};

namespace detail {
struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  uint64_t graph_id = 0;  // 0 for leaves and constants
};
}  // namespace detail

// Dense 64-bit float tensor. A lightweight handle: copies share the
// underlying buffer, so model parameters can live in several registries
// at once. All math runs through Graph so gradients can be replayed.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  int64_t size() const { return static_cast<int64_t>(d_->values.size()); }
  bool requires_grad() const { return d_->requires_grad; }

  std::span<const double> values() const { return d_->values; }
  // In-place mutation of a leaf (optimizer updates, finite differences).
  std::span<double> mutable_values() { return d_->values; }

  bool has_grad() const { return !d_->grad.empty(); }
  std::span<const double> grad() const { return d_->grad; }
  void zero_grad() { d_->grad.clear(); }

  // Value of a single-element tensor.
  double item() const;

  double operator[](int64_t i) const { return d_->values[static_cast<size_t>(i)]; }

  // Identity of the underlying buffer, not value equality.
  bool same_data(const Tensor& other) const { return d_ == other.d_; }

 private:
  friend class Graph;
  explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<detail::TensorData> d_;
};

// Xavier/Glorot uniform initialization with the given fan pair.
Tensor xavier_uniform(const Shape& shape, Rng& rng);

namespace detail {
struct OpNode {
  virtual ~OpNode() = default;
  virtual void backward() = 0;
};
}  // namespace detail

// Reverse-mode tape. Records every gradient-relevant operation in
// insertion order; backward() replays the record once, in reverse.
// A Graph and the tensors it produced are confined to one thread.
class Graph {
 public:
  Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Elementwise, identical shapes.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  // x * c for a plain constant c.
  Tensor scale(const Tensor& x, double c);

  // {m,k}x{k,n} -> {m,n}; {m,k}x{k} -> {m}; {k}x{k,n} -> {n}.
  Tensor matmul(const Tensor& a, const Tensor& b);
  // Inner product of two equal-length vectors -> scalar {1}.
  Tensor dot(const Tensor& a, const Tensor& b);

  // 1-D tensors joined end to end.
  Tensor concat(std::span<const Tensor> parts);
  // Contiguous range [start, start+len) of a 1-D tensor.
  Tensor slice(const Tensor& x, int64_t start, int64_t len);
  // Row r of a 2-D tensor -> 1-D. Gradient scatters into that row.
  Tensor row(const Tensor& m, int64_t r);
  // n 1-D tensors of length d -> {n,d}.
  Tensor stack(std::span<const Tensor> rows);

  Tensor tanh(const Tensor& x);
  Tensor sigmoid(const Tensor& x);
  Tensor exp(const Tensor& x);
  Tensor log(const Tensor& x);

  // Softmax over the last axis; rows sum to 1. Input must be finite.
  Tensor softmax(const Tensor& x);

  // Mean over all elements -> scalar.
  Tensor mean(const Tensor& x);
  // Mean of squared differences -> scalar.
  Tensor mse(const Tensor& a, const Tensor& b);
  // -log(max(p[target], 1e-12)) for a probability vector p -> scalar.
  Tensor nll_onehot(const Tensor& p, int64_t target);

  // Cosine similarity of two vectors -> scalar in [-1, 1]. A zero-norm
  // operand makes the similarity 0 with no gradient path; the event is
  // counted in zero_norm_cosine_count().
  Tensor cosine(const Tensor& a, const Tensor& b);

  // Inverted dropout: train keeps units with prob 1-p and rescales by
  // 1/(1-p); eval is the identity and consumes no randomness.
  Tensor dropout(const Tensor& x, double p, bool train_mode, Rng& rng);

  // Value copy severed from the graph (requires_grad = false).
  Tensor detach(const Tensor& x);

  // Reparameterized draw z = mu + sigma * eps, eps ~ N(0, I), with
  // sigma = exp(clamp(log_var, -30, 30) / 2); at or below the clamp
  // floor sigma is exactly 0, so z == mu. Differentiable in mu, log_var.
  Tensor gaussian_sample(const Tensor& mu, const Tensor& log_var, Rng& rng);

  // Accumulates gradients of a scalar root into every reachable
  // requires_grad tensor. A second call without reset() is an error.
  void backward(const Tensor& root);
  void reset();

  size_t node_count() const { return tape_.size(); }
  size_t zero_norm_cosine_count() const { return zero_norm_cosines_; }

 private:
  Tensor make(Shape shape, bool requires_grad);
  void check_operand(const char* op, const Tensor& t) const;
  Tensor unary_map(const char* name, const Tensor& x, double (*fwd)(double),
                   double (*dfdy)(double y, double x));

  uint64_t id_;
  bool backward_done_ = false;
  std::vector<std::unique_ptr<detail::OpNode>> tape_;
  size_t zero_norm_cosines_ = 0;
};

}  // namespace clslu
