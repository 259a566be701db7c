#pragma once

// Minimal reverse-mode automatic differentiation over rank <= 2 tensors of
// doubles. Every op on tensors that require gradients records a node in a
// graph; backward() walks that graph once and then consumes it.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "oorl/error.hpp"

namespace oorl {

class Shape {
 public:
  Shape() = default;  // scalar
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  static Shape scalar() { return Shape(); }
  static Shape vector(std::size_t n) { return Shape({n}); }
  static Shape matrix(std::size_t rows, std::size_t cols) {
    return Shape({rows, cols});
  }

  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  // A rank-1 tensor is laid out as a single row.
  std::size_t rows() const { return rank() == 2 ? dims_[0] : 1; }
  std::size_t cols() const { return rank() == 0 ? 1 : dims_.back(); }
  std::size_t numel() const { return rows() * cols(); }

  std::string str() const;
  bool operator==(const Shape&) const = default;

 private:
  std::vector<std::size_t> dims_;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's grad into its parents' grad buffers.
  std::function<void(Node&)> backward_fn;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor from(std::vector<double> values, Shape shape,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rows() const { return shape().rows(); }
  std::size_t cols() const { return shape().cols(); }
  std::size_t numel() const { return shape().numel(); }

  std::span<const double> values() const;
  // Writable view, only for leaves (parameters and data buffers).
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  bool is_leaf() const;
  // A new leaf holding a copy of the values, outside any graph.
  Tensor detach() const;
  Tensor clone(bool requires_grad) const;

  const void* id() const { return node_.get(); }

  // Internal: used by op implementations and the graph walker.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Parameter identity -> gradient of identical shape.
class GradientMap {
 public:
  bool contains(const Tensor& param) const;
  const std::vector<double>& at(const Tensor& param) const;
  std::vector<double>& at(const Tensor& param);
  void set(const Tensor& param, std::vector<double> grad);
  std::size_t size() const { return grads_.size(); }
  // Internal: keyed by Tensor::id().
  void set_by_id(const void* id, std::vector<double> grad);

 private:
  std::unordered_map<const void*, std::vector<double>> grads_;
};

// Gradients of a scalar loss for every reachable leaf that requires grad.
GradientMap backward(const Tensor& loss);
// Same, but guarantees an entry for each listed parameter (zeros when the
// parameter is unreachable from the loss).
GradientMap backward(const Tensor& loss, std::span<const Tensor> params);

// ---- elementwise ----------------------------------------------------------
// Binary ops require equal shapes, or a second operand that is a vector
// whose length equals the first operand's column count (bias broadcast).

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Ties route the gradient to the first operand.
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& t);
Tensor exp(const Tensor& t);
// Throws NumericError for any non-positive input.
Tensor log(const Tensor& t);
Tensor tanh(const Tensor& t);
// Subgradient at exactly 0 is 0.
Tensor relu(const Tensor& t);
Tensor softplus(const Tensor& t);
Tensor square(const Tensor& t);
// Gradient 1 on [lo, hi] (boundary included), 0 outside.
Tensor clamp(const Tensor& t, double lo, double hi);
Tensor scale(const Tensor& t, double factor);
Tensor add_scalar(const Tensor& t, double c);

// Elementwise op with a caller-provided derivative. `df` receives the input
// value and the output value.
Tensor map(const Tensor& t, const std::function<double(double)>& f,
           const std::function<double(double, double)>& df,
           const char* name = "map");

// ---- linear algebra and reductions ---------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

enum class Reduce { kSum, kMean };
// Without axis: scalar. Rank 2: axis 0 gives a [cols] vector, axis 1 gives a
// [rows, 1] column. Rank 1: axis 0 gives a scalar.
Tensor reduce(Reduce kind, const Tensor& t, std::optional<int> axis = {});
inline Tensor sum(const Tensor& t, std::optional<int> axis = {}) {
  return reduce(Reduce::kSum, t, axis);
}
inline Tensor mean(const Tensor& t, std::optional<int> axis = {}) {
  return reduce(Reduce::kMean, t, axis);
}

// ---- structural ------------------------------------------------------------

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& t, std::size_t begin, std::size_t end);
// Picks t[i, index[i]] for every row; result is [rows, 1].
Tensor gather_cols(const Tensor& t, std::span<const std::size_t> index);
// Row-wise log-softmax of a [rows, cols] matrix.
Tensor log_softmax(const Tensor& t);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& t) { return neg(t); }
inline Tensor operator*(const Tensor& t, double c) { return scale(t, c); }
inline Tensor operator*(double c, const Tensor& t) { return scale(t, c); }
inline Tensor operator+(const Tensor& t, double c) { return add_scalar(t, c); }
inline Tensor operator-(const Tensor& t, double c) { return add_scalar(t, -c); }

// Gathers rows of a (data) tensor into a new leaf without gradient.
Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows);

}  // namespace oorl
