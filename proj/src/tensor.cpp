#include "oorl/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace oorl {

using detail::Node;

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

const Node& node_of(const Tensor& t, const char* op) {
  if (!t.defined()) {
    throw GraphError(std::string(op) + ": undefined tensor");
  }
  return *t.node();
}

std::vector<double>& grad_buffer(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Tensor make_result(Shape shape, std::vector<double> value, const char* op,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward_fn) {
  check_finite(value, op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  const bool needs_grad = std::any_of(
      parents.begin(), parents.end(),
      [](const std::shared_ptr<Node>& p) { return p->requires_grad; });
  if (needs_grad) {
    node->requires_grad = true;
    node->leaf = false;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

enum class Broadcast { kSame, kRow };

Broadcast binary_rule(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& sa = node_of(a, op).shape;
  const Shape& sb = node_of(b, op).shape;
  if (sa == sb) return Broadcast::kSame;
  if (sb.rank() <= 1 && sb.numel() == sa.cols()) return Broadcast::kRow;
  throw ShapeError(std::string(op) + ": incompatible shapes " + sa.str() +
                   " and " + sb.str());
}

// f(x, y) -> out; da/db(x, y, out) -> partial derivatives.
template <class F, class Da, class Db>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f, Da da,
              Db db) {
  const Broadcast rule = binary_rule(a, b, op);
  const auto& na = a.node();
  const auto& nb = b.node();
  const std::size_t n = na->value.size();
  const std::size_t cols = na->shape.cols();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = rule == Broadcast::kRow ? i % cols : i;
    out[i] = f(na->value[i], nb->value[j]);
  }
  return make_result(
      na->shape, std::move(out), op, {na, nb},
      [rule, cols, da, db](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const std::size_t n = self.value.size();
        if (pa.requires_grad) {
          auto& ga = grad_buffer(pa);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = rule == Broadcast::kRow ? i % cols : i;
            ga[i] += self.grad[i] * da(pa.value[i], pb.value[j], self.value[i]);
          }
        }
        if (pb.requires_grad) {
          auto& gb = grad_buffer(pb);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = rule == Broadcast::kRow ? i % cols : i;
            gb[j] += self.grad[i] * db(pa.value[i], pb.value[j], self.value[i]);
          }
        }
      });
}

// f(x) -> y; df(x, y) -> dy/dx.
template <class F, class Df>
Tensor unary(const Tensor& t, const char* op, F f, Df df) {
  const auto& nt = node_of(t, op);
  std::vector<double> out(nt.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(nt.value[i]);
  return make_result(nt.shape, std::move(out), op, {t.node()},
                     [df](Node& self) {
                       Node& p = *self.parents[0];
                       auto& g = grad_buffer(p);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         g[i] += self.grad[i] * df(p.value[i], self.value[i]);
                       }
                     });
}

}  // namespace

// ---- Shape -----------------------------------------------------------------

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() > 2) throw ShapeError("rank > 2 is not supported");
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << ", ";
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::from(std::vector<double> values, Shape shape, bool requires_grad) {
  if (values.size() != shape.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape.str());
  }
  check_finite(values, "tensor construction");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(shape.numel(), value);
  return from(std::move(v), std::move(shape), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({value}, Shape::scalar(), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from(std::move(values), Shape::vector(n), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values, bool requires_grad) {
  return from(std::move(values), Shape::matrix(rows, cols), requires_grad);
}

const Shape& Tensor::shape() const { return node_of(*this, "shape").shape; }

std::span<const double> Tensor::values() const {
  return node_of(*this, "values").value;
}

std::span<double> Tensor::mutable_values() {
  if (!node_of(*this, "mutable_values").leaf) {
    throw GraphError("mutable_values: only leaf tensors may be written");
  }
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape().str());
  }
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) throw ShapeError("at(): index out of range");
  return node_->value[r * cols() + c];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return !node_ || node_->leaf; }

Tensor Tensor::detach() const { return clone(false); }

Tensor Tensor::clone(bool requires_grad) const {
  const Node& n = node_of(*this, "clone");
  return from(n.value, n.shape, requires_grad);
}

// ---- GradientMap -----------------------------------------------------------

bool GradientMap::contains(const Tensor& param) const {
  return grads_.count(param.id()) != 0;
}

const std::vector<double>& GradientMap::at(const Tensor& param) const {
  auto it = grads_.find(param.id());
  if (it == grads_.end()) throw GraphError("no gradient for parameter");
  return it->second;
}

std::vector<double>& GradientMap::at(const Tensor& param) {
  auto it = grads_.find(param.id());
  if (it == grads_.end()) throw GraphError("no gradient for parameter");
  return it->second;
}

void GradientMap::set_by_id(const void* id, std::vector<double> grad) {
  grads_[id] = std::move(grad);
}

void GradientMap::set(const Tensor& param, std::vector<double> grad) {
  if (grad.size() != param.numel()) {
    throw ShapeError("gradient size does not match parameter shape " +
                     param.shape().str());
  }
  grads_[param.id()] = std::move(grad);
}

// ---- backward --------------------------------------------------------------

namespace {

GradientMap run_backward(const Tensor& loss, std::span<const Tensor> params) {
  const Node& root_ref = node_of(loss, "backward");
  if (root_ref.value.size() != 1) {
    throw GraphError("backward: loss must be scalar, got shape " +
                     root_ref.shape.str());
  }
  Node* root = loss.node().get();
  if (root->consumed) {
    throw GraphError("backward: graph already consumed; run a new forward");
  }

  GradientMap out;
  if (root->requires_grad) {
    // Iterative post-order DFS over the grad-requiring subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (!node->leaf && node->consumed) {
        throw GraphError("backward: graph already consumed; run a new forward");
      }
      if (next < node->parents.size()) {
        Node* parent = node->parents[next++].get();
        if (parent->requires_grad && seen.insert(parent).second) {
          stack.emplace_back(parent, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }

    root->grad.assign(1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* node = *it;
      if (!node->leaf && !node->grad.empty()) node->backward_fn(*node);
    }
    for (Node* node : order) {
      if (node->leaf) {
        std::vector<double> g = std::move(node->grad);
        if (g.empty()) g.assign(node->value.size(), 0.0);
        node->grad.clear();
        out.set_by_id(node, std::move(g));
      } else {
        node->consumed = true;
        node->parents.clear();
        node->backward_fn = nullptr;
        node->grad.clear();
        node->grad.shrink_to_fit();
      }
    }
  }

  for (const Tensor& p : params) {
    if (!out.contains(p)) out.set(p, std::vector<double>(p.numel(), 0.0));
  }
  return out;
}

}  // namespace

GradientMap backward(const Tensor& loss) { return run_backward(loss, {}); }

GradientMap backward(const Tensor& loss, std::span<const Tensor> params) {
  return run_backward(loss, params);
}

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "minimum", [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "maximum", [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Tensor neg(const Tensor& t) {
  return unary(
      t, "neg", [](double x) { return -x; },
      [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& t) {
  return unary(
      t, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& t) {
  for (double x : node_of(t, "log").value) {
    if (!(x > 0.0)) {
      throw NumericError("log: non-positive input " + std::to_string(x));
    }
  }
  return unary(
      t, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& t) {
  return unary(
      t, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& t) {
  return unary(
      t, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& t) {
  return unary(
      t, "softplus",
      [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [](double x, double) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      });
}

Tensor square(const Tensor& t) {
  return unary(
      t, "square", [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  if (!(lo <= hi)) throw ShapeError("clamp: lo must not exceed hi");
  return unary(
      t, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor scale(const Tensor& t, double factor) {
  return unary(
      t, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& t, double c) {
  return unary(
      t, "add_scalar", [c](double x) { return x + c; },
      [](double, double) { return 1.0; });
}

Tensor map(const Tensor& t, const std::function<double(double)>& f,
           const std::function<double(double, double)>& df, const char* name) {
  return unary(t, name, f, df);
}

// ---- linear algebra and reductions ---------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = node_of(a, "matmul").shape;
  const Shape& sb = node_of(b, "matmul").shape;
  if (sa.rank() != 2 || sb.rank() != 2 || sa.cols() != sb.rows()) {
    throw ShapeError("matmul: incompatible shapes " + sa.str() + " x " +
                     sb.str());
  }
  const std::size_t n = sa.rows(), k = sa.cols(), m = sb.cols();
  std::vector<double> out(n * m);
  MutMap(out.data(), n, m).noalias() =
      ConstMap(a.node()->value.data(), n, k) *
      ConstMap(b.node()->value.data(), k, m);
  return make_result(
      Shape::matrix(n, m), std::move(out), "matmul", {a.node(), b.node()},
      [n, k, m](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        ConstMap g(self.grad.data(), n, m);
        if (pa.requires_grad) {
          MutMap(grad_buffer(pa).data(), n, k).noalias() +=
              g * ConstMap(pb.value.data(), k, m).transpose();
        }
        if (pb.requires_grad) {
          MutMap(grad_buffer(pb).data(), k, m).noalias() +=
              ConstMap(pa.value.data(), n, k).transpose() * g;
        }
      });
}

Tensor reduce(Reduce kind, const Tensor& t, std::optional<int> axis) {
  const char* op = kind == Reduce::kSum ? "sum" : "mean";
  const Shape& s = node_of(t, op).shape;
  const std::size_t rows = s.rows(), cols = s.cols();
  const auto& v = t.node()->value;

  if (!axis) {
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    const double w = kind == Reduce::kMean ? 1.0 / static_cast<double>(v.size())
                                           : 1.0;
    return make_result(Shape::scalar(), {total * w}, op, {t.node()},
                       [w](Node& self) {
                         auto& g = grad_buffer(*self.parents[0]);
                         for (double& x : g) x += self.grad[0] * w;
                       });
  }

  const int ax = *axis;
  const bool valid = (s.rank() == 2 && (ax == 0 || ax == 1)) ||
                     (s.rank() == 1 && ax == 0);
  if (!valid) {
    throw ShapeError(std::string(op) + ": invalid axis " + std::to_string(ax) +
                     " for shape " + s.str());
  }
  if (s.rank() == 1) return reduce(kind, t, std::nullopt);

  if (ax == 0) {
    const double w = kind == Reduce::kMean ? 1.0 / static_cast<double>(rows) : 1.0;
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[c] += v[r * cols + c];
    }
    for (double& x : out) x *= w;
    return make_result(Shape::vector(cols), std::move(out), op, {t.node()},
                       [rows, cols, w](Node& self) {
                         auto& g = grad_buffer(*self.parents[0]);
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cols; ++c) {
                             g[r * cols + c] += self.grad[c] * w;
                           }
                         }
                       });
  }

  const double w = kind == Reduce::kMean ? 1.0 / static_cast<double>(cols) : 1.0;
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += v[r * cols + c];
    out[r] = acc * w;
  }
  return make_result(Shape::matrix(rows, 1), std::move(out), op, {t.node()},
                     [rows, cols, w](Node& self) {
                       auto& g = grad_buffer(*self.parents[0]);
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < cols; ++c) {
                           g[r * cols + c] += self.grad[r] * w;
                         }
                       }
                     });
}

// ---- structural ------------------------------------------------------------

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const Shape& sa = node_of(a, "concat_cols").shape;
  const Shape& sb = node_of(b, "concat_cols").shape;
  if (sa.rank() != 2 || sb.rank() != 2 || sa.rows() != sb.rows()) {
    throw ShapeError("concat_cols: incompatible shapes " + sa.str() + " and " +
                     sb.str());
  }
  const std::size_t rows = sa.rows(), ca = sa.cols(), cb = sb.cols();
  std::vector<double> out(rows * (ca + cb));
  const auto& va = a.node()->value;
  const auto& vb = b.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(va.begin() + r * ca, ca, out.begin() + r * (ca + cb));
    std::copy_n(vb.begin() + r * cb, cb, out.begin() + r * (ca + cb) + ca);
  }
  return make_result(Shape::matrix(rows, ca + cb), std::move(out), "concat_cols",
                     {a.node(), b.node()}, [rows, ca, cb](Node& self) {
                       Node& pa = *self.parents[0];
                       Node& pb = *self.parents[1];
                       const std::size_t w = ca + cb;
                       if (pa.requires_grad) {
                         auto& g = grad_buffer(pa);
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < ca; ++c) {
                             g[r * ca + c] += self.grad[r * w + c];
                           }
                         }
                       }
                       if (pb.requires_grad) {
                         auto& g = grad_buffer(pb);
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cb; ++c) {
                             g[r * cb + c] += self.grad[r * w + ca + c];
                           }
                         }
                       }
                     });
}

Tensor slice_cols(const Tensor& t, std::size_t begin, std::size_t end) {
  const Shape& s = node_of(t, "slice_cols").shape;
  if (s.rank() != 2 || begin >= end || end > s.cols()) {
    throw ShapeError("slice_cols: invalid range for shape " + s.str());
  }
  const std::size_t rows = s.rows(), cols = s.cols(), w = end - begin;
  std::vector<double> out(rows * w);
  const auto& v = t.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(v.begin() + r * cols + begin, w, out.begin() + r * w);
  }
  return make_result(Shape::matrix(rows, w), std::move(out), "slice_cols",
                     {t.node()}, [rows, cols, begin, w](Node& self) {
                       auto& g = grad_buffer(*self.parents[0]);
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < w; ++c) {
                           g[r * cols + begin + c] += self.grad[r * w + c];
                         }
                       }
                     });
}

Tensor gather_cols(const Tensor& t, std::span<const std::size_t> index) {
  const Shape& s = node_of(t, "gather_cols").shape;
  if (s.rank() != 2 || index.size() != s.rows()) {
    throw ShapeError("gather_cols: need one index per row of " + s.str());
  }
  const std::size_t rows = s.rows(), cols = s.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (idx[r] >= cols) throw ShapeError("gather_cols: index out of range");
    out[r] = t.node()->value[r * cols + idx[r]];
  }
  return make_result(Shape::matrix(rows, 1), std::move(out), "gather_cols",
                     {t.node()}, [cols, idx = std::move(idx)](Node& self) {
                       auto& g = grad_buffer(*self.parents[0]);
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                         g[r * cols + idx[r]] += self.grad[r];
                       }
                     });
}

Tensor log_softmax(const Tensor& t) {
  const Shape& s = node_of(t, "log_softmax").shape;
  if (s.rank() != 2) throw ShapeError("log_softmax: expects a matrix");
  const std::size_t rows = s.rows(), cols = s.cols();
  const auto& v = t.node()->value;
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += std::exp(x[c] - mx);
    const double lse = mx + std::log(acc);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[c] - lse;
  }
  return make_result(s, std::move(out), "log_softmax", {t.node()},
                     [rows, cols](Node& self) {
                       auto& g = grad_buffer(*self.parents[0]);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double gsum = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) {
                           gsum += self.grad[r * cols + c];
                         }
                         for (std::size_t c = 0; c < cols; ++c) {
                           const std::size_t i = r * cols + c;
                           g[i] += self.grad[i] - std::exp(self.value[i]) * gsum;
                         }
                       }
                     });
}

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows) {
  const Shape& s = node_of(t, "select_rows").shape;
  const std::size_t cols = s.cols();
  std::vector<double> out;
  out.reserve(rows.size() * cols);
  const auto& v = t.node()->value;
  for (std::size_t r : rows) {
    if (r >= s.rows()) throw ShapeError("select_rows: row out of range");
    out.insert(out.end(), v.begin() + r * cols, v.begin() + (r + 1) * cols);
  }
  return Tensor::matrix(rows.size(), cols, std::move(out));
}

}  // namespace oorl
