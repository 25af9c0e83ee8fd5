// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/autodiff.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "dpdmd/error.hpp"

namespace dpdmd::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                   shape_string(b));
}

enum class Broadcast { kNone, kLhs, kRhs };

bool is_batch_suffix(const Shape& small, const Shape& big) {
  if (big.size() != small.size() + 1) return false;
  return std::equal(small.begin(), small.end(), big.begin() + 1);
}

Broadcast broadcast_kind(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::kNone;
  if (is_batch_suffix(a, b)) return Broadcast::kLhs;
  if (is_batch_suffix(b, a)) return Broadcast::kRhs;
  shape_mismatch(op, a, b);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void accumulate(std::vector<double>& dst, std::size_t n) {
  if (dst.empty()) dst.assign(n, 0.0);
}

// Adds `src` into `dst`, reducing over the leading batch axis when dst is the
// broadcast (smaller) operand.
void add_reduced(std::vector<double>& dst, std::size_t dst_size, std::span<const double> src,
                 double sign = 1.0) {
  accumulate(dst, dst_size);
  if (src.size() == dst_size) {
    for (std::size_t i = 0; i < dst_size; ++i) dst[i] += sign * src[i];
    return;
  }
  for (std::size_t i = 0; i < src.size(); ++i) dst[i % dst_size] += sign * src[i];
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kScale: return "scale";
    case OpKind::kRowScale: return "row_scale";
    case OpKind::kMul: return "mul";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSilu: return "silu";
    case OpKind::kMean: return "mean";
    case OpKind::kSum: return "sum";
    case OpKind::kSquare: return "square";
    case OpKind::kConcat: return "concat";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape_));
  }
  if (shape_size(shape_) != values.size()) {
    throw ShapeError("tensor shape " + shape_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(values.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor::Tensor(Shape shape, Buffer data, Tape* tape, std::size_t node)
    : shape_(std::move(shape)), data_(std::move(data)), tape_(tape), node_(node) {}

Tensor Tensor::scalar(double value) { return Tensor({}, std::vector<double>{value}); }

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const { return shape_.empty() ? 1 : shape_.front(); }

std::size_t Tensor::cols() const { return shape_.empty() ? 1 : size() / shape_.front(); }

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " + shape_string(shape_));
  }
  return (*data_)[0];
}

// ---------------------------------------------------------------------------
// Recording

namespace detail {

struct Recorder {
  static Tape* common_tape(const char* op, const Tensor& a, const Tensor* b) {
    Tape* tape = a.tape_;
    if (b != nullptr && b->tape_ != nullptr) {
      if (tape != nullptr && tape != b->tape_) {
        throw Error(std::string(op) + ": operands are recorded on different tapes");
      }
      tape = b->tape_;
    }
    return tape;
  }

  static Tape::Operand operand(const Tensor& t) {
    return {t, t.tape_ != nullptr ? t.node_ : Tape::kNoNode};
  }

  static Tensor make(OpKind kind, Shape shape, std::vector<double> out, const Tensor& a,
                     const Tensor* b, double scalar = 0.0,
                     std::shared_ptr<const std::vector<double>> aux = nullptr) {
    auto buffer = std::make_shared<const std::vector<double>>(std::move(out));
    Tape* tape = common_tape(op_name(kind), a, b);
    if (tape == nullptr) return Tensor(std::move(shape), std::move(buffer), nullptr, 0);
    Tape::Node node;
    node.kind = kind;
    node.shape = shape;
    node.lhs = operand(a);
    if (b != nullptr) node.rhs = operand(*b);
    node.scalar = scalar;
    node.aux = std::move(aux);
    node.value = buffer;
    return tape->append(std::move(node));
  }

  static Tensor constant(const Tensor& a) { return Tensor(a.shape_, a.data_, nullptr, 0); }
};

}  // namespace detail

using detail::Recorder;

Tensor Tape::append(Node node) {
  const std::size_t index = nodes_.size();
  Shape shape = node.shape;
  auto value = node.value;
  nodes_.push_back(std::move(node));
  return Tensor(std::move(shape), std::move(value), this, index);
}

Tensor Tape::leaf(const Tensor& value) {
  Node node;
  node.kind = OpKind::kLeaf;
  node.shape = value.shape();
  node.value = value.data_;
  return append(std::move(node));
}

std::vector<Tensor> Tape::leaves(std::span<const Tensor> values) {
  std::vector<Tensor> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(leaf(v));
  return out;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  Gradients result;
  result.tape_ = this;
  if (loss.tape() != this) return result;
  result.grads_.resize(loss.node() + 1);
  result.grads_[loss.node()] = {1.0};
  for (std::size_t i = loss.node() + 1; i-- > 0;) {
    if (result.grads_[i].empty()) continue;
    propagate(nodes_[i], result.grads_[i], result.grads_);
  }
  return result;
}

void Tape::propagate(const Node& node, const std::vector<double>& up,
                     std::vector<std::vector<double>>& grads) const {
  const auto& a = node.lhs;
  const auto& b = node.rhs;
  const bool da = a.node != kNoNode;
  const bool db = b.node != kNoNode;
  switch (node.kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kAdd:
      if (da) add_reduced(grads[a.node], a.value.size(), up);
      if (db) add_reduced(grads[b.node], b.value.size(), up);
      return;
    case OpKind::kSub:
      if (da) add_reduced(grads[a.node], a.value.size(), up);
      if (db) add_reduced(grads[b.node], b.value.size(), up, -1.0);
      return;
    case OpKind::kScale:
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, up.size());
        for (std::size_t i = 0; i < up.size(); ++i) g[i] += node.scalar * up[i];
      }
      return;
    case OpKind::kRowScale:
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, up.size());
        const auto& f = *node.aux;
        const std::size_t cols = up.size() / f.size();
        for (std::size_t r = 0; r < f.size(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += f[r] * up[r * cols + c];
        }
      }
      return;
    case OpKind::kMul: {
      const auto av = a.value.values();
      const auto bv = b.value.values();
      std::vector<double> tmp(up.size());
      if (da) {
        for (std::size_t i = 0; i < up.size(); ++i) tmp[i] = up[i] * bv[i % bv.size()];
        add_reduced(grads[a.node], av.size(), tmp);
      }
      if (db) {
        for (std::size_t i = 0; i < up.size(); ++i) tmp[i] = up[i] * av[i % av.size()];
        add_reduced(grads[b.node], bv.size(), tmp);
      }
      return;
    }
    case OpKind::kMatMul: {
      const std::size_t m = a.value.shape()[0];
      const std::size_t k = a.value.shape()[1];
      const std::size_t n = b.value.shape()[1];
      ConstMap dc(up.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, m * k);
        ConstMap bm(b.value.values().data(), static_cast<Eigen::Index>(k),
                    static_cast<Eigen::Index>(n));
        MutMap(g.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)).noalias() +=
            dc * bm.transpose();
      }
      if (db) {
        auto& g = grads[b.node];
        accumulate(g, k * n);
        ConstMap am(a.value.values().data(), static_cast<Eigen::Index>(m),
                    static_cast<Eigen::Index>(k));
        MutMap(g.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)).noalias() +=
            am.transpose() * dc;
      }
      return;
    }
    case OpKind::kTanh:
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, up.size());
        const auto& y = *node.value;
        for (std::size_t i = 0; i < up.size(); ++i) g[i] += up[i] * (1.0 - y[i] * y[i]);
      }
      return;
    case OpKind::kSilu:
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, up.size());
        const auto x = a.value.values();
        for (std::size_t i = 0; i < up.size(); ++i) {
          const double s = sigmoid(x[i]);
          g[i] += up[i] * s * (1.0 + x[i] * (1.0 - s));
        }
      }
      return;
    case OpKind::kSquare:
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, up.size());
        const auto x = a.value.values();
        for (std::size_t i = 0; i < up.size(); ++i) g[i] += up[i] * 2.0 * x[i];
      }
      return;
    case OpKind::kMean:
      if (da) {
        auto& g = grads[a.node];
        const std::size_t n = a.value.size();
        accumulate(g, n);
        const double share = up[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) g[i] += share;
      }
      return;
    case OpKind::kSum:
      if (da) {
        auto& g = grads[a.node];
        const std::size_t n = a.value.size();
        accumulate(g, n);
        for (std::size_t i = 0; i < n; ++i) g[i] += up[0];
      }
      return;
    case OpKind::kConcat: {
      const std::size_t wa = a.value.shape().empty() ? 1 : a.value.shape().back();
      const std::size_t wb = b.value.shape().empty() ? 1 : b.value.shape().back();
      const std::size_t rows = up.size() / (wa + wb);
      if (da) {
        auto& g = grads[a.node];
        accumulate(g, rows * wa);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < wa; ++c) g[r * wa + c] += up[r * (wa + wb) + c];
        }
      }
      if (db) {
        auto& g = grads[b.node];
        accumulate(g, rows * wb);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < wb; ++c) g[r * wb + c] += up[r * (wa + wb) + wa + c];
        }
      }
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Gradients

Tensor Gradients::wrt(const Tensor& t) const {
  if (!reached(t)) return Tensor::zeros(t.shape());
  return Tensor(t.shape(), grads_[t.node()]);
}

std::vector<Tensor> Gradients::wrt(std::span<const Tensor> ts) const {
  std::vector<Tensor> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(wrt(t));
  return out;
}

bool Gradients::reached(const Tensor& t) const {
  return t.tracked() && t.tape() == tape_ && t.node() < grads_.size() &&
         !grads_[t.node()].empty();
}

// ---------------------------------------------------------------------------
// Operations

namespace {

template <typename F>
Tensor elementwise_binary(OpKind kind, const Tensor& a, const Tensor& b, F f) {
  const Broadcast bc = broadcast_kind(op_name(kind), a.shape(), b.shape());
  const Shape& shape = bc == Broadcast::kLhs ? b.shape() : a.shape();
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t n = shape_size(shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i % av.size()], bv[i % bv.size()]);
  return Recorder::make(kind, shape, std::move(out), a, &b);
}

template <typename F>
Tensor elementwise_unary(OpKind kind, const Tensor& a, F f, double scalar = 0.0) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return Recorder::make(kind, a.shape(), std::move(out), a, nullptr, scalar);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(OpKind::kAdd, a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(OpKind::kSub, a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(OpKind::kMul, a, b, [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
  return elementwise_unary(OpKind::kScale, a, [s](double x) { return s * x; }, s);
}

Tensor row_scale(const Tensor& a, std::span<const double> factors) {
  if (a.rank() == 0 || factors.size() != a.rows()) {
    throw ShapeError("row_scale: " + std::to_string(factors.size()) +
                     " factors for shape " + shape_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < factors.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = factors[r] * av[r * cols + c];
  }
  auto aux = std::make_shared<const std::vector<double>>(factors.begin(), factors.end());
  return Recorder::make(OpKind::kRowScale, a.shape(), std::move(out), a, nullptr, 0.0,
                        std::move(aux));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_mismatch("matmul", a.shape(), b.shape());
  }
  const auto m = static_cast<Eigen::Index>(a.shape()[0]);
  const auto k = static_cast<Eigen::Index>(a.shape()[1]);
  const auto n = static_cast<Eigen::Index>(b.shape()[1]);
  std::vector<double> out(static_cast<std::size_t>(m * n));
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
  return Recorder::make(OpKind::kMatMul, {a.shape()[0], b.shape()[1]}, std::move(out), a, &b);
}

Tensor tanh(const Tensor& a) {
  return elementwise_unary(OpKind::kTanh, a, [](double x) { return std::tanh(x); });
}

Tensor silu(const Tensor& a) {
  return elementwise_unary(OpKind::kSilu, a, [](double x) { return x / (1.0 + std::exp(-x)); });
}

Tensor square(const Tensor& a) {
  return elementwise_unary(OpKind::kSquare, a, [](double x) { return x * x; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return Recorder::make(OpKind::kSum, {}, {s}, a, nullptr);
}

Tensor mean(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return Recorder::make(OpKind::kMean, {}, {s / static_cast<double>(a.size())}, a, nullptr);
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    shape_mismatch("concat", a.shape(), b.shape());
  }
  const std::size_t wa = a.shape().back();
  const std::size_t wb = b.shape().back();
  const std::size_t rows = a.size() / wa;
  std::vector<double> out(rows * (wa + wb));
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(r * wa), wa,
                out.begin() + static_cast<std::ptrdiff_t>(r * (wa + wb)));
    std::copy_n(bv.begin() + static_cast<std::ptrdiff_t>(r * wb), wb,
                out.begin() + static_cast<std::ptrdiff_t>(r * (wa + wb) + wa));
  }
  Shape shape = a.shape();
  shape.back() = wa + wb;
  return Recorder::make(OpKind::kConcat, std::move(shape), std::move(out), a, &b);
}

Tensor detach(const Tensor& a) { return Recorder::constant(a); }

Tensor mse(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }

}  // namespace dpdmd::ad
