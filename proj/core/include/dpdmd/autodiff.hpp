// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over dense double tensors.
//
// A Tensor is an immutable value (shape + shared row-major buffer). When any
// operand of an operation is attached to a Tape, the result is recorded on
// that tape and carries a node reference; otherwise the operation is computed
// eagerly and the result stays a constant. Tape::backward walks the recorded
// nodes in exact reverse insertion order.
//
// Broadcasting is limited to a leading batch axis: an operand of shape [n...]
// combines with one of shape [B, n...].

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dpdmd::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;
namespace detail {
struct Recorder;
}

class Tensor {
 public:
  /// Empty rank-0 placeholder with a single zero element.
  Tensor();
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  /// Row-major [rows, cols] matrix.
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  /// Leading extent for rank >= 1, 1 for scalars.
  std::size_t rows() const;
  /// Product of all but the leading extent.
  std::size_t cols() const;

  std::span<const double> values() const { return {data_->data(), data_->size()}; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t row, std::size_t col) const { return (*data_)[row * cols() + col]; }
  /// Value of a single-element tensor.
  double item() const;

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  /// Same buffer object (not just equal values).
  bool shares_storage(const Tensor& other) const { return data_ == other.data_; }

 private:
  friend class Tape;
  friend struct detail::Recorder;
  using Buffer = std::shared_ptr<const std::vector<double>>;

  Tensor(Shape shape, Buffer data, Tape* tape, std::size_t node);

  Shape shape_;
  Buffer data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kScale,
  kRowScale,
  kMul,
  kMatMul,
  kTanh,
  kSilu,
  kMean,
  kSum,
  kSquare,
  kConcat,
};

const char* op_name(OpKind kind);

/// Per-node gradient buffers produced by Tape::backward.
class Gradients {
 public:
  /// d(loss)/d(t). Exact zeros when t is a constant, lives on another tape
  /// position the loss does not reach, or was recorded after the loss.
  Tensor wrt(const Tensor& t) const;
  std::vector<Tensor> wrt(std::span<const Tensor> ts) const;
  /// True when backward actually propagated something into t's node.
  bool reached(const Tensor& t) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> grads_;
};

/// Append-only record of operations. Not copyable or movable: tensors hold a
/// raw pointer to the tape that recorded them, so a tape must outlive every
/// tracked tensor derived from it. Use one tape per training iteration.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Registers a value as a differentiable leaf.
  Tensor leaf(const Tensor& value);
  std::vector<Tensor> leaves(std::span<const Tensor> values);

  /// Reverse pass from a single-element loss.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t node) const { return nodes_.at(node).kind; }

 private:
  friend struct detail::Recorder;

  static constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

  struct Operand {
    Tensor value;
    std::size_t node = kNoNode;
  };

  struct Node {
    OpKind kind = OpKind::kLeaf;
    Shape shape;
    Operand lhs;
    Operand rhs;
    double scalar = 0.0;
    std::shared_ptr<const std::vector<double>> aux;
    std::shared_ptr<const std::vector<double>> value;
  };

  Tensor append(Node node);
  void propagate(const Node& node, const std::vector<double>& upstream,
                 std::vector<std::vector<double>>& grads) const;

  std::vector<Node> nodes_;
};

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// Multiplies row i of a rank >= 1 tensor by factors[i] (constant factors).
Tensor row_scale(const Tensor& a, std::span<const double> factors);
Tensor mul(const Tensor& a, const Tensor& b);
/// [m, k] x [k, n] -> [m, n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor square(const Tensor& a);
/// Mean of all elements, rank-0 result.
Tensor mean(const Tensor& a);
/// Sum of all elements, rank-0 result.
Tensor sum(const Tensor& a);
/// Concatenation along the last axis; leading extents must agree.
Tensor concat(const Tensor& a, const Tensor& b);
/// Value-identical constant: gradients never flow through the result.
Tensor detach(const Tensor& a);

/// mean((a - b)^2); the usual regression loss.
Tensor mse(const Tensor& a, const Tensor& b);

}  // namespace dpdmd::ad
