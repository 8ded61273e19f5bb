#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records one forward evaluation. Every op appends a node holding its
// value and a closure that scatters the node's gradient into its inputs.
// Tapes are single-threaded; use one tape per sample when parallelising.

#include "inornet/common.hpp"

#include <functional>
#include <span>
#include <vector>

namespace inornet {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  bool valid() const { return tape != nullptr; }
  const Mat& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A constant input; gradients are never propagated past it.
  Var constant(Mat value);
  /// A differentiable input (parameter or probe).
  Var variable(Mat value);

  Var record(Mat value, std::vector<std::size_t> inputs, Backward backward);

  /// Clears all gradients, seeds `root` with `seed` (same shape as its value,
  /// or a 1x1 scalar broadcast) and propagates. Propagation does not continue
  /// past nodes listed in `stop`.
  void backward(Var root, double seed = 1.0, std::span<const Var> stop = {});
  void backward(Var root, const Mat& seed, std::span<const Var> stop = {});

  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward pass w.r.t. `v`; zeros if untouched.
  Mat grad(Var v) const;

  /// Adds `g` to the gradient slot of node `id` (no-op if it doesn't require grad).
  void accumulate(std::size_t id, const Mat& g);
  const Mat& grad_ref(std::size_t id) const { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

inline const Mat& Var::value() const { return tape->value(id); }

// ---- elementwise / linear algebra ------------------------------------------
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // Hadamard
Var scale(Var a, double c);
Var add_row(Var a, Var row);  // broadcast a 1xC row over every row of a
Var linear(Var x, Var weight, Var bias);  // x W + b
Var relu(Var a);
Var sigmoid(Var a);

// ---- structural ------------------------------------------------------------
Var gather_rows(Var a, std::vector<std::uint32_t> rows);
/// Elementwise max over consecutive groups of `group` rows; ties resolve to
/// the first row of the group.
Var group_max(Var a, Index group);
Var group_mean(Var a, Index group);
Var col_max(Var a);  // 1xC max over all rows
Var reshape(Var a, Index rows, Index cols);  // row-major reinterpretation
Var concat_cols(Var a, Var b);
/// L x C -> L x 3C windows [row l-1, row l, row l+1] with zero padding; a
/// kernel-3, length-preserving 1-D convolution is unfold3(x) * W.
Var unfold3(Var a);
Var sum(Var a);
Var mean(Var a);

// ---- losses and normalisation ----------------------------------------------
/// Row-wise (x - mean(x)) / ||x||. With `centered_norm` the denominator is
/// ||x - mean(x)|| instead of the literal uncentered norm.
Var normalize_rows(Var a, bool centered_norm = false);
/// Mean-free cross-entropy of softmax(logits) (1xK) against class `label`.
Var softmax_cross_entropy(Var logits, int label);
/// Sum over rows l of log(1 + sum_{i != k} exp(tau <u_l, v_i> - tau <u_l, v_k>)).
Var consistency_logsumexp(Var u, Var v, Index true_row, double tau);

/// Numerically stable softmax of a 1xK row.
RowVec softmax(const RowVec& logits);

}  // namespace inornet
