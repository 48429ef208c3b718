#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "oid/rng.hpp"

namespace oid::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Parameter {
  std::string name;
  Matrix value;
  bool trainable = true;
};

using ParameterRefs = std::vector<Parameter*>;

/// Glorot-uniform initialisation in place.
void init_glorot(Parameter& p, Rng& rng);
void init_uniform(Parameter& p, Rng& rng, double scale);
Parameter make_parameter(std::string name, Index rows, Index cols);

/// Sparse set of parameter gradients keyed by parameter identity.
class Gradients {
 public:
  void add(const Parameter* p, const Matrix& g, double scale = 1.0);
  const Matrix* find(const Parameter* p) const;
  void merge(const Gradients& other, double scale = 1.0);
  void scale(double factor);
  double squared_norm() const;
  bool empty() const { return grads_.empty(); }
  void clear() { grads_.clear(); }

 private:
  std::unordered_map<const Parameter*, Matrix> grads_;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

/// Reverse-mode tape. Nodes record their value and a closure that pushes the
/// node's gradient to its parents. Gradients are only tracked for nodes that
/// depend on a trainable parameter or an `input` leaf.
class Graph {
 public:
  using Backward = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var param(const Parameter& p);
  Var constant(Matrix value);
  /// Leaf whose gradient is retained (read back with `grad`).
  Var input(Matrix value);
  Var record(Matrix value, const std::vector<Var>& parents, Backward backward);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  /// Gradient of the last `backward` call; zeros when the node got none.
  Matrix grad(Var v) const;
  const Matrix& grad_ref(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  /// Seeds d(loss)=seed on a 1x1 node and propagates.
  void backward(Var loss, double seed = 1.0);
  /// Adds parameter-leaf gradients into `out`.
  void collect(Gradients& out, double scale = 1.0) const;

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    Backward backward;
    const Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// Element-wise and linear-algebra ops. Sequences are stored column-major:
// a (dim x n) matrix holds one token per column.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cwise_mul(Var a, Var b);
Var scale(Var a, double factor);
Var one_minus(Var a);
/// a + b broadcast over columns (b is rows x 1).
Var add_bias(Var a, Var b);
/// W x + b with b broadcast over columns.
Var affine(Var w, Var x, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var transpose(Var a);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
/// Row-wise max over all columns -> rows x 1.
Var max_cols(Var a);
/// Row-wise max inside consecutive column segments -> rows x segments.size().
Var segment_max_cols(Var a, const std::vector<Index>& segment_lengths);
/// Softmax along each row.
Var softmax_rows(Var a);
/// Per-column unit L2 scaling; zero columns stay zero.
Var normalize_cols(Var a);
/// Columns of `table` picked by id.
Var gather_cols(Var table, const std::vector<int>& ids);
/// Convolution windows: for every id sequence, pads with `pad_id` so each
/// position yields one window, looks up the columns of `table` and stacks the
/// `width` columns of every window vertically. Output is
/// (rows*width) x (sum of sequence lengths).
Var conv_windows(Var table, const std::vector<std::vector<int>>& sequences, int width,
                 int pad_id);
/// Inverted dropout with keep-probability 1-rate; identity when rate == 0.
Var dropout(Var a, double rate, Rng& rng);
Var sum(Var a);
/// Numerically stable binary cross-entropy on a 1x1 logit.
Var bce_with_logits(Var logit, double label);
/// max(0, 1 - label * score) on a 1x1 score.
Var hinge(Var score, double label);

/// One LSTM direction over a (in x n) sequence; returns (hidden x n) where
/// column t is the state after consuming position t. `reverse` runs from the
/// last position to the first. Gate order in the stacked weights: input,
/// forget, cell, output.
Var lstm(Var x, Var w_input, Var w_hidden, Var bias, bool reverse);

}  // namespace oid::nn
