#include "oid/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "oid/error.hpp"

namespace oid::nn {

void init_uniform(Parameter& p, Rng& rng, double s) {
  for (Index j = 0; j < p.value.cols(); ++j)
    for (Index i = 0; i < p.value.rows(); ++i) p.value(i, j) = rng.uniform(-s, s);
}

void init_glorot(Parameter& p, Rng& rng) {
  const double fan = static_cast<double>(p.value.rows() + p.value.cols());
  init_uniform(p, rng, std::sqrt(6.0 / std::max(fan, 1.0)));
}

Parameter make_parameter(std::string name, Index rows, Index cols) {
  return Parameter{std::move(name), Matrix::Zero(rows, cols), true};
}

void Gradients::add(const Parameter* p, const Matrix& g, double s) {
  auto it = grads_.find(p);
  if (it == grads_.end()) grads_.emplace(p, s * g);
  else it->second += s * g;
}

const Matrix* Gradients::find(const Parameter* p) const {
  auto it = grads_.find(p);
  return it == grads_.end() ? nullptr : &it->second;
}

void Gradients::merge(const Gradients& other, double s) {
  for (const auto& [p, g] : other.grads_) add(p, g, s);
}

void Gradients::scale(double factor) {
  for (auto& [p, g] : grads_) g *= factor;
}

double Gradients::squared_norm() const {
  // Summed in name order so the result does not depend on pointer hashing.
  std::vector<std::pair<std::string, double>> parts;
  parts.reserve(grads_.size());
  for (const auto& [p, g] : grads_) parts.emplace_back(p->name, g.squaredNorm());
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  for (const auto& part : parts) total += part.second;
  return total;
}

const Matrix& Var::value() const { return graph->value(*this); }

Var Graph::param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.value = p.value;
  n.needs_grad = p.trainable;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return {this, id};
}

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::record(Matrix value, const std::vector<Var>& parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& p : parents) n.needs_grad = n.needs_grad || needs_grad(p);
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Matrix Graph::grad(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss, double seed) {
  if (loss.rows() != 1 || loss.cols() != 1) throw ArgumentError("backward needs a scalar node");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(loss.id, Matrix::Constant(1, 1, seed));
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.has_grad && n.backward) n.backward(*this, id);
  }
}

void Graph::collect(Gradients& out, double s) const {
  for (const auto& n : nodes_)
    if (n.param && n.has_grad) out.add(n.param, n.grad, s);
}

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ")");
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid_of(const Matrix& a) { return a.unaryExpr(&sigmoid_scalar); }

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows())
    throw ArgumentError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                        std::to_string(b.rows()) + ")");
  Graph& g = *a.graph;
  const int ia = a.id, ib = b.id;
  return g.record(a.value() * b.value(), {a, b}, [ia, ib](Graph& g, int self) {
    const Matrix& G = g.grad_ref(self);
    if (g.needs_grad(ia)) g.accumulate(ia, G * g.value({&g, ib}).transpose());
    if (g.needs_grad(ib)) g.accumulate(ib, g.value({&g, ia}).transpose() * G);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value() + b.value(), {a, b}, [ia, ib](Graph& g, int self) {
    g.accumulate(ia, g.grad_ref(self));
    g.accumulate(ib, g.grad_ref(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value() - b.value(), {a, b}, [ia, ib](Graph& g, int self) {
    g.accumulate(ia, g.grad_ref(self));
    g.accumulate(ib, -g.grad_ref(self));
  });
}

Var cwise_mul(Var a, Var b) {
  require_same_shape(a, b, "cwise_mul");
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value().cwiseProduct(b.value()), {a, b},
                         [ia, ib](Graph& g, int self) {
                           const Matrix& G = g.grad_ref(self);
                           g.accumulate(ia, G.cwiseProduct(g.value({&g, ib})));
                           g.accumulate(ib, G.cwiseProduct(g.value({&g, ia})));
                         });
}

Var scale(Var a, double factor) {
  const int ia = a.id;
  return a.graph->record(a.value() * factor, {a}, [ia, factor](Graph& g, int self) {
    g.accumulate(ia, g.grad_ref(self) * factor);
  });
}

Var one_minus(Var a) {
  const int ia = a.id;
  return a.graph->record((1.0 - a.value().array()).matrix(), {a},
                         [ia](Graph& g, int self) { g.accumulate(ia, -g.grad_ref(self)); });
}

Var add_bias(Var a, Var b) {
  if (b.cols() != 1 || b.rows() != a.rows()) throw ArgumentError("add_bias: bias shape mismatch");
  const int ia = a.id, ib = b.id;
  Matrix out = a.value().colwise() + b.value().col(0);
  return a.graph->record(std::move(out), {a, b}, [ia, ib](Graph& g, int self) {
    const Matrix& G = g.grad_ref(self);
    g.accumulate(ia, G);
    g.accumulate(ib, G.rowwise().sum());
  });
}

Var affine(Var w, Var x, Var b) { return add_bias(matmul(w, x), b); }

Var sigmoid(Var a) {
  const int ia = a.id;
  return a.graph->record(sigmoid_of(a.value()), {a}, [ia](Graph& g, int self) {
    const Matrix& y = g.value({&g, self});
    g.accumulate(ia, g.grad_ref(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var tanh(Var a) {
  const int ia = a.id;
  return a.graph->record(a.value().array().tanh().matrix(), {a}, [ia](Graph& g, int self) {
    const Matrix& y = g.value({&g, self});
    g.accumulate(ia, g.grad_ref(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var relu(Var a) {
  const int ia = a.id;
  return a.graph->record(a.value().cwiseMax(0.0), {a}, [ia](Graph& g, int self) {
    const Matrix& x = g.value({&g, ia});
    g.accumulate(ia, (x.array() > 0.0).select(g.grad_ref(self), 0.0).matrix());
  });
}

Var transpose(Var a) {
  const int ia = a.id;
  return a.graph->record(a.value().transpose(), {a}, [ia](Graph& g, int self) {
    g.accumulate(ia, g.grad_ref(self).transpose());
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ArgumentError("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    ids.push_back(p.id);
    offsets.push_back(r);
    r += p.rows();
  }
  return parts.front().graph->record(std::move(out), parts,
                                     [ids, offsets](Graph& g, int self) {
                                       const Matrix& G = g.grad_ref(self);
                                       for (std::size_t k = 0; k < ids.size(); ++k) {
                                         const Index rows = g.value({&g, ids[k]}).rows();
                                         g.accumulate(ids[k], G.middleRows(offsets[k], rows));
                                       }
                                     });
}

Var slice_rows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ArgumentError("slice_rows: range out of bounds");
  const int ia = a.id;
  const Index rows = a.rows(), cols = a.cols();
  return a.graph->record(a.value().middleRows(start, count), {a},
                         [ia, start, count, rows, cols](Graph& g, int self) {
                           Matrix full = Matrix::Zero(rows, cols);
                           full.middleRows(start, count) = g.grad_ref(self);
                           g.accumulate(ia, full);
                         });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ArgumentError("slice_cols: range out of bounds");
  const int ia = a.id;
  const Index rows = a.rows(), cols = a.cols();
  return a.graph->record(a.value().middleCols(start, count), {a},
                         [ia, start, count, rows, cols](Graph& g, int self) {
                           Matrix full = Matrix::Zero(rows, cols);
                           full.middleCols(start, count) = g.grad_ref(self);
                           g.accumulate(ia, full);
                         });
}

Var max_cols(Var a) { return segment_max_cols(a, {a.cols()}); }

Var segment_max_cols(Var a, const std::vector<Index>& lengths) {
  const Matrix& x = a.value();
  const Index rows = x.rows();
  Matrix out(rows, static_cast<Index>(lengths.size()));
  std::vector<Index> argmax(static_cast<std::size_t>(rows) * lengths.size());
  Index start = 0;
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    if (lengths[s] <= 0) throw ArgumentError("segment_max_cols: empty segment");
    for (Index r = 0; r < rows; ++r) {
      Index best = start;
      for (Index c = start + 1; c < start + lengths[s]; ++c)
        if (x(r, c) > x(r, best)) best = c;
      out(r, static_cast<Index>(s)) = x(r, best);
      argmax[s * static_cast<std::size_t>(rows) + static_cast<std::size_t>(r)] = best;
    }
    start += lengths[s];
  }
  if (start != x.cols()) throw ArgumentError("segment_max_cols: lengths do not cover input");
  const int ia = a.id;
  const Index cols = x.cols();
  return a.graph->record(std::move(out), {a}, [ia, argmax, rows, cols](Graph& g, int self) {
    const Matrix& G = g.grad_ref(self);
    Matrix full = Matrix::Zero(rows, cols);
    for (Index s = 0; s < G.cols(); ++s)
      for (Index r = 0; r < rows; ++r)
        full(r, argmax[static_cast<std::size_t>(s * rows + r)]) += G(r, s);
    g.accumulate(ia, full);
  });
}

Var softmax_rows(Var a) {
  Matrix y = a.value();
  for (Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  const int ia = a.id;
  return a.graph->record(std::move(y), {a}, [ia](Graph& g, int self) {
    const Matrix& Y = g.value({&g, self});
    const Matrix& G = g.grad_ref(self);
    const Vector dots = G.cwiseProduct(Y).rowwise().sum();
    g.accumulate(ia, Y.cwiseProduct((G.colwise() - dots)));
  });
}

Var normalize_cols(Var a) {
  const Matrix& x = a.value();
  Vector norms = x.colwise().norm().transpose();
  Matrix y = x;
  for (Index c = 0; c < y.cols(); ++c)
    if (norms[c] > 0.0) y.col(c) /= norms[c];
  const int ia = a.id;
  return a.graph->record(std::move(y), {a}, [ia, norms](Graph& g, int self) {
    const Matrix& Y = g.value({&g, self});
    const Matrix& G = g.grad_ref(self);
    Matrix gx = Matrix::Zero(G.rows(), G.cols());
    for (Index c = 0; c < G.cols(); ++c) {
      if (norms[c] == 0.0) continue;
      gx.col(c) = (G.col(c) - Y.col(c) * Y.col(c).dot(G.col(c))) / norms[c];
    }
    g.accumulate(ia, gx);
  });
}

Var gather_cols(Var table, const std::vector<int>& ids) {
  const Matrix& t = table.value();
  Matrix out(t.rows(), static_cast<Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= t.cols()) throw ArgumentError("gather_cols: id out of range");
    out.col(static_cast<Index>(k)) = t.col(ids[k]);
  }
  const int it = table.id;
  const Index rows = t.rows(), cols = t.cols();
  return table.graph->record(std::move(out), {table},
                             [it, ids, rows, cols](Graph& g, int self) {
                               const Matrix& G = g.grad_ref(self);
                               Matrix full = Matrix::Zero(rows, cols);
                               for (std::size_t k = 0; k < ids.size(); ++k)
                                 full.col(ids[k]) += G.col(static_cast<Index>(k));
                               g.accumulate(it, full);
                             });
}

Var conv_windows(Var table, const std::vector<std::vector<int>>& sequences, int width,
                 int pad_id) {
  if (width < 1) throw ArgumentError("conv_windows: width must be positive");
  const Matrix& t = table.value();
  const Index rows = t.rows(), cols = t.cols();
  const int left = (width - 1) / 2;
  const int right = width - 1 - left;
  std::vector<int> flat;  // width ids per output column
  for (const auto& seq : sequences) {
    std::vector<int> padded(static_cast<std::size_t>(left), pad_id);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.insert(padded.end(), static_cast<std::size_t>(right), pad_id);
    for (std::size_t p = 0; p < seq.size(); ++p)
      for (int k = 0; k < width; ++k) flat.push_back(padded[p + static_cast<std::size_t>(k)]);
  }
  const Index n_windows = static_cast<Index>(flat.size()) / width;
  Matrix out(rows * width, n_windows);
  for (Index c = 0; c < n_windows; ++c) {
    for (int k = 0; k < width; ++k) {
      const int id = flat[static_cast<std::size_t>(c * width + k)];
      if (id < 0 || id >= cols) throw ArgumentError("conv_windows: id out of range");
      out.block(k * rows, c, rows, 1) = t.col(id);
    }
  }
  const int it = table.id;
  return table.graph->record(
      std::move(out), {table}, [it, flat, width, rows, cols, n_windows](Graph& g, int self) {
        const Matrix& G = g.grad_ref(self);
        Matrix full = Matrix::Zero(rows, cols);
        for (Index c = 0; c < n_windows; ++c)
          for (int k = 0; k < width; ++k)
            full.col(flat[static_cast<std::size_t>(c * width + k)]) += G.block(k * rows, c, rows, 1);
        g.accumulate(it, full);
      });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ArgumentError("dropout rate must be below 1");
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 - rate;
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < mask.rows(); ++i) mask(i, j) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  const int ia = a.id;
  Matrix out = a.value().cwiseProduct(mask);
  return a.graph->record(std::move(out), {a}, [ia, mask](Graph& g, int self) {
    g.accumulate(ia, g.grad_ref(self).cwiseProduct(mask));
  });
}

Var sum(Var a) {
  const int ia = a.id;
  const Index rows = a.rows(), cols = a.cols();
  return a.graph->record(Matrix::Constant(1, 1, a.value().sum()), {a},
                         [ia, rows, cols](Graph& g, int self) {
                           g.accumulate(ia, Matrix::Constant(rows, cols, g.grad_ref(self)(0, 0)));
                         });
}

Var bce_with_logits(Var logit, double label) {
  if (logit.rows() != 1 || logit.cols() != 1) throw ArgumentError("bce_with_logits: need 1x1");
  const double x = logit.scalar();
  const double loss = std::max(x, 0.0) - x * label + std::log1p(std::exp(-std::abs(x)));
  const int il = logit.id;
  return logit.graph->record(Matrix::Constant(1, 1, loss), {logit},
                             [il, x, label](Graph& g, int self) {
                               g.accumulate(il, Matrix::Constant(
                                                    1, 1, g.grad_ref(self)(0, 0) *
                                                              (sigmoid_scalar(x) - label)));
                             });
}

Var hinge(Var score, double label) {
  if (score.rows() != 1 || score.cols() != 1) throw ArgumentError("hinge: need 1x1");
  const double s = score.scalar();
  const double margin = 1.0 - label * s;
  const int is = score.id;
  return score.graph->record(Matrix::Constant(1, 1, std::max(0.0, margin)), {score},
                             [is, margin, label](Graph& g, int self) {
                               if (margin <= 0.0) return;
                               g.accumulate(is, Matrix::Constant(1, 1, -label * g.grad_ref(self)(0, 0)));
                             });
}

Var lstm(Var x, Var w_input, Var w_hidden, Var bias, bool reverse) {
  const Matrix& X = x.value();
  const Matrix& Wx = w_input.value();
  const Matrix& Wh = w_hidden.value();
  const Matrix& b = bias.value();
  const Index H = Wh.cols();
  const Index n = X.cols();
  if (Wx.rows() != 4 * H || Wh.rows() != 4 * H || Wx.cols() != X.rows() || b.rows() != 4 * H ||
      b.cols() != 1)
    throw ArgumentError("lstm: parameter shapes do not match input");

  // Per-position caches, indexed by sequence position.
  Matrix gates(4 * H, n);  // activated i, f, g, o
  Matrix cells(H, n), tanh_cells(H, n), hidden(H, n), prev_hidden(H, n), prev_cells(H, n);
  const Matrix pre = (Wx * X).colwise() + b.col(0);
  Vector h = Vector::Zero(H), c = Vector::Zero(H);
  for (Index step = 0; step < n; ++step) {
    const Index t = reverse ? n - 1 - step : step;
    prev_hidden.col(t) = h;
    prev_cells.col(t) = c;
    Vector a = pre.col(t) + Wh * h;
    auto ig = a.segment(0, H).unaryExpr(&sigmoid_scalar).eval();
    auto fg = a.segment(H, H).unaryExpr(&sigmoid_scalar).eval();
    auto gg = a.segment(2 * H, H).array().tanh().matrix().eval();
    auto og = a.segment(3 * H, H).unaryExpr(&sigmoid_scalar).eval();
    c = fg.cwiseProduct(c) + ig.cwiseProduct(gg);
    const Vector tc = c.array().tanh().matrix();
    h = og.cwiseProduct(tc);
    gates.col(t) << ig, fg, gg, og;
    cells.col(t) = c;
    tanh_cells.col(t) = tc;
    hidden.col(t) = h;
  }
  const int ix = x.id, iwx = w_input.id, iwh = w_hidden.id, ib = bias.id;
  return x.graph->record(
      hidden, {x, w_input, w_hidden, bias},
      [=](Graph& g, int self) {
        const Matrix& G = g.grad_ref(self);
        const Matrix& Wxv = g.value({&g, iwx});
        const Matrix& Whv = g.value({&g, iwh});
        const Matrix& Xv = g.value({&g, ix});
        Matrix dpre(4 * H, n);
        Vector dh_next = Vector::Zero(H), dc_next = Vector::Zero(H);
        for (Index step = n - 1; step >= 0; --step) {
          const Index t = reverse ? n - 1 - step : step;
          const auto ig = gates.col(t).segment(0, H);
          const auto fg = gates.col(t).segment(H, H);
          const auto gg = gates.col(t).segment(2 * H, H);
          const auto og = gates.col(t).segment(3 * H, H);
          const auto tc = tanh_cells.col(t);
          const Vector dh = G.col(t) + dh_next;
          const Vector dc =
              dh.cwiseProduct(og).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
          auto da = dpre.col(t);
          da.segment(0, H) = dc.cwiseProduct(gg).cwiseProduct((ig.array() * (1.0 - ig.array())).matrix());
          da.segment(H, H) = dc.cwiseProduct(prev_cells.col(t))
                                 .cwiseProduct((fg.array() * (1.0 - fg.array())).matrix());
          da.segment(2 * H, H) = dc.cwiseProduct(ig).cwiseProduct((1.0 - gg.array().square()).matrix());
          da.segment(3 * H, H) = dh.cwiseProduct(tc).cwiseProduct((og.array() * (1.0 - og.array())).matrix());
          dc_next = dc.cwiseProduct(fg);
          dh_next = Whv.transpose() * da;
        }
        if (g.needs_grad(ix)) g.accumulate(ix, Wxv.transpose() * dpre);
        if (g.needs_grad(iwx)) g.accumulate(iwx, dpre * Xv.transpose());
        if (g.needs_grad(iwh)) g.accumulate(iwh, dpre * prev_hidden.transpose());
        if (g.needs_grad(ib)) g.accumulate(ib, dpre.rowwise().sum());
      });
}

}  // namespace oid::nn
