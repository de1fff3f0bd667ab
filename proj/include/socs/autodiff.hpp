#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "socs/errors.hpp"

namespace socs::ad {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
// order, so one reverse sweep respects every data dependency. Gradient
// buffers stay empty until the sweep touches them.
template <typename S>
class Tape {
 public:
  struct Node {
    MatX<S> value;
    MatX<S> grad;
    std::function<void(Tape&, const MatX<S>&)> backward;  // (tape, dOut)
    bool needs_grad = false;
  };

  int add_leaf(MatX<S> value, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs_grad});
    return int(nodes_.size()) - 1;
  }

  int add_op(MatX<S> value, bool needs_grad,
             std::function<void(Tape&, const MatX<S>&)> backward) {
    nodes_.push_back(Node{std::move(value), {},
                          needs_grad ? std::move(backward) : nullptr,
                          needs_grad});
    return int(nodes_.size()) - 1;
  }

  const MatX<S>& value(int id) const { return nodes_[std::size_t(id)].value; }
  bool needs_grad(int id) const { return nodes_[std::size_t(id)].needs_grad; }

  // Zero-filled on first access.
  const MatX<S>& grad(int id) {
    Node& n = nodes_[std::size_t(id)];
    if (n.grad.size() == 0)
      n.grad = MatX<S>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  template <typename Expr>
  void accum(int id, const Expr& e) {
    Node& n = nodes_[std::size_t(id)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0)
      n.grad = e;
    else
      n.grad += e;
  }

  void backward(int loss_id) {
    Node& loss = nodes_[std::size_t(loss_id)];
    if (loss.value.rows() != 1 || loss.value.cols() != 1)
      throw ShapeMismatch("backward expects a 1x1 loss node");
    accum(loss_id, MatX<S>::Constant(1, 1, S(1)));
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[std::size_t(id)];
      if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  int id = -1;

  const MatX<S>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename S>
Var<S> constant(Tape<S>& tape, MatX<S> value) {
  return {&tape, tape.add_leaf(std::move(value), false)};
}

template <typename S>
Var<S> param(Tape<S>& tape, MatX<S> value) {
  return {&tape, tape.add_leaf(std::move(value), true)};
}

namespace detail {
template <typename S>
void check_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(op) + ": operand shapes differ");
}
}  // namespace detail

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "add");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return {&t, t.add_op(t.value(ia) + t.value(ib), ng,
                       [ia, ib](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g);
                         tp.accum(ib, g);
                       })};
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "sub");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return {&t, t.add_op(t.value(ia) - t.value(ib), ng,
                       [ia, ib](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g);
                         tp.accum(ib, -g);
                       })};
}

template <typename S>
Var<S> cmul(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "cmul");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return {&t, t.add_op(t.value(ia).cwiseProduct(t.value(ib)), ng,
                       [ia, ib](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g.cwiseProduct(tp.value(ib)));
                         tp.accum(ib, g.cwiseProduct(tp.value(ia)));
                       })};
}

template <typename S>
Var<S> scale(const Var<S>& a, S k) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  return {&t, t.add_op(t.value(ia) * k, t.needs_grad(ia),
                       [ia, k](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g * k);
                       })};
}

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  if (a.cols() != b.rows())
    throw ShapeMismatch("matmul: inner dimensions differ");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return {&t, t.add_op(t.value(ia) * t.value(ib), ng,
                       [ia, ib](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g * tp.value(ib).transpose());
                         tp.accum(ib, tp.value(ia).transpose() * g);
                       })};
}

template <typename S>
Var<S> transpose(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  return {&t, t.add_op(t.value(ia).transpose(), t.needs_grad(ia),
                       [ia](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g.transpose());
                       })};
}

template <typename S>
Var<S> relu(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  return {&t, t.add_op(t.value(ia).cwiseMax(S(0)), t.needs_grad(ia),
                       [ia](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, (tp.value(ia).array() > S(0))
                                          .template cast<S>()
                                          .matrix()
                                          .cwiseProduct(g));
                       })};
}

// out = a with bias (1 x c) added to every row.
template <typename S>
Var<S> add_row_broadcast(const Var<S>& a, const Var<S>& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeMismatch("add_row_broadcast: bias must be 1 x cols(a)");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ibias = bias.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ibias);
  MatX<S> v = t.value(ia);
  v.rowwise() += t.value(ibias).row(0);
  return {&t, t.add_op(std::move(v), ng,
                       [ia, ibias](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, g);
                         tp.accum(ibias, g.colwise().sum());
                       })};
}

// out rows are a's rows at `idx`; duplicates allowed. Backward scatter-adds.
template <typename S>
Var<S> gather_rows(const Var<S>& a, std::vector<int> idx) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const Eigen::Index n = a.rows();
  for (int i : idx)
    if (i < 0 || Eigen::Index(i) >= n)
      throw ShapeMismatch("gather_rows: index out of range");
  MatX<S> v(Eigen::Index(idx.size()), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    v.row(Eigen::Index(r)) = t.value(ia).row(idx[r]);
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, idx = std::move(idx)](Tape<S>& tp,
                                                  const MatX<S>& g) {
                         MatX<S> da = MatX<S>::Zero(tp.value(ia).rows(),
                                                    tp.value(ia).cols());
                         for (std::size_t r = 0; r < idx.size(); ++r)
                           da.row(idx[r]) += g.row(Eigen::Index(r));
                         tp.accum(ia, da);
                       })};
}

// Row i of a repeated k consecutive times: (n x c) -> (n*k x c).
template <typename S>
Var<S> repeat_rows(const Var<S>& a, int k) {
  if (k < 1) throw ShapeMismatch("repeat_rows: k must be >= 1");
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const Eigen::Index n = a.rows(), c = a.cols();
  MatX<S> v(n * k, c);
  for (Eigen::Index i = 0; i < n; ++i)
    v.middleRows(i * k, k) = t.value(ia).row(i).replicate(k, 1);
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, k](Tape<S>& tp, const MatX<S>& g) {
                         const Eigen::Index n2 = tp.value(ia).rows();
                         MatX<S> da(n2, tp.value(ia).cols());
                         for (Eigen::Index i = 0; i < n2; ++i)
                           da.row(i) = g.middleRows(i * k, k).colwise().sum();
                         tp.accum(ia, da);
                       })};
}

// Sum of each consecutive group of k rows: (n*k x c) -> (n x c).
template <typename S>
Var<S> group_sum_rows(const Var<S>& a, int k) {
  if (k < 1 || a.rows() % k != 0)
    throw ShapeMismatch("group_sum_rows: rows not divisible by k");
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const Eigen::Index n = a.rows() / k, c = a.cols();
  MatX<S> v(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    v.row(i) = t.value(ia).middleRows(i * k, k).colwise().sum();
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, k](Tape<S>& tp, const MatX<S>& g) {
                         MatX<S> da(tp.value(ia).rows(), tp.value(ia).cols());
                         for (Eigen::Index i = 0; i < g.rows(); ++i)
                           da.middleRows(i * k, k) = g.row(i).replicate(k, 1);
                         tp.accum(ia, da);
                       })};
}

// Columnwise max of each consecutive group of k rows; ties take the first.
template <typename S>
Var<S> group_max_rows(const Var<S>& a, int k) {
  if (k < 1 || a.rows() % k != 0)
    throw ShapeMismatch("group_max_rows: rows not divisible by k");
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const Eigen::Index n = a.rows() / k, c = a.cols();
  MatX<S> v(n, c);
  std::vector<int> argmax(std::size_t(n * c));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < c; ++j) {
      Eigen::Index best = 0;
      S best_v = t.value(ia)(i * k, j);
      for (Eigen::Index r = 1; r < k; ++r)
        if (t.value(ia)(i * k + r, j) > best_v) {
          best_v = t.value(ia)(i * k + r, j);
          best = r;
        }
      v(i, j) = best_v;
      argmax[std::size_t(i * c + j)] = int(best);
    }
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, k, argmax = std::move(argmax)](
                           Tape<S>& tp, const MatX<S>& g) {
                         MatX<S> da = MatX<S>::Zero(tp.value(ia).rows(),
                                                    tp.value(ia).cols());
                         const Eigen::Index c2 = g.cols();
                         for (Eigen::Index i = 0; i < g.rows(); ++i)
                           for (Eigen::Index j = 0; j < c2; ++j)
                             da(i * k + argmax[std::size_t(i * c2 + j)], j) +=
                                 g(i, j);
                         tp.accum(ia, da);
                       })};
}

// Row-major regrouping (n*k x 1) -> (n x k).
template <typename S>
Var<S> fold_rows(const Var<S>& a, int k) {
  if (a.cols() != 1 || k < 1 || a.rows() % k != 0)
    throw ShapeMismatch("fold_rows: need a column vector with rows % k == 0");
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const Eigen::Index n = a.rows() / k;
  MatX<S> v(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    v.row(i) = t.value(ia).col(0).segment(i * k, k).transpose();
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, k](Tape<S>& tp, const MatX<S>& g) {
                         MatX<S> da(tp.value(ia).rows(), 1);
                         for (Eigen::Index i = 0; i < g.rows(); ++i)
                           da.col(0).segment(i * k, k) = g.row(i).transpose();
                         tp.accum(ia, da);
                       })};
}

// Inverse of fold_rows: (n x k) -> (n*k x 1), row-major order.
template <typename S>
Var<S> unfold_rows(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const Eigen::Index n = a.rows(), k = a.cols();
  MatX<S> v(n * k, 1);
  for (Eigen::Index i = 0; i < n; ++i)
    v.col(0).segment(i * k, k) = t.value(ia).row(i).transpose();
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, k](Tape<S>& tp, const MatX<S>& g) {
                         const Eigen::Index n2 = tp.value(ia).rows();
                         MatX<S> da(n2, k);
                         for (Eigen::Index i = 0; i < n2; ++i)
                           da.row(i) = g.col(0).segment(i * k, k).transpose();
                         tp.accum(ia, da);
                       })};
}

// Each row of a scaled by the matching entry of col (r x 1).
template <typename S>
Var<S> mul_col_broadcast(const Var<S>& a, const Var<S>& col) {
  if (col.cols() != 1 || col.rows() != a.rows())
    throw ShapeMismatch("mul_col_broadcast: col must be rows(a) x 1");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ic = col.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ic);
  return {&t, t.add_op((t.value(ia).array().colwise() *
                        t.value(ic).col(0).array())
                           .matrix(),
                       ng, [ia, ic](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, (g.array().colwise() *
                                       tp.value(ic).col(0).array())
                                          .matrix());
                         tp.accum(ic, g.cwiseProduct(tp.value(ia))
                                          .rowwise()
                                          .sum());
                       })};
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: no operands");
  Tape<S>& t = *parts[0].tape;
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool ng = false;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw ShapeMismatch("concat_cols: row counts differ");
    cols += p.cols();
    ng = ng || t.needs_grad(p.id);
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  MatX<S> v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return {&t, t.add_op(std::move(v), ng,
                       [ids = std::move(ids), widths = std::move(widths)](
                           Tape<S>& tp, const MatX<S>& g) {
                         Eigen::Index at2 = 0;
                         for (std::size_t i = 0; i < ids.size(); ++i) {
                           tp.accum(ids[i], g.middleCols(at2, widths[i]));
                           at2 += widths[i];
                         }
                       })};
}

// Stack b under a: (n x c) + (m x c) -> (n+m x c).
template <typename S>
Var<S> concat_rows(const Var<S>& a, const Var<S>& b) {
  if (a.cols() != b.cols())
    throw ShapeMismatch("concat_rows: column counts differ");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  MatX<S> v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.value();
  v.bottomRows(b.rows()) = b.value();
  return {&t, t.add_op(std::move(v), ng,
                       [ia, ib](Tape<S>& tp, const MatX<S>& g) {
                         const Eigen::Index na = tp.value(ia).rows();
                         tp.accum(ia, g.topRows(na));
                         tp.accum(ib, g.bottomRows(g.rows() - na));
                       })};
}

template <typename S>
Var<S> rowwise_sum(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  return {&t, t.add_op(t.value(ia).rowwise().sum(), t.needs_grad(ia),
                       [ia](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia,
                                  g.col(0).replicate(1, tp.value(ia).cols()));
                       })};
}

// Mean over rows: (n x c) -> (1 x c).
template <typename S>
Var<S> colwise_mean(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  const S inv = S(1) / S(a.rows());
  return {&t, t.add_op(t.value(ia).colwise().mean(), t.needs_grad(ia),
                       [ia, inv](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, (g * inv).replicate(
                                          tp.value(ia).rows(), 1));
                       })};
}

template <typename S>
Var<S> sum_all(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  return {&t, t.add_op(MatX<S>::Constant(1, 1, t.value(ia).sum()),
                       t.needs_grad(ia),
                       [ia](Tape<S>& tp, const MatX<S>& g) {
                         tp.accum(ia, MatX<S>::Constant(
                                          tp.value(ia).rows(),
                                          tp.value(ia).cols(), g(0, 0)));
                       })};
}

template <typename S>
Var<S> softmax_rows(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  MatX<S> v = t.value(ia);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const S m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  const int id = int(t.size());
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, id](Tape<S>& tp, const MatX<S>& g) {
                         const MatX<S>& y = tp.value(id);
                         MatX<S> da(y.rows(), y.cols());
                         for (Eigen::Index i = 0; i < y.rows(); ++i) {
                           const S dot = g.row(i).dot(y.row(i));
                           da.row(i) = (y.row(i).array() *
                                        (g.row(i).array() - dot))
                                           .matrix();
                         }
                         tp.accum(ia, da);
                       })};
}

// Per-row LayerNorm with affine gain/bias (both 1 x c).
template <typename S>
Var<S> layer_norm_rows(const Var<S>& a, const Var<S>& gain,
                       const Var<S>& bias, S eps = S(1e-5)) {
  if (gain.rows() != 1 || gain.cols() != a.cols() || bias.rows() != 1 ||
      bias.cols() != a.cols())
    throw ShapeMismatch("layer_norm_rows: gain/bias must be 1 x cols(a)");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ig = gain.id, ib = bias.id;
  const bool ng =
      t.needs_grad(ia) || t.needs_grad(ig) || t.needs_grad(ib);
  const Eigen::Index n = a.rows(), c = a.cols();
  MatX<S> xhat(n, c);
  MatX<S> inv_sigma(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mu = t.value(ia).row(i).mean();
    const S var = (t.value(ia).row(i).array() - mu).square().mean();
    const S is = S(1) / std::sqrt(var + eps);
    inv_sigma(i, 0) = is;
    xhat.row(i) = (t.value(ia).row(i).array() - mu) * is;
  }
  MatX<S> v =
      (xhat.array().rowwise() * t.value(ig).row(0).array()).matrix();
  v.rowwise() += t.value(ib).row(0);
  return {&t,
          t.add_op(std::move(v), ng,
                   [ia, ig, ib, xhat = std::move(xhat),
                    inv_sigma = std::move(inv_sigma)](Tape<S>& tp,
                                                      const MatX<S>& g) {
                     const Eigen::Index n2 = xhat.rows(), c2 = xhat.cols();
                     MatX<S> da(n2, c2);
                     for (Eigen::Index i = 0; i < n2; ++i) {
                       const auto h = g.row(i).array() *
                                      tp.value(ig).row(0).array();
                       const S mh = h.mean();
                       const S mhx = (h * xhat.row(i).array()).mean();
                       da.row(i) = ((h - mh - xhat.row(i).array() * mhx) *
                                    inv_sigma(i, 0))
                                       .matrix();
                     }
                     tp.accum(ia, da);
                     tp.accum(ig, g.cwiseProduct(xhat).colwise().sum());
                     tp.accum(ib, g.colwise().sum());
                   })};
}

// Fused per-row softmax + cross-entropy against integer labels.
// Returns (n x 1) of -log softmax(row)[label].
template <typename S>
Var<S> softmax_xent_rows(const Var<S>& logits, std::vector<int> labels) {
  Tape<S>& t = *logits.tape;
  const int ia = logits.id;
  const Eigen::Index n = logits.rows(), c = logits.cols();
  if (Eigen::Index(labels.size()) != n)
    throw ShapeMismatch("softmax_xent_rows: one label per row required");
  for (int l : labels)
    if (l < 0 || Eigen::Index(l) >= c)
      throw ShapeMismatch("softmax_xent_rows: label out of range");
  MatX<S> probs(n, c);
  MatX<S> v(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S m = t.value(ia).row(i).maxCoeff();
    const auto shifted = (t.value(ia).row(i).array() - m).eval();
    const S lse = std::log(shifted.exp().sum());
    probs.row(i) = (shifted - lse).exp();
    v(i, 0) = lse - shifted(labels[std::size_t(i)]);
  }
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, labels = std::move(labels),
                        probs = std::move(probs)](Tape<S>& tp,
                                                  const MatX<S>& g) {
                         MatX<S> da = probs;
                         for (Eigen::Index i = 0; i < da.rows(); ++i) {
                           da(i, labels[std::size_t(i)]) -= S(1);
                           da.row(i) *= g(i, 0);
                         }
                         tp.accum(ia, da);
                       })};
}

// Euclidean norm of each row: (n x c) -> (n x 1). Gradient is zero at the
// origin (subgradient choice).
template <typename S>
Var<S> row_l2_norms(const Var<S>& a) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  MatX<S> v = t.value(ia).rowwise().norm();
  const int id = int(t.size());
  return {&t, t.add_op(std::move(v), t.needs_grad(ia),
                       [ia, id](Tape<S>& tp, const MatX<S>& g) {
                         const MatX<S>& norms = tp.value(id);
                         MatX<S> da = tp.value(ia);
                         for (Eigen::Index i = 0; i < da.rows(); ++i) {
                           if (norms(i, 0) > S(0))
                             da.row(i) *= g(i, 0) / norms(i, 0);
                           else
                             da.row(i).setZero();
                         }
                         tp.accum(ia, da);
                       })};
}

}  // namespace socs::ad
