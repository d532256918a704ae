#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "shoring/tensor.hpp"

namespace shoring {

// Pre-exp activations saturate here; exp(u ln x) can overflow for extreme
// exponents early in training. Forward-only saturation, zero gradient outside.
inline constexpr double kExpClampLo = -30.0;
inline constexpr double kExpClampHi = 30.0;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

inline ECMap as_mat(const Tensor& t) {
  return ECMap(t.v.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols()));
}
inline EMap as_mat(Tensor& t) {
  return EMap(t.v.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols()));
}

// Reverse-mode tape. Single-writer: one training step builds and consumes one
// tape on one thread. Nodes are recorded in topological order by construction
// (inputs before consumers); backward visits each node once in reverse.
class Tape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated at backward time
    bool requires_grad = false;
    std::function<void(Tape&)> back;  // propagates this node's grad to parents
  };

  Var leaf(Tensor t, bool requires_grad = false) {
    check_finite(t, "leaf");
    nodes_.push_back(Node{std::move(t), Tensor{}, requires_grad, nullptr});
    return Var{int(nodes_.size()) - 1};
  }

  Var constant(Tensor t) { return leaf(std::move(t), false); }

  const Tensor& value(Var v) const { return nodes_[std::size_t(v.id)].value; }
  const Tensor& grad(Var v) const { return nodes_[std::size_t(v.id)].grad; }
  Tensor& grad_ref(Var v) { return nodes_[std::size_t(v.id)].grad; }
  bool requires_grad(Var v) const { return nodes_[std::size_t(v.id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  Var record(Tensor out, const std::vector<Var>& parents, std::function<void(Tape&)> back) {
    check_finite(out, "op output");
    bool rg = false;
    for (Var p : parents) rg = rg || nodes_[std::size_t(p.id)].requires_grad;
    nodes_.push_back(Node{std::move(out), Tensor{}, rg, rg ? std::move(back) : nullptr});
    return Var{int(nodes_.size()) - 1};
  }

  // Populates d(loss)/d(node) for every requires_grad node; requires_grad
  // leaves unreachable from the loss hold zeros.
  void backward(Var loss) {
    const Node& ln = nodes_[std::size_t(loss.id)];
    if (!ln.value.is_scalar())
      throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                  ln.value.shape_str());
    for (auto& n : nodes_)
      if (n.requires_grad) n.grad = Tensor::zeros(n.value.shape);
    if (!ln.requires_grad) return;
    nodes_[std::size_t(loss.id)].grad.v[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[std::size_t(i)];
      if (n.requires_grad && n.back) n.back(*this);
    }
  }

  static void check_finite(const Tensor& t, const char* where) {
    if (!t.all_finite())
      throw std::runtime_error(std::string("non-finite value produced by ") + where);
  }

 private:
  std::vector<Node> nodes_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Records an op whose backward receives (tape, self output grad). The new
// node's id equals the tape size at call time (append-only tape).
inline Var record_op(Tape& t, Tensor out, const std::vector<Var>& parents,
                     std::function<void(Tape&, const Tensor&)> back) {
  int self_id = int(t.size());
  auto fn = std::make_shared<std::function<void(Tape&, const Tensor&)>>(std::move(back));
  return t.record(std::move(out), parents,
                  [fn, self_id](Tape& tp) { (*fn)(tp, tp.grad(Var{self_id})); });
}

inline void accumulate(Tape& t, Var p, const Tensor& delta) {
  if (!t.requires_grad(p)) return;
  Tensor& g = t.grad_ref(p);
  for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += delta.v[i];
}

}  // namespace detail

// ---- primitives ----

inline Var matmul(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  detail::require(A.shape.size() == 2 && B.shape.size() == 2 && A.cols() == B.rows(),
                  "matmul: incompatible shapes " + A.shape_str() + " x " + B.shape_str());
  Tensor C({A.rows(), B.cols()});
  as_mat(C) = as_mat(A) * as_mat(B);
  return detail::record_op(t, std::move(C), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& Av = tp.value(a);
    const Tensor& Bv = tp.value(b);
    if (tp.requires_grad(a)) as_mat(tp.grad_ref(a)) += as_mat(g) * as_mat(Bv).transpose();
    if (tp.requires_grad(b)) as_mat(tp.grad_ref(b)) += as_mat(Av).transpose() * as_mat(g);
  });
}

inline Var add(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  detail::require(A.same_shape(B), "add: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.v.size(); ++i) C.v[i] = A.v[i] + B.v[i];
  return detail::record_op(t, std::move(C), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    detail::accumulate(tp, a, g);
    detail::accumulate(tp, b, g);
  });
}

inline Var sub(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  detail::require(A.same_shape(B), "sub: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.v.size(); ++i) C.v[i] = A.v[i] - B.v[i];
  return detail::record_op(t, std::move(C), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    detail::accumulate(tp, a, g);
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_ref(b);
      for (std::size_t i = 0; i < gb.v.size(); ++i) gb.v[i] -= g.v[i];
    }
  });
}

// elementwise (Hadamard) product
inline Var mul(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  detail::require(A.same_shape(B), "mul: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.v.size(); ++i) C.v[i] = A.v[i] * B.v[i];
  return detail::record_op(t, std::move(C), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& Av = tp.value(a);
    const Tensor& Bv = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_ref(a);
      for (std::size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += g.v[i] * Bv.v[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_ref(b);
      for (std::size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += g.v[i] * Av.v[i];
    }
  });
}

inline Var scale(Tape& t, Var a, double s) {
  Tensor C = t.value(a);
  for (auto& x : C.v) x *= s;
  return detail::record_op(t, std::move(C), {a}, [a, s](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += s * g.v[i];
  });
}

inline Var add_scalar(Tape& t, Var a, double s) {
  Tensor C = t.value(a);
  for (auto& x : C.v) x += s;
  return detail::record_op(t, std::move(C), {a},
                           [a](Tape& tp, const Tensor& g) { detail::accumulate(tp, a, g); });
}

inline Var relu(Tape& t, Var a) {
  Tensor C = t.value(a);
  for (auto& x : C.v) x = x > 0.0 ? x : 0.0;
  return detail::record_op(t, std::move(C), {a}, [a](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    const Tensor& Av = tp.value(a);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < ga.v.size(); ++i)
      if (Av.v[i] > 0.0) ga.v[i] += g.v[i];
  });
}

// exp with pre-activation clamp to [kExpClampLo, kExpClampHi]; zero gradient
// in the saturated region.
inline Var exp_(Tape& t, Var a) {
  const Tensor& A = t.value(a);
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.v.size(); ++i) {
    double x = A.v[i];
    x = x < kExpClampLo ? kExpClampLo : (x > kExpClampHi ? kExpClampHi : x);
    C.v[i] = std::exp(x);
  }
  return detail::record_op(t, std::move(C), {a}, [a](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    const Tensor& Av = tp.value(a);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < ga.v.size(); ++i) {
      double x = Av.v[i];
      if (x > kExpClampLo && x < kExpClampHi) ga.v[i] += g.v[i] * std::exp(x);
    }
  });
}

inline Var log_(Tape& t, Var a) {
  const Tensor& A = t.value(a);
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.v.size(); ++i) {
    if (!(A.v[i] > 0.0))
      throw std::domain_error("log: non-positive input at flat index " + std::to_string(i) +
                              " (value " + std::to_string(A.v[i]) + ")");
    C.v[i] = std::log(A.v[i]);
  }
  return detail::record_op(t, std::move(C), {a}, [a](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    const Tensor& Av = tp.value(a);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += g.v[i] / Av.v[i];
  });
}

// scalar clamp: forward saturation, zero gradient outside [lo, hi]
inline Var clamp(Tape& t, Var a, double lo, double hi) {
  const Tensor& A = t.value(a);
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.v.size(); ++i)
    C.v[i] = A.v[i] < lo ? lo : (A.v[i] > hi ? hi : A.v[i]);
  return detail::record_op(t, std::move(C), {a}, [a, lo, hi](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    const Tensor& Av = tp.value(a);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < ga.v.size(); ++i)
      if (Av.v[i] > lo && Av.v[i] < hi) ga.v[i] += g.v[i];
  });
}

inline Var sum_all(Tape& t, Var a) {
  double s = 0.0;
  for (double x : t.value(a).v) s += x;
  return detail::record_op(t, Tensor::scalar(s), {a}, [a](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    Tensor& ga = tp.grad_ref(a);
    for (auto& x : ga.v) x += g.v[0];
  });
}

inline Var mean_all(Tape& t, Var a) {
  const Tensor& A = t.value(a);
  double s = 0.0;
  for (double x : A.v) s += x;
  double inv = 1.0 / double(A.numel());
  return detail::record_op(t, Tensor::scalar(s * inv), {a}, [a, inv](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    Tensor& ga = tp.grad_ref(a);
    for (auto& x : ga.v) x += g.v[0] * inv;
  });
}

inline Var transpose(Tape& t, Var a) {
  const Tensor& A = t.value(a);
  detail::require(A.shape.size() == 2, "transpose: need 2-D tensor");
  Tensor C({A.cols(), A.rows()});
  as_mat(C) = as_mat(A).transpose();
  return detail::record_op(t, std::move(C), {a}, [a](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) as_mat(tp.grad_ref(a)) += as_mat(g).transpose();
  });
}

inline Var reshape(Tape& t, Var a, std::vector<std::size_t> shape) {
  const Tensor& A = t.value(a);
  detail::require(Tensor::numel_of(shape) == A.numel(), "reshape: numel mismatch");
  Tensor C(std::move(shape), A.v);
  return detail::record_op(t, std::move(C), {a}, [a](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += g.v[i];
  });
}

// vertical stack of 2-D blocks with equal column counts
inline Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_rows: empty input list");
  std::size_t ncols = t.value(parts[0]).cols();
  std::size_t nrows = 0;
  for (Var p : parts) {
    detail::require(t.value(p).cols() == ncols, "concat_rows: column count mismatch");
    nrows += t.value(p).rows();
  }
  Tensor C({nrows, ncols});
  std::size_t r = 0;
  for (Var p : parts) {
    const Tensor& P = t.value(p);
    std::copy(P.v.begin(), P.v.end(), C.v.begin() + long(r * ncols));
    r += P.rows();
  }
  return detail::record_op(t, std::move(C), parts, [parts, ncols](Tape& tp, const Tensor& g) {
    std::size_t r = 0;
    for (Var p : parts) {
      std::size_t pr = tp.value(p).rows();
      if (tp.requires_grad(p)) {
        Tensor& gp = tp.grad_ref(p);
        for (std::size_t i = 0; i < pr * ncols; ++i) gp.v[i] += g.v[r * ncols + i];
      }
      r += pr;
    }
  });
}

// broadcast a length-m vector (m or m x 1) across n columns -> m x n
inline Var broadcast_cols(Tape& t, Var a, std::size_t n) {
  const Tensor& A = t.value(a);
  std::size_t m = A.numel();
  detail::require(A.shape.size() == 1 || A.cols() == 1, "broadcast_cols: need a column vector");
  Tensor C({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C.at(i, j) = A.v[i];
  return detail::record_op(t, std::move(C), {a}, [a, m, n](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g.v[i * n + j];
      ga.v[i] += s;
    }
  });
}

// A (m x n) + column vector b (m) broadcast over columns
inline Var add_colvec(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  detail::require(B.numel() == A.rows(), "add_colvec: vector length must equal row count");
  Tensor C = A;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) C.at(i, j) += B.v[i];
  return detail::record_op(t, std::move(C), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    detail::accumulate(tp, a, g);
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_ref(b);
      std::size_t n = g.cols();
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g.v[i * n + j];
        gb.v[i] += s;
      }
    }
  });
}

// A (m x n) + row vector b (n) broadcast over rows
inline Var add_rowvec(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  detail::require(B.numel() == A.cols(), "add_rowvec: vector length must equal column count");
  Tensor C = A;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) C.at(i, j) += B.v[j];
  return detail::record_op(t, std::move(C), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    detail::accumulate(tp, a, g);
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_ref(b);
      std::size_t n = g.cols();
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) gb.v[j] += g.v[i * n + j];
    }
  });
}

// Row-stochastic softmax over valid columns; masked columns receive exactly 0.
// Stabilized by subtracting the row max over valid entries only (a -inf
// sentinel would poison the max). An all-invalid mask yields all-zero weights
// so padded-only sequences do not abort training.
inline Var masked_softmax(Tape& t, Var scores, const std::vector<double>& mask) {
  const Tensor& S = t.value(scores);
  detail::require(S.shape.size() == 2, "masked_softmax: scores must be 2-D");
  std::size_t rows = S.rows(), cols = S.cols();
  detail::require(mask.size() == cols, "masked_softmax: mask length must equal column count");
  Tensor W({rows, cols});
  bool any_valid = false;
  for (double m : mask) any_valid = any_valid || m != 0.0;
  if (any_valid) {
    for (std::size_t i = 0; i < rows; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < cols; ++j)
        if (mask[j] != 0.0 && S.at(i, j) > mx) mx = S.at(i, j);
      double z = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        if (mask[j] != 0.0) {
          W.at(i, j) = std::exp(S.at(i, j) - mx);
          z += W.at(i, j);
        }
      }
      for (std::size_t j = 0; j < cols; ++j)
        if (mask[j] != 0.0) W.at(i, j) /= z;
    }
  }
  return detail::record_op(t, std::move(W), {scores},
                           [scores, mask](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(scores)) return;
    // y_j (g_j - sum_k g_k y_k) per row, zero at masked columns; the softmax
    // rows are recomputed from the stored scores.
    const Tensor& S = tp.value(scores);
    std::size_t rows = S.rows(), cols = S.cols();
    bool any_valid = false;
    for (double m : mask) any_valid = any_valid || m != 0.0;
    if (!any_valid) return;
    Tensor& gs = tp.grad_ref(scores);
    std::vector<double> y(cols);
    for (std::size_t i = 0; i < rows; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < cols; ++j)
        if (mask[j] != 0.0 && S.at(i, j) > mx) mx = S.at(i, j);
      double z = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        y[j] = mask[j] != 0.0 ? std::exp(S.at(i, j) - mx) : 0.0;
        z += y[j];
      }
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        y[j] /= z;
        dot += g.at(i, j) * y[j];
      }
      for (std::size_t j = 0; j < cols; ++j)
        if (mask[j] != 0.0) gs.at(i, j) += y[j] * (g.at(i, j) - dot);
    }
  });
}

// out (w x n): column j is row idx[j] of the table (V x w). Grad scatters
// back into the selected rows. Backs trainable categorical embeddings.
inline Var embed_cols(Tape& t, Var table, const std::vector<int>& idx) {
  const Tensor& T = t.value(table);
  detail::require(T.shape.size() == 2, "embed_cols: table must be 2-D");
  std::size_t V = T.rows(), w = T.cols(), n = idx.size();
  for (int i : idx)
    detail::require(i >= 0 && std::size_t(i) < V, "embed_cols: index out of range");
  Tensor C({w, n});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t r = 0; r < w; ++r) C.at(r, j) = T.at(std::size_t(idx[j]), r);
  return detail::record_op(t, std::move(C), {table}, [table, idx, w, n](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(table)) return;
    Tensor& gt = tp.grad_ref(table);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t r = 0; r < w; ++r) gt.at(std::size_t(idx[j]), r) += g.at(r, j);
  });
}

// Sparse assignment-matrix product p c^T done as a scatter-add: row e of the
// output accumulates the embedding columns of every position containing
// entity e. groups[j] lists the entity rows present at position j (empty at
// padded positions). Asserted equal to the dense product in tests.
inline Var scatter_groups(Tape& t, Var c, const std::vector<std::vector<int>>& groups,
                          std::size_t d_p) {
  const Tensor& C = t.value(c);
  detail::require(C.shape.size() == 2, "scatter_groups: embeddings must be 2-D (k x tau)");
  detail::require(groups.size() == C.cols(), "scatter_groups: one group list per position");
  std::size_t k = C.rows(), tau = C.cols();
  Tensor E({d_p, k});
  for (std::size_t j = 0; j < tau; ++j)
    for (int e : groups[j]) {
      detail::require(e >= 0 && std::size_t(e) < d_p, "scatter_groups: entity row out of range");
      for (std::size_t r = 0; r < k; ++r) E.at(std::size_t(e), r) += C.at(r, j);
    }
  return detail::record_op(t, std::move(E), {c}, [c, groups, k, tau](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(c)) return;
    Tensor& gc = tp.grad_ref(c);
    for (std::size_t j = 0; j < tau; ++j)
      for (int e : groups[j])
        for (std::size_t r = 0; r < k; ++r) gc.at(r, j) += g.at(std::size_t(e), r);
  });
}

// A ((g*k) x n) -> sum of the g stacked (k x n) blocks
inline Var sum_row_blocks(Tape& t, Var a, std::size_t nblocks) {
  const Tensor& A = t.value(a);
  detail::require(nblocks >= 1 && A.rows() % nblocks == 0,
                  "sum_row_blocks: row count not divisible by block count");
  std::size_t k = A.rows() / nblocks, n = A.cols();
  Tensor C({k, n});
  for (std::size_t b = 0; b < nblocks; ++b)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) C.at(i, j) += A.at(b * k + i, j);
  return detail::record_op(t, std::move(C), {a}, [a, nblocks, k, n](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(a)) return;
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t b = 0; b < nblocks; ++b)
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) ga.at(b * k + i, j) += g.at(i, j);
  });
}

// affine helper: relu(W x + b), the paper-wide shallow nonlinearity sigma
inline Var dense_relu(Tape& t, Var W, Var x, Var b) {
  return relu(t, add_colvec(t, matmul(t, W, x), b));
}

inline Var affine(Tape& t, Var W, Var x, Var b) {
  return add_colvec(t, matmul(t, W, x), b);
}

// mean squared error between two same-shape tensors
inline Var mse(Tape& t, Var pred, Var target) {
  Var d = sub(t, pred, target);
  return mean_all(t, mul(t, d, d));
}

// ---- uniform dispatch over the primitive identifier set ----

enum class OpKind { MatMul, Add, Mul, Relu, Exp, Log, SumAll, MeanAll, ConcatRows, Broadcast, Clamp };

inline Var forward_eval(Tape& t, OpKind kind, const std::vector<Var>& inputs,
                        double arg0 = 0.0, double arg1 = 0.0) {
  auto need = [&](std::size_t n) {
    detail::require(inputs.size() == n, "forward_eval: wrong input arity");
  };
  switch (kind) {
    case OpKind::MatMul: need(2); return matmul(t, inputs[0], inputs[1]);
    case OpKind::Add: need(2); return add(t, inputs[0], inputs[1]);
    case OpKind::Mul: need(2); return mul(t, inputs[0], inputs[1]);
    case OpKind::Relu: need(1); return relu(t, inputs[0]);
    case OpKind::Exp: need(1); return exp_(t, inputs[0]);
    case OpKind::Log: need(1); return log_(t, inputs[0]);
    case OpKind::SumAll: need(1); return sum_all(t, inputs[0]);
    case OpKind::MeanAll: need(1); return mean_all(t, inputs[0]);
    case OpKind::ConcatRows: return concat_rows(t, inputs);
    case OpKind::Broadcast: need(1); return broadcast_cols(t, inputs[0], std::size_t(arg0));
    case OpKind::Clamp: need(1); return clamp(t, inputs[0], arg0, arg1);
  }
  throw std::invalid_argument("forward_eval: unknown op kind");
}

}  // namespace shoring
