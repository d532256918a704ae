#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "shoring/autodiff.hpp"

namespace shoring {

// x_tilde = relu(w_x x + w_x0) + eps: strictly positive features so the
// high-order exp-log embedding is defined.
inline Var positive_transform(Tape& t, Var w_x, Var b_x, Var x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("positive_transform: eps must be positive");
  return add_scalar(t, dense_relu(t, w_x, x, b_x), eps);
}

// Linear-time second-order interaction embedding, per coordinate l:
//   h_l = 1/2 [ (sum_i w2_{li} x_i)^2 - sum_i (w2_{li} x_i)^2 ]
// Column i of w2 (k x d_e) is the factor vector of feature i. Cost O(k d_e).
inline Var second_order(Tape& t, Var w2, Var x_tilde) {
  Var s = matmul(t, w2, x_tilde);                                  // k x tau
  Var q = matmul(t, mul(t, w2, w2), mul(t, x_tilde, x_tilde));     // k x tau
  return scale(t, sub(t, mul(t, s, s), q), 0.5);
}

// Exp-log high-order embedding h_o = exp(u_o ln x_tilde); n_heads exponent
// matrices stacked row-wise into u ((n_heads*k) x d_e), summed over heads.
// Equals the monomial vector prod_i x_i^{u_{li}} wherever the exp clamp is
// inactive.
inline Var high_order_embed(Tape& t, Var u, Var x_tilde, std::size_t n_heads) {
  Var lx = log_(t, x_tilde);
  Var h = exp_(t, matmul(t, u, lx));
  return n_heads > 1 ? sum_row_blocks(t, h, n_heads) : h;
}

struct EventNetVars {
  Var w_x, b_x;  // positive transform, d_e x d_e and d_e
  Var w1;        // linear term, k x d_e
  Var w2;        // second-order factors, k x d_e
  Var u;         // ((N-2)*k) x d_e high-order exponents; invalid when N <= 2
  Var w_e, b_e;  // output affine, k x k and k
  std::size_t n_high_order = 0;  // N - 2
  double eps = 1e-7;
};

// Event network: sigma(w1 x~ + h_2nd(x~) + sum_{o=3..N} h_o(x~); w_e, w_e0),
// applied column-wise to a whole sequence (parameters shared across events).
inline Var event_forward(Tape& t, const EventNetVars& p, Var x) {
  Var xt = positive_transform(t, p.w_x, p.b_x, x, p.eps);
  Var acc = add(t, matmul(t, p.w1, xt), second_order(t, p.w2, xt));
  if (p.n_high_order > 0) acc = add(t, acc, high_order_embed(t, p.u, xt, p.n_high_order));
  return dense_relu(t, p.w_e, acc, p.b_e);
}

struct ScalarReparam {
  double z = 0.0;
  double reconstructed = 0.0;  // x^z
};

// Executable form of the scalar reparameterization identity: for x > 0,
// x != 1, y > 0, z = ln y / ln x + 1 makes x^z = x y.
inline ScalarReparam scalar_reparam_check(double x, double y) {
  if (!(x > 0.0) || x == 1.0)
    throw std::domain_error("scalar_reparam_check: x must be positive and != 1 (ln x = 0)");
  if (!(y > 0.0)) throw std::domain_error("scalar_reparam_check: y must be positive");
  double z = std::log(y) / std::log(x) + 1.0;
  double rec = std::exp(z * std::log(x));
  double want = x * y;
  if (std::abs(rec - want) > 1e-9 * std::abs(want))
    throw std::runtime_error("scalar_reparam_check: identity violated beyond tolerance");
  return {z, rec};
}

}  // namespace shoring
