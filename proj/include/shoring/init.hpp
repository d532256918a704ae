#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

#include "shoring/autodiff.hpp"
#include "shoring/rng.hpp"
#include "shoring/tensor.hpp"

namespace shoring {

// Orthogonal initialization via QR of a seeded Gaussian draw. Tall-or-square
// shapes get orthonormal columns (Q^T Q = I); wide shapes orthonormal rows
// (Q Q^T = I). Signs are fixed by forcing the diagonal of R positive so the
// result is a deterministic function of (shape, seed).
inline Tensor orthogonal_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("orthogonal_init: empty shape");
  bool wide = cols > rows;
  std::size_t r = wide ? cols : rows, c = wide ? rows : cols;

  Rng rng(seed);
  EMat a{Eigen::Index(r), Eigen::Index(c)};
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();

  Eigen::HouseholderQR<EMat> qr(a);
  EMat q = qr.householderQ() * EMat::Identity(Eigen::Index(r), Eigen::Index(c));
  EMat rmat = qr.matrixQR().topRows(Eigen::Index(c)).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);

  Tensor out({rows, cols});
  if (wide)
    as_mat(out) = q.transpose();
  else
    as_mat(out) = q;
  return out;
}

inline Tensor gaussian_init(std::vector<std::size_t> shape, double sigma, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (auto& x : t.v) x = rng.normal(0.0, sigma);
  return t;
}

}  // namespace shoring
