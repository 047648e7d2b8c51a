// SPDX-License-Identifier: Apache-2.0
//
// Singular value decomposition of 3x3 matrices.
//
// The right singular vectors come from a cyclic Jacobi eigensolver applied
// to A^T A; the left ones from a Gram-Schmidt factorization of A V. Column
// signs of V are canonicalized (largest-magnitude component positive) so the
// decomposition is a continuous function of A away from repeated singular
// values, which keeps finite-difference checks meaningful.

#ifndef RIGIDOCK_SVD3_HPP_
#define RIGIDOCK_SVD3_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "rigidock/autodiff.hpp"

namespace rigidock {

template <class Scalar>
struct Svd3 {
  Eigen::Matrix<Scalar, 3, 3> U;
  Eigen::Matrix<Scalar, 3, 1> S;  // descending, nonnegative
  Eigen::Matrix<Scalar, 3, 3> V;

  Eigen::Matrix<Scalar, 3, 3> reconstruct() const {
    return U * S.asDiagonal() * V.transpose();
  }
};

constexpr int kSvd3MaxSweeps = 30;

namespace internal {

template <class Scalar>
void jacobi_eigen_sym3(Eigen::Matrix<Scalar, 3, 3> &m,
                       Eigen::Matrix<Scalar, 3, 3> &v) {
  v.setIdentity();
  const Scalar scale = m.norm();
  if (scale == Scalar(0))
    return;
  constexpr std::array<std::array<int, 2>, 3> kPairs { { { 0, 1 },
                                                         { 0, 2 },
                                                         { 1, 2 } } };
  for (int sweep = 0; sweep < kSvd3MaxSweeps; ++sweep) {
    const Scalar off = std::sqrt(m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2)
                                 + m(1, 2) * m(1, 2));
    if (off <= std::numeric_limits<Scalar>::min()
        || off <= scale * std::numeric_limits<Scalar>::epsilon() * 1e-3)
      break;
    for (auto [p, q]: kPairs) {
      const Scalar apq = m(p, q);
      if (apq == Scalar(0))
        continue;
      const Scalar theta = (m(q, q) - m(p, p)) / (2 * apq);
      const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1))
                       / (std::abs(theta) + std::sqrt(theta * theta + 1));
      const Scalar c = 1 / std::sqrt(t * t + 1);
      const Scalar s = t * c;
      Eigen::Matrix<Scalar, 3, 3> j = Eigen::Matrix<Scalar, 3, 3>::Identity();
      j(p, p) = c;
      j(q, q) = c;
      j(p, q) = s;
      j(q, p) = -s;
      m = j.transpose() * m * j;
      m(p, q) = m(q, p) = 0;
      v = v * j;
    }
  }
}

template <class Scalar>
Eigen::Matrix<Scalar, 3, 1> any_orthogonal(const Eigen::Matrix<Scalar, 3, 1> &u) {
  Eigen::Index k;
  u.cwiseAbs().minCoeff(&k);
  Eigen::Matrix<Scalar, 3, 1> e = Eigen::Matrix<Scalar, 3, 1>::Zero();
  e[k] = 1;
  return u.cross(e).normalized();
}

}  // namespace internal

template <class Derived>
Svd3<typename Derived::Scalar> svd3(const Eigen::MatrixBase<Derived> &a_in) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, 3, 3>;
  using Vec = Eigen::Matrix<Scalar, 3, 1>;
  static_assert(Derived::RowsAtCompileTime == 3
                    || Derived::RowsAtCompileTime == Eigen::Dynamic,
                "svd3 expects a 3x3 matrix");
  if (a_in.rows() != 3 || a_in.cols() != 3)
    throw ShapeError("svd3: expected 3x3 input");
  const Mat a = a_in;
  if (!a.allFinite())
    throw NumericalError("svd3: non-finite input");

  Mat m = a.transpose() * a;
  Mat v;
  internal::jacobi_eigen_sym3(m, v);

  std::array<int, 3> order { 0, 1, 2 };
  std::sort(order.begin(), order.end(),
            [&m](int x, int y) { return m(x, x) > m(y, y); });
  Mat vs;
  for (int i = 0; i < 3; ++i) {
    Vec col = v.col(order[i]);
    Eigen::Index k;
    col.cwiseAbs().maxCoeff(&k);
    if (col[k] < 0)
      col = -col;
    vs.col(i) = col;
  }

  const Mat b = a * vs;
  Svd3<Scalar> out;
  out.V = vs;
  const Scalar s1 = b.col(0).norm();
  if (s1 == Scalar(0)) {
    out.U.setIdentity();
    out.S.setZero();
    return out;
  }
  Vec u1 = b.col(0) / s1;
  Vec w = b.col(1) - u1.dot(b.col(1)) * u1;
  const bool rank2 = w.norm() > s1 * std::numeric_limits<Scalar>::epsilon();
  const Scalar s2 = rank2 ? w.norm() : Scalar(0);
  Vec u2 = rank2 ? Vec(w / s2) : internal::any_orthogonal(u1);
  Vec u3 = u1.cross(u2);
  Scalar s3 = u3.dot(b.col(2));
  if (s3 < 0) {
    u3 = -u3;
    s3 = -s3;
  }
  // Rounding can leave s3 a hair above a negligible s2.
  s3 = std::min(s3, s2);
  out.U.col(0) = u1;
  out.U.col(1) = u2;
  out.U.col(2) = u3;
  out.S << s1, s2, s3;
  return out;
}

/// Smallest |s_i^2 - s_j^2| used in the SVD adjoint. Below this the
/// gradient is approximate.
constexpr double kSvdGapClamp = 1e-8;

struct Svd3Tensors {
  ad::Tensor U;
  ad::Tensor S;  // 3x1
  ad::Tensor V;
};

/// Differentiable 3x3 SVD. Backward uses the standard adjoint
///   dA = U [ (F o (U^T dU - dU^T U)) S + diag(dS)
///          + S (F o (V^T dV - dV^T V)) ] V^T,
/// F_ij = 1 / (s_j^2 - s_i^2), with the gap clamped at kSvdGapClamp.
Svd3Tensors svd3(const ad::Tensor &a);

}  // namespace rigidock

#endif  // RIGIDOCK_SVD3_HPP_
