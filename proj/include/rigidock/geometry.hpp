// SPDX-License-Identifier: Apache-2.0
//
// Rigid transforms, Kabsch superimposition and seeded SE(3) sampling on
// plain Eigen types.

#ifndef RIGIDOCK_GEOMETRY_HPP_
#define RIGIDOCK_GEOMETRY_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "rigidock/svd3.hpp"

namespace rigidock {

/// x -> R x + t.
template <class Scalar>
struct RigidTransform {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  RigidTransform inverse() const {
    return { R.transpose(), -(R.transpose() * t) };
  }

  /// (*this) o other: apply `other` first.
  RigidTransform operator*(const RigidTransform &other) const {
    return { R * other.R, R * other.t + t };
  }
};

using RigidTransformd = RigidTransform<double>;

template <class Scalar, class Derived>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic>
apply_transform(const RigidTransform<Scalar> &tr,
                const Eigen::MatrixBase<Derived> &x) {
  return (tr.R * x).colwise() + tr.t;
}

/// Raised when keypoints cannot define a unique rotation.
class DegenerateConfigurationError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Second singular value of the cross-covariance below this fraction of
/// the first is treated as degenerate.
constexpr double kKabschRankTolerance = 1e-9;

/// Proper rotation R and t minimizing ||R Y1 + t - Y2||_F.
/// A = Yc2 Yc1^T = U S V^T, R = U diag(1, 1, d) V^T, d = sign(det(U V^T)),
/// t = mean(Y2) - R mean(Y1).
template <class D1, class D2>
RigidTransform<typename D1::Scalar> kabsch(const Eigen::MatrixBase<D1> &y1,
                                           const Eigen::MatrixBase<D2> &y2) {
  using Scalar = typename D1::Scalar;
  if (y1.rows() != 3 || y2.rows() != 3 || y1.cols() != y2.cols()
      || y1.cols() < 1)
    throw ShapeError("kabsch: expected two 3xK point sets of equal size");
  const Eigen::Matrix<Scalar, 3, 1> m1 = y1.rowwise().mean();
  const Eigen::Matrix<Scalar, 3, 1> m2 = y2.rowwise().mean();
  const Eigen::Matrix<Scalar, 3, Eigen::Dynamic> c1 = y1.colwise() - m1;
  const Eigen::Matrix<Scalar, 3, Eigen::Dynamic> c2 = y2.colwise() - m2;
  const Eigen::Matrix<Scalar, 3, 3> a = c2 * c1.transpose();
  const Svd3<Scalar> svd = svd3(a);
  if (!(svd.S[1] > kKabschRankTolerance * svd.S[0]))
    throw DegenerateConfigurationError(
        "kabsch: keypoint cross-covariance has rank <= 1");
  Eigen::Matrix<Scalar, 3, 1> diag(1, 1, 1);
  if ((svd.U * svd.V.transpose()).determinant() < 0)
    diag[2] = -1;
  RigidTransform<Scalar> out;
  out.R = svd.U * diag.asDiagonal() * svd.V.transpose();
  out.t = m2 - out.R * m1;
  return out;
}

/// sqrt(mean squared column distance), no superimposition.
template <class D1, class D2>
typename D1::Scalar rmsd(const Eigen::MatrixBase<D1> &a,
                         const Eigen::MatrixBase<D2> &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.cols() == 0)
    throw ShapeError("rmsd: point sets differ in shape or are empty");
  return std::sqrt((a - b).colwise().squaredNorm().mean());
}

/// RMSD after optimally superimposing `a` onto `b`.
template <class D1, class D2>
typename D1::Scalar superimposed_rmsd(const Eigen::MatrixBase<D1> &a,
                                      const Eigen::MatrixBase<D2> &b) {
  const auto tr = kabsch(a, b);
  return rmsd(apply_transform(tr, a), b);
}

// ---- seeded sampling -------------------------------------------------------

using Rng = std::mt19937_64;

/// Uniform in [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(Rng &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng &rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Box-Muller standard normal.
inline double standard_normal(Rng &rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0)
    u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1))
         * std::cos(2.0 * std::numbers::pi * u2);
}

constexpr double kDefaultMaxTranslation = 30.0;

/// Haar-uniform rotation (unit quaternion from three uniforms) and
/// translation components uniform in [-t_max, t_max].
inline RigidTransformd random_se3(Rng &rng,
                                  double t_max = kDefaultMaxTranslation) {
  const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double tau = 2.0 * std::numbers::pi;
  Eigen::Quaterniond q(b * std::cos(tau * u3), a * std::sin(tau * u2),
                       a * std::cos(tau * u2), b * std::sin(tau * u3));
  RigidTransformd out;
  out.R = q.normalized().toRotationMatrix();
  for (int i = 0; i < 3; ++i)
    out.t[i] = uniform(rng, -t_max, t_max);
  return out;
}

inline RigidTransformd random_se3(std::uint64_t seed,
                                  double t_max = kDefaultMaxTranslation) {
  Rng rng(seed);
  return random_se3(rng, t_max);
}

}  // namespace rigidock

#endif  // RIGIDOCK_GEOMETRY_HPP_
