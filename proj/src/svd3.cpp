// SPDX-License-Identifier: Apache-2.0

#include "rigidock/svd3.hpp"

namespace rigidock {

Svd3Tensors svd3(const ad::Tensor &a) {
  if (a.rows() != 3 || a.cols() != 3)
    throw ShapeError("svd3: expected 3x3 input, got " + a.shape_str());
  const Svd3<double> d = svd3(a.value());

  ad::Tape &tape = a.tape();
  const int first = static_cast<int>(tape.num_nodes());
  std::vector<MatrixXd> values { d.U, d.S, d.V };
  ad::Tensor in[] = { a };
  auto outs = tape.emit_many(
      std::move(values), in, [ia = a.id(), first](ad::Tape &t) {
        if (!t.requires_grad(ia))
          return;
        const int iu = first, is = first + 1, iv = first + 2;
        const Matrix3d u = t.value(iu);
        const Vector3d s = t.value(is);
        const Matrix3d v = t.value(iv);
        const Matrix3d gu = t.has_grad(iu) ? Matrix3d(t.grad(iu))
                                           : Matrix3d::Zero();
        const Vector3d gs = t.has_grad(is) ? Vector3d(t.grad(is))
                                           : Vector3d::Zero();
        const Matrix3d gv = t.has_grad(iv) ? Matrix3d(t.grad(iv))
                                           : Matrix3d::Zero();

        Matrix3d f = Matrix3d::Zero();
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            if (i == j)
              continue;
            double gap = s[j] * s[j] - s[i] * s[i];
            if (std::abs(gap) < kSvdGapClamp)
              gap = j < i ? kSvdGapClamp : -kSvdGapClamp;
            f(i, j) = 1.0 / gap;
          }
        }
        const Matrix3d su = u.transpose() * gu - gu.transpose() * u;
        const Matrix3d sv = v.transpose() * gv - gv.transpose() * v;
        Matrix3d inner = f.cwiseProduct(su) * s.asDiagonal();
        inner += gs.asDiagonal();
        inner += s.asDiagonal() * f.cwiseProduct(sv);
        t.grad_ref(ia) += u * inner * v.transpose();
      });
  return { outs[0], outs[1], outs[2] };
}

}  // namespace rigidock
