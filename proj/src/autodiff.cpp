// SPDX-License-Identifier: Apache-2.0

#include "rigidock/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace rigidock::ad {

namespace {

std::string shape_of(const MatrixXd &m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

[[noreturn]] void shape_fail(const char *op, const Tensor &a,
                             const Tensor &b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str()
                   + " and " + b.shape_str());
}

[[noreturn]] void shape_fail(const char *op, const Tensor &a,
                             const std::string &what) {
  throw ShapeError(std::string(op) + ": " + what + ", got " + a.shape_str());
}

void accumulate(Tape &tape, int id, const MatrixXd &g) {
  if (tape.requires_grad(id))
    tape.grad_ref(id) += g;
}

template <class Expr>
void accumulate_expr(Tape &tape, int id, const Expr &g) {
  if (tape.requires_grad(id))
    tape.grad_ref(id) += g;
}

Tape &tape_of(const Tensor &a, const Tensor &b) {
  if (&a.tape() != &b.tape())
    throw std::invalid_argument("tensors belong to different tapes");
  return a.tape();
}

}  // namespace

// ---- Tensor / Tape ---------------------------------------------------------

const MatrixXd &Tensor::value() const {
  return tape_->value(id_);
}

const MatrixXd &Tensor::grad() const {
  return tape_->grad(id_);
}

bool Tensor::requires_grad() const {
  return tape_->requires_grad(id_);
}

std::string Tensor::shape_str() const {
  return shape_of(value());
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    shape_fail("item", *this, "expected 1x1");
  return value()(0, 0);
}

Tensor Tape::constant(MatrixXd value) {
  nodes_.push_back({ std::move(value), MatrixXd(), false });
  return { this, static_cast<int>(nodes_.size() - 1) };
}

Tensor Tape::variable(MatrixXd value) {
  nodes_.push_back({ std::move(value), MatrixXd(), true });
  return { this, static_cast<int>(nodes_.size() - 1) };
}

const MatrixXd &Tape::grad(int id) const {
  static const MatrixXd kEmpty;
  return nodes_[id].grad.size() == 0 ? kEmpty : nodes_[id].grad;
}

MatrixXd &Tape::grad_ref(int id) {
  Node &node = nodes_[id];
  if (node.grad.size() == 0)
    node.grad = MatrixXd::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

Tensor Tape::emit(MatrixXd value, std::span<const Tensor> inputs,
                  BackwardFn fn) {
  std::vector<MatrixXd> values;
  values.push_back(std::move(value));
  return emit_many(std::move(values), inputs, std::move(fn))[0];
}

std::vector<Tensor> Tape::emit_many(std::vector<MatrixXd> values,
                                    std::span<const Tensor> inputs,
                                    BackwardFn fn) {
  bool needs = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor &t) { return t.requires_grad(); });
  std::vector<Tensor> out;
  Op op;
  for (auto &v: values) {
    nodes_.push_back({ std::move(v), MatrixXd(), needs });
    int id = static_cast<int>(nodes_.size() - 1);
    out.push_back({ this, id });
    op.outputs.push_back(id);
  }
  if (needs) {
    for (const Tensor &t: inputs)
      op.inputs.push_back(t.id());
    op.backward = std::move(fn);
    ops_.push_back(std::move(op));
  }
  return out;
}

void Tape::backward(const Tensor &loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    shape_fail("backward", loss, "loss must be 1x1");
  if (!loss.requires_grad())
    return;
  grad_ref(loss.id())(0, 0) += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    bool any = std::any_of(it->outputs.begin(), it->outputs.end(),
                           [this](int id) { return has_grad(id); });
    if (any)
      it->backward(*this);
  }
}

void Tape::clear() {
  nodes_.clear();
  ops_.clear();
}

// ---- ops -------------------------------------------------------------------

Tensor operator+(const Tensor &a, const Tensor &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("add", a, b);
  Tape &tape = tape_of(a, b);
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value() + b.value(), in,
                   [ia = a.id(), ib = b.id(), out](Tape &t) {
                     const MatrixXd &g = t.grad(out);
                     accumulate(t, ia, g);
                     accumulate(t, ib, g);
                   });
}

Tensor operator-(const Tensor &a, const Tensor &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("sub", a, b);
  Tape &tape = tape_of(a, b);
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value() - b.value(), in,
                   [ia = a.id(), ib = b.id(), out](Tape &t) {
                     const MatrixXd &g = t.grad(out);
                     accumulate(t, ia, g);
                     accumulate_expr(t, ib, -g);
                   });
}

Tensor operator-(const Tensor &a) {
  return -1.0 * a;
}

Tensor operator*(double s, const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(s * a.value(), in, [ia = a.id(), s, out](Tape &t) {
    accumulate_expr(t, ia, s * t.grad(out));
  });
}

Tensor add_scalar(const Tensor &a, double s) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().array() + s, in, [ia = a.id(), out](Tape &t) {
    accumulate(t, ia, t.grad(out));
  });
}

Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows())
    shape_fail("matmul", a, b);
  Tape &tape = tape_of(a, b);
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value() * b.value(), in,
                   [ia = a.id(), ib = b.id(), out](Tape &t) {
                     const MatrixXd &g = t.grad(out);
                     if (t.requires_grad(ia))
                       t.grad_ref(ia).noalias() += g * t.value(ib).transpose();
                     if (t.requires_grad(ib))
                       t.grad_ref(ib).noalias() += t.value(ia).transpose() * g;
                   });
}

Tensor transpose(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().transpose(), in, [ia = a.id(), out](Tape &t) {
    accumulate_expr(t, ia, t.grad(out).transpose());
  });
}

Tensor hadamard(const Tensor &a, const Tensor &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("hadamard", a, b);
  Tape &tape = tape_of(a, b);
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().cwiseProduct(b.value()), in,
                   [ia = a.id(), ib = b.id(), out](Tape &t) {
                     const MatrixXd &g = t.grad(out);
                     accumulate_expr(t, ia, g.cwiseProduct(t.value(ib)));
                     accumulate_expr(t, ib, g.cwiseProduct(t.value(ia)));
                   });
}

Tensor add_colwise(const Tensor &a, const Tensor &b) {
  if (b.cols() != 1 || a.rows() != b.rows())
    shape_fail("add_colwise", a, b);
  Tape &tape = tape_of(a, b);
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  MatrixXd v = a.value().colwise() + b.value().col(0);
  return tape.emit(std::move(v), in, [ia = a.id(), ib = b.id(), out](Tape &t) {
    const MatrixXd &g = t.grad(out);
    accumulate(t, ia, g);
    accumulate_expr(t, ib, g.rowwise().sum());
  });
}

Tensor mul_rowwise(const Tensor &a, const Tensor &b) {
  if (b.rows() != 1 || a.cols() != b.cols())
    shape_fail("mul_rowwise", a, b);
  Tape &tape = tape_of(a, b);
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  MatrixXd v = a.value().array().rowwise() * b.value().row(0).array();
  return tape.emit(std::move(v), in, [ia = a.id(), ib = b.id(), out](Tape &t) {
    const MatrixXd &g = t.grad(out);
    if (t.requires_grad(ia))
      t.grad_ref(ia).array()
          += g.array().rowwise() * t.value(ib).row(0).array();
    if (t.requires_grad(ib))
      t.grad_ref(ib) += g.cwiseProduct(t.value(ia)).colwise().sum();
  });
}

Tensor exp(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().array().exp().matrix(), in,
                   [ia = a.id(), out](Tape &t) {
                     accumulate_expr(t, ia,
                                     t.grad(out).cwiseProduct(t.value(out)));
                   });
}

Tensor log(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().array().log().matrix(), in,
                   [ia = a.id(), out](Tape &t) {
                     accumulate_expr(
                         t, ia,
                         (t.grad(out).array() / t.value(ia).array()).matrix());
                   });
}

Tensor sqrt(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().array().sqrt().matrix(), in,
                   [ia = a.id(), out](Tape &t) {
                     accumulate_expr(t, ia,
                                     (0.5 * t.grad(out).array()
                                      / t.value(out).array())
                                         .matrix());
                   });
}

Tensor leaky_relu(const Tensor &a, double slope) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  MatrixXd v = a.value().unaryExpr(
      [slope](double x) { return x > 0 ? x : slope * x; });
  return tape.emit(std::move(v), in, [ia = a.id(), slope, out](Tape &t) {
    if (!t.requires_grad(ia))
      return;
    const MatrixXd &x = t.value(ia);
    MatrixXd d = x.unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
    t.grad_ref(ia) += t.grad(out).cwiseProduct(d);
  });
}

Tensor relu(const Tensor &a) {
  return leaky_relu(a, 0.0);
}

Tensor sum(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  MatrixXd v(1, 1);
  v(0, 0) = a.value().sum();
  return tape.emit(std::move(v), in, [ia = a.id(), out](Tape &t) {
    if (t.requires_grad(ia))
      t.grad_ref(ia).array() += t.grad(out)(0, 0);
  });
}

Tensor mean(const Tensor &a) {
  return (1.0 / static_cast<double>(a.value().size())) * sum(a);
}

Tensor colwise_sum(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().colwise().sum(), in, [ia = a.id(), out](Tape &t) {
    if (t.requires_grad(ia))
      t.grad_ref(ia).rowwise() += t.grad(out).row(0);
  });
}

Tensor rowwise_sum(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().rowwise().sum(), in, [ia = a.id(), out](Tape &t) {
    if (t.requires_grad(ia))
      t.grad_ref(ia).colwise() += t.grad(out).col(0);
  });
}

Tensor rowwise_mean(const Tensor &a) {
  if (a.cols() == 0)
    shape_fail("rowwise_mean", a, "expected at least one column");
  return (1.0 / static_cast<double>(a.cols())) * rowwise_sum(a);
}

Tensor colwise_squared_norm(const Tensor &a) {
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().colwise().squaredNorm(), in,
                   [ia = a.id(), out](Tape &t) {
                     if (!t.requires_grad(ia))
                       return;
                     t.grad_ref(ia).noalias()
                         += 2.0 * t.value(ia)
                            * t.grad(out).row(0).asDiagonal();
                   });
}

Tensor dot(const Tensor &a, const Tensor &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("dot", a, b);
  return sum(hadamard(a, b));
}

Tensor pairwise_squared_distance(const Tensor &a, const Tensor &b) {
  if (a.rows() != b.rows())
    shape_fail("pairwise_squared_distance", a, b);
  Tape &tape = tape_of(a, b);
  const MatrixXd &av = a.value();
  const MatrixXd &bv = b.value();
  MatrixXd v(av.cols(), bv.cols());
  for (Eigen::Index j = 0; j < bv.cols(); ++j)
    for (Eigen::Index i = 0; i < av.cols(); ++i)
      v(i, j) = (av.col(i) - bv.col(j)).squaredNorm();
  Tensor in[] = { a, b };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), in, [ia = a.id(), ib = b.id(), out](Tape &t) {
    const MatrixXd &g = t.grad(out);
    const MatrixXd &av = t.value(ia);
    const MatrixXd &bv = t.value(ib);
    // d/da_i = 2 sum_j g_ij (a_i - b_j), d/db_j = -2 sum_i g_ij (a_i - b_j)
    if (t.requires_grad(ia)) {
      MatrixXd da = 2.0
                    * (av.array().rowwise()
                           * g.rowwise().sum().transpose().array()
                       - (bv * g.transpose()).array())
                          .matrix();
      t.grad_ref(ia) += da;
    }
    if (t.requires_grad(ib)) {
      MatrixXd db = 2.0
                    * (bv.array().rowwise() * g.colwise().sum().array()
                       - (av * g).array())
                          .matrix();
      t.grad_ref(ib) += db;
    }
  });
}

Tensor softmax_rows(const Tensor &a) {
  Tape &tape = a.tape();
  const MatrixXd &x = a.value();
  if (x.cols() == 0)
    shape_fail("softmax_rows", a, "expected at least one column");
  MatrixXd v = x.colwise() - x.rowwise().maxCoeff();
  v = v.array().exp().matrix();
  v.array().colwise() /= v.rowwise().sum().array();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), in, [ia = a.id(), out](Tape &t) {
    if (!t.requires_grad(ia))
      return;
    const MatrixXd &y = t.value(out);
    const MatrixXd &g = t.grad(out);
    Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
    t.grad_ref(ia).array()
        += y.array() * (g.array().colwise() - inner.array());
  });
}

Tensor logsumexp_rows(const Tensor &a) {
  Tape &tape = a.tape();
  const MatrixXd &x = a.value();
  if (x.cols() == 0)
    shape_fail("logsumexp_rows", a, "expected at least one column");
  Eigen::VectorXd mx = x.rowwise().maxCoeff();
  Eigen::VectorXd s = (x.colwise() - mx).array().exp().rowwise().sum();
  MatrixXd v = (mx.array() + s.array().log()).matrix();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), in, [ia = a.id(), out](Tape &t) {
    if (!t.requires_grad(ia))
      return;
    const MatrixXd &x = t.value(ia);
    MatrixXd p = (x.colwise() - t.value(out).col(0)).array().exp().matrix();
    t.grad_ref(ia).array() += p.array().colwise() * t.grad(out).col(0).array();
  });
}

Tensor layer_norm_cols(const Tensor &a, const Tensor &gain, const Tensor &bias,
                       double eps) {
  if (gain.rows() != a.rows() || gain.cols() != 1)
    shape_fail("layer_norm_cols(gain)", a, gain);
  if (bias.rows() != a.rows() || bias.cols() != 1)
    shape_fail("layer_norm_cols(bias)", a, bias);
  Tape &tape = tape_of(a, gain);
  const MatrixXd &x = a.value();
  const double r = static_cast<double>(x.rows());
  Eigen::RowVectorXd mu = x.colwise().mean();
  MatrixXd xc = x.rowwise() - mu;
  Eigen::RowVectorXd inv_std
      = ((xc.array().square().colwise().sum() / r) + eps).rsqrt();
  MatrixXd xhat = xc.array().rowwise() * inv_std.array();
  MatrixXd v = (xhat.array().colwise() * gain.value().col(0).array())
                   .colwise()
               + bias.value().col(0).array();
  Tensor in[] = { a, gain, bias };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(
      std::move(v), in,
      [ia = a.id(), ig = gain.id(), ib = bias.id(), xhat = std::move(xhat),
       inv_std, r, out](Tape &t) {
        const MatrixXd &g = t.grad(out);
        accumulate_expr(t, ib, g.rowwise().sum());
        accumulate_expr(t, ig, g.cwiseProduct(xhat).rowwise().sum());
        if (!t.requires_grad(ia))
          return;
        MatrixXd gx = g.array().colwise() * t.value(ig).col(0).array();
        Eigen::RowVectorXd m1 = gx.colwise().mean();
        Eigen::RowVectorXd m2 = gx.cwiseProduct(xhat).colwise().sum() / r;
        MatrixXd dx = ((gx.rowwise() - m1).array()
                       - xhat.array().rowwise() * m2.array())
                          .rowwise()
                      * inv_std.array();
        t.grad_ref(ia) += dx;
      });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty())
    throw ShapeError("concat_rows: no inputs");
  Tape &tape = parts[0].tape();
  Eigen::Index cols = parts[0].cols(), rows = 0;
  for (const Tensor &p: parts) {
    if (p.cols() != cols)
      shape_fail("concat_rows", parts[0], p);
    rows += p.rows();
  }
  MatrixXd v(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (const Tensor &p: parts) {
    v.middleRows(at, p.rows()) = p.value();
    layout.emplace_back(p.id(), at);
    at += p.rows();
  }
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), parts,
                   [layout = std::move(layout), out](Tape &t) {
                     const MatrixXd &g = t.grad(out);
                     for (auto [id, off]: layout)
                       if (t.requires_grad(id))
                         t.grad_ref(id)
                             += g.middleRows(off, t.value(id).rows());
                   });
}

Tensor concat_rows(std::initializer_list<Tensor> parts) {
  return concat_rows(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty())
    throw ShapeError("concat_cols: no inputs");
  Tape &tape = parts[0].tape();
  Eigen::Index rows = parts[0].rows(), cols = 0;
  for (const Tensor &p: parts) {
    if (p.rows() != rows)
      shape_fail("concat_cols", parts[0], p);
    cols += p.cols();
  }
  MatrixXd v(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (const Tensor &p: parts) {
    v.middleCols(at, p.cols()) = p.value();
    layout.emplace_back(p.id(), at);
    at += p.cols();
  }
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), parts,
                   [layout = std::move(layout), out](Tape &t) {
                     const MatrixXd &g = t.grad(out);
                     for (auto [id, off]: layout)
                       if (t.requires_grad(id))
                         t.grad_ref(id)
                             += g.middleCols(off, t.value(id).cols());
                   });
}

Tensor concat_cols(std::initializer_list<Tensor> parts) {
  return concat_cols(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice_rows(const Tensor &a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    shape_fail("slice_rows", a, "row range out of bounds");
  Tape &tape = a.tape();
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(a.value().middleRows(start, count), in,
                   [ia = a.id(), start, count, out](Tape &t) {
                     if (t.requires_grad(ia))
                       t.grad_ref(ia).middleRows(start, count) += t.grad(out);
                   });
}

Tensor reshape(const Tensor &a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size())
    shape_fail("reshape", a,
               "cannot reshape to " + std::to_string(rows) + "x"
                   + std::to_string(cols));
  Tape &tape = a.tape();
  MatrixXd v = Eigen::Map<const MatrixXd>(a.value().data(), rows, cols);
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), in, [ia = a.id(), out](Tape &t) {
    if (!t.requires_grad(ia))
      return;
    MatrixXd &g = t.grad_ref(ia);
    g += Eigen::Map<const MatrixXd>(t.grad(out).data(), g.rows(), g.cols());
  });
}

Tensor gather_cols(const Tensor &a, std::span<const int> index) {
  Tape &tape = a.tape();
  const MatrixXd &x = a.value();
  MatrixXd v(x.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] < 0 || index[e] >= x.cols())
      shape_fail("gather_cols", a, "index out of range");
    v.col(static_cast<Eigen::Index>(e)) = x.col(index[e]);
  }
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), in,
                   [ia = a.id(), idx = std::vector<int>(index.begin(),
                                                        index.end()),
                    out](Tape &t) {
                     if (!t.requires_grad(ia))
                       return;
                     MatrixXd &g = t.grad_ref(ia);
                     const MatrixXd &go = t.grad(out);
                     for (std::size_t e = 0; e < idx.size(); ++e)
                       g.col(idx[e]) += go.col(static_cast<Eigen::Index>(e));
                   });
}

Tensor scatter_sum_cols(const Tensor &a, std::span<const int> index,
                        Eigen::Index cols) {
  if (static_cast<Eigen::Index>(index.size()) != a.cols())
    shape_fail("scatter_sum_cols", a, "index length must equal column count");
  Tape &tape = a.tape();
  const MatrixXd &x = a.value();
  MatrixXd v = MatrixXd::Zero(x.rows(), cols);
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] < 0 || index[e] >= cols)
      shape_fail("scatter_sum_cols", a, "index out of range");
    v.col(index[e]) += x.col(static_cast<Eigen::Index>(e));
  }
  Tensor in[] = { a };
  int out = static_cast<int>(tape.num_nodes());
  return tape.emit(std::move(v), in,
                   [ia = a.id(), idx = std::vector<int>(index.begin(),
                                                        index.end()),
                    out](Tape &t) {
                     if (!t.requires_grad(ia))
                       return;
                     MatrixXd &g = t.grad_ref(ia);
                     const MatrixXd &go = t.grad(out);
                     for (std::size_t e = 0; e < idx.size(); ++e)
                       g.col(static_cast<Eigen::Index>(e)) += go.col(idx[e]);
                   });
}

Tensor scatter_mean_cols(const Tensor &a, std::span<const int> index,
                         Eigen::Index cols) {
  Eigen::RowVectorXd inv_count = Eigen::RowVectorXd::Zero(cols);
  for (int i: index)
    if (i >= 0 && i < cols)
      inv_count[i] += 1.0;
  for (Eigen::Index i = 0; i < cols; ++i)
    inv_count[i] = inv_count[i] > 0 ? 1.0 / inv_count[i] : 0.0;
  Tensor s = scatter_sum_cols(a, index, cols);
  return mul_rowwise(s, a.tape().constant(inv_count));
}

// ---- grad_check ------------------------------------------------------------

double grad_check(
    const std::function<Tensor(Tape &, std::span<const Tensor>)> &f,
    std::span<const MatrixXd> params, double step) {
  if (!(step > 0))
    throw std::invalid_argument("grad_check: step must be positive");

  std::vector<MatrixXd> analytic;
  {
    Tape tape;
    std::vector<Tensor> vars;
    for (const MatrixXd &p: params)
      vars.push_back(tape.variable(p));
    Tensor out = f(tape, vars);
    if (out.rows() != 1 || out.cols() != 1)
      throw ShapeError("grad_check: function must be scalar-valued, got "
                       + out.shape_str());
    tape.backward(out);
    for (const Tensor &v: vars)
      analytic.push_back(v.grad().size() == 0
                             ? MatrixXd::Zero(v.rows(), v.cols())
                             : v.grad());
  }

  auto evaluate = [&](const std::vector<MatrixXd> &values) {
    Tape tape;
    std::vector<Tensor> vars;
    for (const MatrixXd &p: values)
      vars.push_back(tape.constant(p));
    return f(tape, vars).item();
  };

  std::vector<MatrixXd> work(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t p = 0; p < work.size(); ++p) {
    for (Eigen::Index e = 0; e < work[p].size(); ++e) {
      const double orig = work[p](e);
      work[p](e) = orig + step;
      const double fp = evaluate(work);
      work[p](e) = orig - step;
      const double fm = evaluate(work);
      work[p](e) = orig;
      const double fd = (fp - fm) / (2 * step);
      const double an = analytic[p](e);
      const double err = std::abs(an - fd) / (std::abs(an) + std::abs(fd) + 1e-8);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace rigidock::ad
