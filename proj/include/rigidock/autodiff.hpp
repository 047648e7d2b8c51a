// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over dense Eigen matrices.
//
// A Tape owns every intermediate value created during a forward pass.
// Tensor is a lightweight handle (tape, node id) into it. Operations are
// recorded eagerly in creation order; Tape::backward() walks them in exact
// reverse order. Values that never touch a gradient-requiring leaf are
// stored but not recorded.

#ifndef RIGIDOCK_AUTODIFF_HPP_
#define RIGIDOCK_AUTODIFF_HPP_

#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rigidock {

using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using Matrix3Xd = Eigen::Matrix3Xd;
using Matrix3d = Eigen::Matrix3d;
using Vector3d = Eigen::Vector3d;

/// Raised for incompatible operand shapes. The message names the op.
class ShapeError: public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation encounters NaN/Inf where finite input is needed.
class NumericalError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace ad {

class Tape;

class Tensor {
public:
  Tensor() = default;

  const MatrixXd &value() const;
  const MatrixXd &grad() const;
  bool requires_grad() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  std::string shape_str() const;

  /// Value of a 1x1 tensor.
  double item() const;

  Tape &tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Tensor(Tape *tape, int id): tape_(tape), id_(id) { }

  Tape *tape_ = nullptr;
  int id_ = -1;
};

class Tape {
public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Tensor constant(MatrixXd value);
  Tensor variable(MatrixXd value);

  /// Seeds d(loss)/d(loss) = 1 and propagates to all recorded inputs.
  /// loss must be 1x1. Intermediate gradients stay readable afterwards.
  void backward(const Tensor &loss);

  /// Drops all nodes and operations.
  void clear();

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_ops() const { return ops_.size(); }

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape &)>;
  Tensor emit(MatrixXd value, std::span<const Tensor> inputs, BackwardFn fn);
  /// Multi-output recording: outputs are created first, then one op spans
  /// all of them.
  std::vector<Tensor> emit_many(std::vector<MatrixXd> values,
                                std::span<const Tensor> inputs, BackwardFn fn);

  const MatrixXd &value(int id) const { return nodes_[id].value; }
  const MatrixXd &grad(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulator; lazily zero-initialized.
  MatrixXd &grad_ref(int id);
  bool has_grad(int id) const { return nodes_[id].grad.size() != 0; }

private:
  friend class Tensor;
  struct Node {
    MatrixXd value;
    MatrixXd grad;
    bool requires_grad = false;
  };
  struct Op {
    std::vector<int> inputs;
    std::vector<int> outputs;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::vector<Op> ops_;
};

// ---- elementwise and linear ops -------------------------------------------

Tensor operator+(const Tensor &a, const Tensor &b);
Tensor operator-(const Tensor &a, const Tensor &b);
Tensor operator-(const Tensor &a);
Tensor operator*(double s, const Tensor &a);
inline Tensor operator*(const Tensor &a, double s) { return s * a; }
Tensor add_scalar(const Tensor &a, double s);

Tensor matmul(const Tensor &a, const Tensor &b);
Tensor transpose(const Tensor &a);
Tensor hadamard(const Tensor &a, const Tensor &b);

/// a (r x c) plus column vector b (r x 1) added to every column.
Tensor add_colwise(const Tensor &a, const Tensor &b);
/// a (r x c) times row vector b (1 x c), scaling every row elementwise.
Tensor mul_rowwise(const Tensor &a, const Tensor &b);

Tensor exp(const Tensor &a);
Tensor log(const Tensor &a);
Tensor sqrt(const Tensor &a);
Tensor leaky_relu(const Tensor &a, double slope);
Tensor relu(const Tensor &a);

/// Full reduction to 1x1.
Tensor sum(const Tensor &a);
Tensor mean(const Tensor &a);
/// Sum over rows, giving 1 x c.
Tensor colwise_sum(const Tensor &a);
/// Sum over columns, giving r x 1.
Tensor rowwise_sum(const Tensor &a);
Tensor rowwise_mean(const Tensor &a);
/// Squared Euclidean norm of each column, giving 1 x c.
Tensor colwise_squared_norm(const Tensor &a);
/// <a, b> as 1x1.
Tensor dot(const Tensor &a, const Tensor &b);

/// out(i, j) = ||a.col(i) - b.col(j)||^2 for a (r x n), b (r x m).
Tensor pairwise_squared_distance(const Tensor &a, const Tensor &b);

/// Softmax over each row (entries of a row sum to one).
Tensor softmax_rows(const Tensor &a);
/// log(sum(exp(row))) per row, stabilized, giving r x 1.
Tensor logsumexp_rows(const Tensor &a);

/// Per-column normalization over rows with learned gain/bias (r x 1 each).
Tensor layer_norm_cols(const Tensor &a, const Tensor &gain,
                       const Tensor &bias, double eps = 1e-5);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_rows(std::initializer_list<Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_cols(std::initializer_list<Tensor> parts);

/// Rows [start, start + count).
Tensor slice_rows(const Tensor &a, Eigen::Index start, Eigen::Index count);
/// Column-major reshape (Eigen storage order).
Tensor reshape(const Tensor &a, Eigen::Index rows, Eigen::Index cols);

/// out.col(e) = a.col(index[e]).
Tensor gather_cols(const Tensor &a, std::span<const int> index);
/// out.col(index[e]) += a.col(e), out has `cols` columns.
Tensor scatter_sum_cols(const Tensor &a, std::span<const int> index,
                        Eigen::Index cols);
/// Scatter sum divided by per-target counts. Targets with no sources get 0.
Tensor scatter_mean_cols(const Tensor &a, std::span<const int> index,
                         Eigen::Index cols);

// ---- checks ----------------------------------------------------------------

/// Central finite differences versus reverse mode.
///
/// `f` receives a fresh tape and one variable per entry in `params` and must
/// return a 1x1 tensor. Returns the maximum over all parameter entries of
/// |analytic - fd| / (|analytic| + |fd| + 1e-8).
double grad_check(
    const std::function<Tensor(Tape &, std::span<const Tensor>)> &f,
    std::span<const MatrixXd> params, double step = 1e-5);

}  // namespace ad
}  // namespace rigidock

#endif  // RIGIDOCK_AUTODIFF_HPP_
