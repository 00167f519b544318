#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace nowcast::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so a reverse sweep is a valid topological order.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  /// Input that receives a gradient (parameters).
  Var variable(Matrix value);
  /// Input that never needs a gradient (data).
  Var constant(Matrix value);
  /// Result of an op; `backward` reads grad(self) and accumulates into inputs.
  Var record(Matrix value, bool requires_grad, Backward backward);

  /// Seeds d(root)/d(root) = 1 (root must be 1x1) and runs the reverse sweep.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  Matrix& grad(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// a (n x m) + row (1 x m) broadcast over rows.
Var add_row(Var a, Var row);
/// a (n x m) + constant matrix of the same shape.
Var add_constant(Var a, const Matrix& c);
Var scale(Var a, double s);
/// Tanh approximation of GELU.
Var gelu(Var a);
/// Row-wise layer normalisation with learned gain and bias (both 1 x m).
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Row-major reshape.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
/// Mean of squared differences against a constant target; 1x1 result.
Var mse_loss(Var pred, const Matrix& target);
Var sum(Var a);

}  // namespace nowcast::ad
