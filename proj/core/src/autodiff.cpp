#include "nowcast/autodiff.hpp"

#include <cmath>
#include <numbers>

#include "nowcast/core_types.hpp"

namespace nowcast::ad {

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

Var Tape::variable(Matrix value) { return record(std::move(value), true, nullptr); }

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward)});
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this) throw Error("backward: variable from another tape");
  if (value(root.id).size() != 1) throw Error("backward: root must be scalar");
  grad(root.id)(0, 0) += 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
}

namespace {

bool needs(const Var& a) { return a.tape->requires_grad(a.id); }

void same_tape(const Var& a, const Var& b) {
  if (a.tape != b.tape) throw Error("autodiff: variables from different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  if (a.cols() != b.rows()) throw Error("matmul: shape mismatch");
  const std::size_t ai = a.id;
  const std::size_t bi = b.id;
  return a.tape->record(a.value() * b.value(), needs(a) || needs(b), [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai).noalias() += g * t.value(bi).transpose();
    if (t.requires_grad(bi)) t.grad(bi).noalias() += t.value(ai).transpose() * g;
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("add: shape mismatch");
  const std::size_t ai = a.id;
  const std::size_t bi = b.id;
  return a.tape->record(a.value() + b.value(), needs(a) || needs(b), [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai) += g;
    if (t.requires_grad(bi)) t.grad(bi) += g;
  });
}

Var add_row(Var a, Var row) {
  same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_row: shape mismatch");
  const std::size_t ai = a.id;
  const std::size_t ri = row.id;
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), needs(a) || needs(row), [ai, ri](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai) += g;
    if (t.requires_grad(ri)) t.grad(ri) += g.colwise().sum();
  });
}

Var add_constant(Var a, const Matrix& c) {
  if (c.rows() != a.rows() || c.cols() != a.cols()) throw Error("add_constant: shape mismatch");
  const std::size_t ai = a.id;
  return a.tape->record(a.value() + c, needs(a), [ai](Tape& t, std::size_t self) {
    t.grad(ai) += t.grad(self);
  });
}

Var scale(Var a, double s) {
  const std::size_t ai = a.id;
  return a.tape->record(a.value() * s, needs(a), [ai, s](Tape& t, std::size_t self) {
    t.grad(ai) += s * t.grad(self);
  });
}

Var gelu(Var a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  const std::size_t ai = a.id;
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    out.data()[i] = 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v)));
  }
  return a.tape->record(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ai);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double v = x.data()[i];
      const double u = c * (v + k * v * v * v);
      const double th = std::tanh(u);
      const double du = c * (1.0 + 3.0 * k * v * v);
      const double d = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
      ga.data()[i] += g.data()[i] * d;
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  if (gain.rows() != 1 || gain.cols() != m || bias.rows() != 1 || bias.cols() != m)
    throw Error("layer_norm: shape mismatch");

  const Matrix& xv = x.value();
  Matrix xhat(n, m);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();

  const std::size_t xi = x.id;
  const std::size_t gi = gain.id;
  const std::size_t bi = bias.id;
  const bool req = needs(x) || needs(gain) || needs(bias);
  return x.tape->record(std::move(out), req,
                        [xi, gi, bi, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
                          const Matrix& g = t.grad(self);
                          if (t.requires_grad(gi)) t.grad(gi) += (g.array() * xhat.array()).colwise().sum().matrix();
                          if (t.requires_grad(bi)) t.grad(bi) += g.colwise().sum();
                          if (!t.requires_grad(xi)) return;
                          const Eigen::Index m = g.cols();
                          const Eigen::ArrayXXd gx = g.array().rowwise() * t.value(gi).row(0).array();
                          Matrix& out = t.grad(xi);
                          for (Eigen::Index r = 0; r < g.rows(); ++r) {
                            const double mean_g = gx.row(r).mean();
                            const double mean_gx = (gx.row(r) * xhat.row(r).array()).mean();
                            out.row(r).array() +=
                                inv_std(r) * (gx.row(r) - mean_g - xhat.row(r).array() * mean_gx);
                          }
                          (void)m;
                        });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw Error("reshape: size mismatch");
  const Matrix& v = a.value();
  const Eigen::Index in_cols = v.cols();
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < in_cols; ++c) {
      const Eigen::Index idx = r * in_cols + c;
      out(idx / cols, idx % cols) = v(r, c);
    }
  }
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), needs(a), [ai, cols](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    const Eigen::Index in_cols = ga.cols();
    for (Eigen::Index r = 0; r < ga.rows(); ++r) {
      for (Eigen::Index c = 0; c < in_cols; ++c) {
        const Eigen::Index idx = r * in_cols + c;
        ga(r, c) += g(idx / cols, idx % cols);
      }
    }
  });
}

Var mse_loss(Var pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw Error("mse_loss: shape mismatch");
  Matrix diff = pred.value() - target;
  const auto count = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / count;
  const std::size_t pi = pred.id;
  return pred.tape->record(std::move(out), needs(pred),
                           [pi, diff = std::move(diff), count](Tape& t, std::size_t self) {
                             t.grad(pi) += (2.0 * t.grad(self)(0, 0) / count) * diff;
                           });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    t.grad(ai).array() += t.grad(self)(0, 0);
  });
}

}  // namespace nowcast::ad
