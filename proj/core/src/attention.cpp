#include "nowcast/attention.hpp"

#include <cmath>

#include "nowcast/core_types.hpp"

namespace nowcast {

Eigen::MatrixXd Tensor4::slice(std::size_t b, std::size_t h) const {
  Eigen::MatrixXd m(shape[2], shape[3]);
  for (std::size_t i = 0; i < shape[2]; ++i)
    for (std::size_t j = 0; j < shape[3]; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(b, h, i, j);
  return m;
}

void Tensor4::set_slice(std::size_t b, std::size_t h, const Eigen::MatrixXd& m) {
  for (std::size_t i = 0; i < shape[2]; ++i)
    for (std::size_t j = 0; j < shape[3]; ++j)
      (*this)(b, h, i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd p(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double mx = scores.row(r).maxCoeff();
    p.row(r) = (scores.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

namespace {

// One (batch, head) block; the same kernel backs the plain and taped paths.
void attend(const Eigen::Ref<const Eigen::MatrixXd>& q, const Eigen::Ref<const Eigen::MatrixXd>& k,
            const Eigen::Ref<const Eigen::MatrixXd>& v, const Eigen::RowVectorXd& key_bias,
            Eigen::MatrixXd& probs, Eigen::MatrixXd& ctx) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Eigen::MatrixXd scores = (q * k.transpose()) * inv_sqrt;
  scores.rowwise() += key_bias;
  probs = softmax_rows(scores);
  ctx.noalias() = probs * v;
}

void check_bias(const Eigen::MatrixXd& pattern, std::size_t batch, std::size_t lk) {
  const auto rows = static_cast<std::size_t>(pattern.rows());
  if (static_cast<std::size_t>(pattern.cols()) != lk || (rows != 1 && rows != batch))
    throw Error("bias not broadcastable to score tensor");
}

}  // namespace

AttentionResult attention_forward(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                                  std::span<const ScoreBias> hooks) {
  const auto [batch, heads, lq, dh] = q.shape;
  const std::size_t lk = k.shape[2];
  if (k.shape[0] != batch || k.shape[1] != heads || k.shape[3] != dh || v.shape[0] != batch ||
      v.shape[1] != heads || v.shape[2] != lk)
    throw Error("attention: q/k/v shape mismatch");
  for (const auto& h : hooks) check_bias(h.pattern, batch, lk);

  AttentionResult out{Tensor4(batch, heads, lq, v.shape[3]), Tensor4(batch, heads, lq, lk)};
  Eigen::MatrixXd probs;
  Eigen::MatrixXd ctx;
  for (std::size_t b = 0; b < batch; ++b) {
    Eigen::RowVectorXd key_bias = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(lk));
    for (const auto& h : hooks) {
      const Eigen::Index row = h.pattern.rows() == 1 ? 0 : static_cast<Eigen::Index>(b);
      key_bias += h.scale * h.pattern.row(row);
    }
    for (std::size_t h = 0; h < heads; ++h) {
      attend(q.slice(b, h), k.slice(b, h), v.slice(b, h), key_bias, probs, ctx);
      out.context.set_slice(b, h, ctx);
      out.weights.set_slice(b, h, probs);
    }
  }
  return out;
}

namespace ad {

Var multi_head_attention(Var q, Var k, Var v, std::size_t batch, std::size_t heads,
                         std::span<const KeyBias> biases) {
  const Matrix& qv = q.value();
  const Eigen::Index d_model = qv.cols();
  if (batch == 0 || heads == 0 || qv.rows() % static_cast<Eigen::Index>(batch) != 0 ||
      d_model % static_cast<Eigen::Index>(heads) != 0)
    throw Error("attention: bad packing");
  if (k.value().rows() != qv.rows() || v.value().rows() != qv.rows() || k.value().cols() != d_model ||
      v.value().cols() != d_model)
    throw Error("attention: q/k/v shape mismatch");
  const Eigen::Index len = qv.rows() / static_cast<Eigen::Index>(batch);
  const Eigen::Index dh = d_model / static_cast<Eigen::Index>(heads);
  for (const auto& kb : biases) {
    check_bias(kb.pattern, batch, static_cast<std::size_t>(len));
    if (kb.scale.tape != q.tape || kb.scale.value().size() != 1) throw Error("attention: bias scale must be 1x1");
  }

  std::vector<Eigen::RowVectorXd> key_bias(batch, Eigen::RowVectorXd::Zero(len));
  for (std::size_t b = 0; b < batch; ++b) {
    for (const auto& kb : biases) {
      const Eigen::Index row = kb.pattern.rows() == 1 ? 0 : static_cast<Eigen::Index>(b);
      key_bias[b] += kb.scale.value()(0, 0) * kb.pattern.row(row);
    }
  }

  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  Matrix context(qv.rows(), d_model);
  std::vector<Matrix> probs(batch * heads);
  Matrix ctx;
  for (std::size_t b = 0; b < batch; ++b) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(b) * len;
    for (std::size_t h = 0; h < heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      attend(qv.block(r0, c0, len, dh), kv.block(r0, c0, len, dh), vv.block(r0, c0, len, dh), key_bias[b],
             probs[b * heads + h], ctx);
      context.block(r0, c0, len, dh) = ctx;
    }
  }

  std::vector<Eigen::MatrixXd> patterns;
  std::vector<std::size_t> scale_ids;
  bool req = q.tape->requires_grad(q.id) || k.tape->requires_grad(k.id) || v.tape->requires_grad(v.id);
  for (const auto& kb : biases) {
    patterns.push_back(kb.pattern);
    scale_ids.push_back(kb.scale.id);
    req = req || q.tape->requires_grad(kb.scale.id);
  }

  const std::size_t qi = q.id;
  const std::size_t ki = k.id;
  const std::size_t vi = v.id;
  return q.tape->record(
      std::move(context), req,
      [=, probs = std::move(probs), patterns = std::move(patterns), scale_ids = std::move(scale_ids)](
          Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& qv = t.value(qi);
        const Matrix& kv = t.value(ki);
        const Matrix& vv = t.value(vi);
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
        const bool gq = t.requires_grad(qi);
        const bool gk = t.requires_grad(ki);
        const bool gv = t.requires_grad(vi);
        std::vector<double> scale_grad(scale_ids.size(), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
          const Eigen::Index r0 = static_cast<Eigen::Index>(b) * len;
          Eigen::RowVectorXd key_grad = Eigen::RowVectorXd::Zero(len);
          for (std::size_t h = 0; h < heads; ++h) {
            const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
            const Matrix& p = probs[b * heads + h];
            const auto g_ctx = g.block(r0, c0, len, dh);
            if (gv) t.grad(vi).block(r0, c0, len, dh).noalias() += p.transpose() * g_ctx;
            const Matrix dp = g_ctx * vv.block(r0, c0, len, dh).transpose();
            const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
            const Matrix ds = (p.array() * (dp.array().colwise() - row_dot.array())).matrix();
            key_grad += ds.colwise().sum();
            if (gq) t.grad(qi).block(r0, c0, len, dh).noalias() += (ds * kv.block(r0, c0, len, dh)) * inv_sqrt;
            if (gk)
              t.grad(ki).block(r0, c0, len, dh).noalias() +=
                  (ds.transpose() * qv.block(r0, c0, len, dh)) * inv_sqrt;
          }
          for (std::size_t s = 0; s < scale_ids.size(); ++s) {
            const Eigen::Index row = patterns[s].rows() == 1 ? 0 : static_cast<Eigen::Index>(b);
            scale_grad[s] += key_grad.dot(patterns[s].row(row));
          }
        }
        for (std::size_t s = 0; s < scale_ids.size(); ++s)
          if (t.requires_grad(scale_ids[s])) t.grad(scale_ids[s])(0, 0) += scale_grad[s];
      });
}

}  // namespace ad

}  // namespace nowcast
