#include "model/tensor_ops.h"

#include <cmath>
#include <limits>
#include <string>

#include "promptrank/errors.h"

namespace promptrank::model {

Matrix Linear::operator()(const Eigen::Ref<const Matrix>& x) const {
  Matrix y = x * W().transpose();
  if (bias != nullptr) y.rowwise() += VectorMap(bias, out);
  return y;
}

void RmsNormInPlace(Matrix& x, const Norm& n, float eps) {
  const VectorMap w(n.weight, n.dim);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const float var = x.row(r).squaredNorm() / static_cast<float>(x.cols());
    x.row(r) = (x.row(r) * (1.0f / std::sqrt(var + eps))).cwiseProduct(w);
  }
}

Matrix RmsNorm(const Matrix& x, const Norm& n, float eps) {
  Matrix y = x;
  RmsNormInPlace(y, n, eps);
  return y;
}

Matrix LayerNorm(const Matrix& x, const Norm& n, float eps) {
  const VectorMap w(n.weight, n.dim);
  const VectorMap b(n.bias, n.dim);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const float mean = x.row(r).mean();
    const RowVector centered = x.row(r).array() - mean;
    const float var = centered.squaredNorm() / static_cast<float>(x.cols());
    y.row(r) = (centered * (1.0f / std::sqrt(var + eps))).cwiseProduct(w) + b;
  }
  return y;
}

void ReluInPlace(Matrix& x) { x = x.cwiseMax(0.0f); }

void GeluInPlace(Matrix& x) {
  x = x.unaryExpr([](float v) { return 0.5f * v * (1.0f + std::erf(v * 0.70710678118654752f)); });
}

void GeluTanhInPlace(Matrix& x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
  x = x.unaryExpr([](float v) { return 0.5f * v * (1.0f + std::tanh(kC * (v + 0.044715f * v * v * v))); });
}

Matrix Attention(const Eigen::Ref<const Matrix>& q, const Eigen::Ref<const Matrix>& k,
                 const Eigen::Ref<const Matrix>& v, Eigen::Index heads, Eigen::Index head_dim, float scale,
                 const std::vector<Matrix>* bias, Eigen::Index causal_offset) {
  const Eigen::Index nq = q.rows();
  const Eigen::Index nk = k.rows();
  Matrix out(nq, heads * head_dim);
  Matrix scores(nq, nk);
  constexpr float kNegInf = -std::numeric_limits<float>::infinity();
  for (Eigen::Index h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * head_dim, head_dim);
    const auto kh = k.middleCols(h * head_dim, head_dim);
    const auto vh = v.middleCols(h * head_dim, head_dim);
    scores.noalias() = qh * kh.transpose();
    if (scale != 1.0f) scores *= scale;
    for (Eigen::Index i = 0; i < nq; ++i) {
      const Eigen::Index visible = causal_offset >= 0 ? std::min(nk, causal_offset + i + 1) : nk;
      auto row = scores.row(i);
      if (bias != nullptr) row.head(visible) += (*bias)[static_cast<std::size_t>(h)].row(i).head(visible);
      for (Eigen::Index j = visible; j < nk; ++j) row(j) = kNegInf;
      const float mx = row.head(visible).maxCoeff();
      row = (row.array() - mx).exp();
      row /= row.sum();
    }
    out.middleCols(h * head_dim, head_dim).noalias() = scores * vh;
  }
  return out;
}

Matrix Gather(const MatrixMap& table, std::span<const TokenId> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw BackendError("token id " + std::to_string(ids[i]) + " outside the embedding table");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

LogProbRows LogSoftmaxRows(const Eigen::Ref<const Matrix>& logits) {
  LogProbRows out(static_cast<std::size_t>(logits.rows()), static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double mx = row.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < row.cols(); ++c) sum += std::exp(static_cast<double>(row(c)) - mx);
    const double lse = mx + std::log(sum);
    auto dst = out.row(static_cast<std::size_t>(r));
    for (Eigen::Index c = 0; c < row.cols(); ++c) {
      dst[static_cast<std::size_t>(c)] = static_cast<float>(static_cast<double>(row(c)) - lse);
    }
  }
  return out;
}

}  // namespace promptrank::model
