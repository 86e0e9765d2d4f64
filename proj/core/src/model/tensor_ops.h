#pragma once

#include <cstddef>
#include <vector>

#include <span>

#include <Eigen/Core>

#include "promptrank/backend.h"

namespace promptrank::model {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<const RowVector>;

// A borrowed [out, in] weight (PyTorch layout) with an optional bias.
struct Linear {
  const float* weight = nullptr;
  const float* bias = nullptr;
  Eigen::Index out = 0;
  Eigen::Index in = 0;

  MatrixMap W() const { return {weight, out, in}; }
  // x: [n, in] -> [n, out]
  Matrix operator()(const Eigen::Ref<const Matrix>& x) const;
};

struct Norm {
  const float* weight = nullptr;
  const float* bias = nullptr;  // null for RMS norm
  Eigen::Index dim = 0;
};

void RmsNormInPlace(Matrix& x, const Norm& n, float eps);
Matrix RmsNorm(const Matrix& x, const Norm& n, float eps);
Matrix LayerNorm(const Matrix& x, const Norm& n, float eps);

void ReluInPlace(Matrix& x);
void GeluInPlace(Matrix& x);     // exact (erf) form
void GeluTanhInPlace(Matrix& x);  // tanh approximation

// Dot-product attention over `heads` heads of width `head_dim`.
// q: [nq, heads*head_dim], k/v: [nk, heads*head_dim]. `bias`, when given,
// holds one additive [nq, nk] score matrix per head. When `causal_offset` is
// non-negative, query row i only sees keys 0..causal_offset+i.
Matrix Attention(const Eigen::Ref<const Matrix>& q, const Eigen::Ref<const Matrix>& k,
                 const Eigen::Ref<const Matrix>& v, Eigen::Index heads, Eigen::Index head_dim, float scale,
                 const std::vector<Matrix>* bias, Eigen::Index causal_offset);

// Rows of `table` selected by `ids`; throws BackendError on an id outside
// the table.
Matrix Gather(const MatrixMap& table, std::span<const TokenId> ids);

// Row-wise log-softmax of `logits`, accumulated in double, into a
// LogProbRows block.
LogProbRows LogSoftmaxRows(const Eigen::Ref<const Matrix>& logits);

}  // namespace promptrank::model
