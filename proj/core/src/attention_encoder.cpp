// Copyright 2026 The ucrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>

#include "encoders.hpp"

namespace ucrec::internal {
namespace {

constexpr std::size_t kQuery = 2;      // d x d
constexpr std::size_t kKey = 3;
constexpr std::size_t kValue = 4;
constexpr std::size_t kFfnIn = 5;      // d x d
constexpr std::size_t kFfnInBias = 6;  // 1 x d
constexpr std::size_t kFfnOut = 7;     // d x d
constexpr std::size_t kFfnOutBias = 8;
constexpr std::size_t kNormScale = 9;  // 1 x d
constexpr std::size_t kNormShift = 10;

constexpr double kNormEps = 1e-8;

enum Slot { kInputs, kQ, kK, kV, kProbs, kResid, kPre, kHidden, kNormed, kInvStd, kNumSlots };

double InvSqrtDim(const Model& model) { return 1.0 / std::sqrt(static_cast<double>(model.dim())); }

// Residual feed-forward head shared by both paths: o = z + relu(z W1 + b1) W2 + b2.
template <typename Rows>
Matrix FeedForward(const Model& model, const Rows& z, Matrix* pre_out, Matrix* hidden_out) {
  const auto& t = model.tensors();
  Matrix pre = (z * t[kFfnIn].value).rowwise() + t[kFfnInBias].value.row(0);
  Matrix hidden = pre.cwiseMax(0.0);
  Matrix out = z + ((hidden * t[kFfnOut].value).rowwise() + t[kFfnOutBias].value.row(0));
  if (pre_out != nullptr) *pre_out = std::move(pre);
  if (hidden_out != nullptr) *hidden_out = std::move(hidden);
  return out;
}

// Row-wise layer norm. `normed` gets (o - mean) / std, `inv_std` 1 / std.
Matrix Normalize(const Model& model, const Matrix& o, Matrix* normed, Matrix* inv_std) {
  const auto& t = model.tensors();
  const auto d = static_cast<double>(o.cols());
  Matrix n(o.rows(), o.cols());
  Matrix inv(o.rows(), 1);
  for (Eigen::Index r = 0; r < o.rows(); ++r) {
    const Eigen::RowVectorXd centered = o.row(r).array() - o.row(r).mean();
    inv(r, 0) = 1.0 / std::sqrt(centered.squaredNorm() / d + kNormEps);
    n.row(r) = centered * inv(r, 0);
  }
  Matrix out = (n.array().rowwise() * t[kNormScale].value.row(0).array()).matrix().rowwise() +
               t[kNormShift].value.row(0);
  if (normed != nullptr) *normed = std::move(n);
  if (inv_std != nullptr) *inv_std = std::move(inv);
  return out;
}

// d loss / d o for d loss / d norm(o); accumulates scale/shift gradients
// when `grads` is given.
Matrix NormalizeBackward(const Model& model, const Matrix& normed, const Matrix& inv_std, const Matrix& out_grad,
                         Gradients* grads) {
  const auto& t = model.tensors();
  if (grads != nullptr) {
    (*grads)[kNormScale] += out_grad.cwiseProduct(normed).colwise().sum();
    (*grads)[kNormShift] += out_grad.colwise().sum();
  }
  const Matrix dn = (out_grad.array().rowwise() * t[kNormScale].value.row(0).array()).matrix();
  Matrix dout(dn.rows(), dn.cols());
  for (Eigen::Index r = 0; r < dn.rows(); ++r) {
    const double mean = dn.row(r).mean();
    const double proj = dn.row(r).dot(normed.row(r)) / static_cast<double>(dn.cols());
    dout.row(r) = inv_std(r, 0) * (dn.row(r).array() - mean - normed.row(r).array() * proj).matrix();
  }
  return dout;
}

class AttentionEncoder final : public Encoder {
 public:
  // The last slot queries every slot. Keys and values are linear in the
  // inputs (no bias), so masking slot t scales k_t and v_t by keep[t] and
  // the query by keep[last]; everything else is cached here.
  PreparedWindow Prepare(const Model& model, Matrix inputs) const override {
    const auto& t = model.tensors();
    PreparedWindow p;
    const Eigen::Index last = inputs.rows() - 1;
    const Eigen::RowVectorXd query = inputs.row(last) * t[kQuery].value;
    p.projected = inputs * t[kKey].value;
    p.values = inputs * t[kValue].value;
    p.logits = (p.projected * query.transpose()) * InvSqrtDim(model);
    p.inputs = std::move(inputs);
    return p;
  }

  Vector Encode(const Model& model, const PreparedWindow& p, const Vector& keep) const override {
    const Matrix z = Residual(p, keep, nullptr);
    return Normalize(model, FeedForward(model, z, nullptr, nullptr), nullptr, nullptr).row(0).transpose();
  }

  Vector KeepGradient(const Model& model, const PreparedWindow& p, const Vector& keep,
                      const Vector& repr_grad) const override {
    const auto& t = model.tensors();
    const Eigen::Index last = p.inputs.rows() - 1;
    Vector weights;
    const Matrix z = Residual(p, keep, &weights);
    Matrix pre;
    Matrix hidden;
    const Matrix o = FeedForward(model, z, &pre, &hidden);
    Matrix normed;
    Matrix inv_std;
    Normalize(model, o, &normed, &inv_std);

    const Eigen::RowVectorXd dout = NormalizeBackward(model, normed, inv_std, repr_grad.transpose(), nullptr);
    const Eigen::RowVectorXd dpre =
        (dout * t[kFfnOut].value.transpose()).cwiseProduct((pre.row(0).array() > 0.0).cast<double>().matrix());
    const Eigen::RowVectorXd dz = dout + dpre * t[kFfnIn].value.transpose();

    Vector grad = Vector::Zero(keep.size());
    grad[last] += dz.dot(p.inputs.row(last));
    const Vector value_dot = p.values * dz.transpose();  // dz . v0_t
    const Vector dweight = keep.cwiseProduct(value_dot);
    grad += weights.cwiseProduct(value_dot);
    const double mean = weights.dot(dweight);
    const Vector dlogit = weights.cwiseProduct((dweight.array() - mean).matrix());
    // logit_t = keep[t] * keep[last] * c_t
    grad += dlogit.cwiseProduct(p.logits) * keep[last];
    grad[last] += dlogit.cwiseProduct(keep).dot(p.logits);
    return grad;
  }

  Matrix ForwardAll(const Model& model, const Matrix& inputs, TrainCache* cache) const override {
    const auto& t = model.tensors();
    const Eigen::Index steps = inputs.rows();
    cache->slots.assign(kNumSlots, Matrix());
    auto& s = cache->slots;
    s[kInputs] = inputs;
    s[kQ] = inputs * t[kQuery].value;
    s[kK] = inputs * t[kKey].value;
    s[kV] = inputs * t[kValue].value;
    Matrix logits = (s[kQ] * s[kK].transpose()) * InvSqrtDim(model);
    Matrix& probs = s[kProbs];
    probs = Matrix::Zero(steps, steps);
    for (Eigen::Index row = 0; row < steps; ++row) {
      const auto causal = logits.row(row).head(row + 1);
      const double peak = causal.maxCoeff();
      const Eigen::RowVectorXd e = (causal.array() - peak).exp().matrix();
      probs.row(row).head(row + 1) = e / e.sum();
    }
    s[kResid] = inputs + probs * s[kV];
    return Normalize(model, FeedForward(model, s[kResid], &s[kPre], &s[kHidden]), &s[kNormed], &s[kInvStd]);
  }

  Matrix BackwardAll(const Model& model, const TrainCache& cache, const Matrix& norm_grad,
                     Gradients* grads) const override {
    const auto& t = model.tensors();
    const auto& s = cache.slots;
    auto& g = *grads;
    const Matrix out_grad = NormalizeBackward(model, s[kNormed], s[kInvStd], norm_grad, grads);
    g[kFfnOut].noalias() += s[kHidden].transpose() * out_grad;
    g[kFfnOutBias] += out_grad.colwise().sum();
    const Matrix dpre =
        (out_grad * t[kFfnOut].value.transpose()).cwiseProduct((s[kPre].array() > 0.0).cast<double>().matrix());
    g[kFfnIn].noalias() += s[kResid].transpose() * dpre;
    g[kFfnInBias] += dpre.colwise().sum();
    const Matrix dz = out_grad + dpre * t[kFfnIn].value.transpose();

    const Matrix& probs = s[kProbs];
    const Matrix dprobs = dz * s[kV].transpose();
    const Matrix dv = probs.transpose() * dz;
    const Vector row_dot = dprobs.cwiseProduct(probs).rowwise().sum();
    const Matrix dlogits =
        (probs.array() * (dprobs.colwise() - row_dot).array()).matrix() * InvSqrtDim(model);
    const Matrix dq = dlogits * s[kK];
    const Matrix dk = dlogits.transpose() * s[kQ];

    const Matrix& x = s[kInputs];
    g[kQuery].noalias() += x.transpose() * dq;
    g[kKey].noalias() += x.transpose() * dk;
    g[kValue].noalias() += x.transpose() * dv;
    Matrix dx = dz;
    dx.noalias() += dq * t[kQuery].value.transpose();
    dx.noalias() += dk * t[kKey].value.transpose();
    dx.noalias() += dv * t[kValue].value.transpose();
    return dx;
  }

 private:
  // z = keep[last] * x0_last + sum_t w_t keep[t] v0_t with
  // w = softmax(keep[t] * keep[last] * c_t).
  static Matrix Residual(const PreparedWindow& p, const Vector& keep, Vector* weights_out) {
    const Eigen::Index last = p.inputs.rows() - 1;
    const Vector logits = p.logits.cwiseProduct(keep) * keep[last];
    const double peak = logits.maxCoeff();
    Vector w = (logits.array() - peak).exp().matrix();
    w /= w.sum();
    Matrix z = keep[last] * p.inputs.row(last) + (w.cwiseProduct(keep)).transpose() * p.values;
    if (weights_out != nullptr) *weights_out = std::move(w);
    return z;
  }
};

}  // namespace

const Encoder& AttentionEncoderInstance() {
  static const AttentionEncoder encoder;
  return encoder;
}

}  // namespace ucrec::internal
