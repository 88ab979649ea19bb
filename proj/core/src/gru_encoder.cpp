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

#include "encoders.hpp"

namespace ucrec::internal {
namespace {

// Tensor slots in Model::tensors().
constexpr std::size_t kInputWeights = 1;   // d x 3d, gate order [r | z | n]
constexpr std::size_t kHiddenWeights = 2;  // d x 3d
constexpr std::size_t kInputBias = 3;      // 1 x 3d
constexpr std::size_t kHiddenBiasN = 4;    // 1 x d

// TrainCache slots.
enum Slot { kInputs, kPrevHidden, kReset, kUpdate, kCandidate, kHiddenN, kNumSlots };

struct StepState {
  Eigen::RowVectorXd r, z, n, hn, h;
};

// One GRU step. `gx` already includes the input bias.
StepState Step(const Model& model, const Eigen::RowVectorXd& gx, const Eigen::RowVectorXd& h) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Matrix& wh = model.tensors()[kHiddenWeights].value;
  const Eigen::RowVectorXd gh = h * wh;
  StepState s;
  s.hn = gh.segment(2 * d, d) + model.tensors()[kHiddenBiasN].value.row(0);
  s.r = (gx.segment(0, d) + gh.segment(0, d)).unaryExpr(&Sigmoid);
  s.z = (gx.segment(d, d) + gh.segment(d, d)).unaryExpr(&Sigmoid);
  s.n = (gx.segment(2 * d, d) + s.r.cwiseProduct(s.hn)).array().tanh().matrix();
  s.h = (1.0 - s.z.array()).matrix().cwiseProduct(s.n) + s.z.cwiseProduct(h);
  return s;
}

// Backprop of one step. Returns d loss / d h_prev and writes the gate
// pre-activation gradients.
Eigen::RowVectorXd StepBackward(const Model& model, const StepState& s, const Eigen::RowVectorXd& h_prev,
                                const Eigen::RowVectorXd& dh, Eigen::RowVectorXd* dgx,
                                Eigen::RowVectorXd* dgh) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Eigen::RowVectorXd dn = dh.cwiseProduct((1.0 - s.z.array()).matrix());
  const Eigen::RowVectorXd dz = dh.cwiseProduct(h_prev - s.n);
  const Eigen::RowVectorXd dan = dn.cwiseProduct((1.0 - s.n.array().square()).matrix());
  const Eigen::RowVectorXd dr = dan.cwiseProduct(s.hn);
  const Eigen::RowVectorXd dar = dr.cwiseProduct((s.r.array() * (1.0 - s.r.array())).matrix());
  const Eigen::RowVectorXd daz = dz.cwiseProduct((s.z.array() * (1.0 - s.z.array())).matrix());
  dgx->resize(3 * d);
  dgx->segment(0, d) = dar;
  dgx->segment(d, d) = daz;
  dgx->segment(2 * d, d) = dan;
  dgh->resize(3 * d);
  dgh->segment(0, d) = dar;
  dgh->segment(d, d) = daz;
  dgh->segment(2 * d, d) = dan.cwiseProduct(s.r);
  return dh.cwiseProduct(s.z) + *dgh * model.tensors()[kHiddenWeights].value.transpose();
}

class GruEncoder final : public Encoder {
 public:
  PreparedWindow Prepare(const Model& model, Matrix inputs) const override {
    PreparedWindow p;
    p.projected = inputs * model.tensors()[kInputWeights].value;
    p.inputs = std::move(inputs);
    return p;
  }

  Vector Encode(const Model& model, const PreparedWindow& prepared, const Vector& keep) const override {
    const Eigen::RowVectorXd& bias = model.tensors()[kInputBias].value.row(0);
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
    for (Eigen::Index t = 0; t < prepared.projected.rows(); ++t) {
      const Eigen::RowVectorXd gx = keep[t] * prepared.projected.row(t) + bias;
      h = Step(model, gx, h).h;
    }
    return h.transpose();
  }

  Vector KeepGradient(const Model& model, const PreparedWindow& prepared, const Vector& keep,
                      const Vector& repr_grad) const override {
    const Eigen::Index steps = prepared.projected.rows();
    const Eigen::RowVectorXd& bias = model.tensors()[kInputBias].value.row(0);
    std::vector<StepState> states;
    states.reserve(static_cast<std::size_t>(steps));
    std::vector<Eigen::RowVectorXd> prev;
    prev.reserve(static_cast<std::size_t>(steps));
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
    for (Eigen::Index t = 0; t < steps; ++t) {
      prev.push_back(h);
      states.push_back(Step(model, keep[t] * prepared.projected.row(t) + bias, h));
      h = states.back().h;
    }
    Vector grad = Vector::Zero(steps);
    Eigen::RowVectorXd dh = repr_grad.transpose();
    Eigen::RowVectorXd dgx, dgh;
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      const auto i = static_cast<std::size_t>(t);
      dh = StepBackward(model, states[i], prev[i], dh, &dgx, &dgh);
      grad[t] = dgx.dot(prepared.projected.row(t));
    }
    return grad;
  }

  Matrix ForwardAll(const Model& model, const Matrix& inputs, TrainCache* cache) const override {
    const Eigen::Index steps = inputs.rows();
    const auto d = static_cast<Eigen::Index>(model.dim());
    const Matrix gx = (inputs * model.tensors()[kInputWeights].value).rowwise() +
                      model.tensors()[kInputBias].value.row(0);
    cache->slots.assign(kNumSlots, Matrix());
    cache->slots[kInputs] = inputs;
    for (int s : {kPrevHidden, kReset, kUpdate, kCandidate, kHiddenN}) {
      cache->slots[static_cast<std::size_t>(s)].resize(steps, d);
    }
    Matrix out(steps, d);
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(d);
    for (Eigen::Index t = 0; t < steps; ++t) {
      cache->slots[kPrevHidden].row(t) = h;
      const StepState s = Step(model, gx.row(t), h);
      cache->slots[kReset].row(t) = s.r;
      cache->slots[kUpdate].row(t) = s.z;
      cache->slots[kCandidate].row(t) = s.n;
      cache->slots[kHiddenN].row(t) = s.hn;
      h = s.h;
      out.row(t) = h;
    }
    return out;
  }

  Matrix BackwardAll(const Model& model, const TrainCache& cache, const Matrix& out_grad,
                     Gradients* grads) const override {
    const Matrix& inputs = cache.slots[kInputs];
    const Matrix& prev = cache.slots[kPrevHidden];
    const Eigen::Index steps = inputs.rows();
    const auto d = static_cast<Eigen::Index>(model.dim());
    Matrix dgx_all(steps, 3 * d);
    Matrix dgh_all(steps, 3 * d);
    Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd dgx, dgh;
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      StepState s;
      s.r = cache.slots[kReset].row(t);
      s.z = cache.slots[kUpdate].row(t);
      s.n = cache.slots[kCandidate].row(t);
      s.hn = cache.slots[kHiddenN].row(t);
      dh += out_grad.row(t);
      dh = StepBackward(model, s, prev.row(t), dh, &dgx, &dgh);
      dgx_all.row(t) = dgx;
      dgh_all.row(t) = dgh;
    }
    (*grads)[kInputWeights].noalias() += inputs.transpose() * dgx_all;
    (*grads)[kHiddenWeights].noalias() += prev.transpose() * dgh_all;
    (*grads)[kInputBias] += dgx_all.colwise().sum();
    (*grads)[kHiddenBiasN] += dgh_all.rightCols(d).colwise().sum();
    return dgx_all * model.tensors()[kInputWeights].value.transpose();
  }
};

}  // namespace

const Encoder& GruEncoderInstance() {
  static const GruEncoder encoder;
  return encoder;
}

}  // namespace ucrec::internal
