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

#include "encoders.hpp"

namespace ucrec::internal {

const Encoder& GruEncoderInstance();
const Encoder& AttentionEncoderInstance();

namespace {

// u = sum_t keep[t] x_t.
class LinearEncoder final : public Encoder {
 public:
  PreparedWindow Prepare(const Model&, Matrix inputs) const override {
    PreparedWindow p;
    p.inputs = std::move(inputs);
    return p;
  }

  Vector Encode(const Model&, const PreparedWindow& p, const Vector& keep) const override {
    return p.inputs.transpose() * keep;
  }

  Vector KeepGradient(const Model&, const PreparedWindow& p, const Vector&,
                      const Vector& repr_grad) const override {
    return p.inputs * repr_grad;
  }

  Matrix ForwardAll(const Model&, const Matrix& inputs, TrainCache* cache) const override {
    cache->slots.clear();
    Matrix out = inputs;
    for (Eigen::Index t = 1; t < out.rows(); ++t) out.row(t) += out.row(t - 1);
    return out;
  }

  Matrix BackwardAll(const Model&, const TrainCache&, const Matrix& out_grad, Gradients*) const override {
    Matrix dx = out_grad;
    for (Eigen::Index t = dx.rows() - 2; t >= 0; --t) dx.row(t) += dx.row(t + 1);
    return dx;
  }
};

}  // namespace

const Encoder& EncoderFor(ScorerKind kind) {
  static const LinearEncoder linear;
  switch (kind) {
    case ScorerKind::kGru:
      return GruEncoderInstance();
    case ScorerKind::kSelfAttention:
      return AttentionEncoderInstance();
    case ScorerKind::kLinear:
      return linear;
  }
  return linear;
}

std::vector<TensorSpec> EncoderTensorSpecs(const ModelShape& shape) {
  const std::size_t d = shape.dim;
  switch (shape.kind) {
    case ScorerKind::kGru:
      return {{"gru.w_input", d, 3 * d},
              {"gru.w_hidden", d, 3 * d},
              {"gru.b_input", 1, 3 * d},
              {"gru.b_hidden_n", 1, d}};
    case ScorerKind::kSelfAttention:
      return {{"attn.position", shape.window, d},
              {"attn.w_query", d, d},
              {"attn.w_key", d, d},
              {"attn.w_value", d, d},
              {"ffn.w_in", d, d},
              {"ffn.b_in", 1, d},
              {"ffn.w_out", d, d},
              {"ffn.b_out", 1, d},
              {"norm.scale", 1, d},
              {"norm.b_shift", 1, d}};
    case ScorerKind::kLinear:
      return {};
  }
  return {};
}

Gradients ZeroGradients(const Model& model) {
  Gradients grads;
  grads.reserve(model.tensors().size());
  for (const Tensor& t : model.tensors()) grads.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
  return grads;
}

}  // namespace ucrec::internal
