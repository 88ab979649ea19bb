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

#ifndef UCREC_SRC_ENCODERS_HPP_
#define UCREC_SRC_ENCODERS_HPP_

#include <vector>

#include "ucrec/model.hpp"

namespace ucrec::internal {

// Mask-independent state for one window. Which members are populated
// depends on the encoder.
struct PreparedWindow {
  Matrix inputs;     // T x d unmasked inputs
  Matrix projected;  // encoder-specific per-slot projections
  Matrix values;     // attention only: per-slot value vectors
  Vector logits;     // attention only: unmasked last-query logits
};

// Per-sequence activations kept for the all-positions backward pass.
struct TrainCache {
  std::vector<Matrix> slots;
};

// Gradients laid out exactly like Model::tensors().
using Gradients = std::vector<Matrix>;

Gradients ZeroGradients(const Model& model);

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual PreparedWindow Prepare(const Model& model, Matrix inputs) const = 0;
  // `keep` holds 1 - mask.
  virtual Vector Encode(const Model& model, const PreparedWindow& prepared,
                        const Vector& keep) const = 0;
  // d loss / d keep for d loss / d representation.
  virtual Vector KeepGradient(const Model& model, const PreparedWindow& prepared,
                              const Vector& keep, const Vector& repr_grad) const = 0;

  // Training path: row s of the result is the representation after
  // consuming slots 0..s.
  virtual Matrix ForwardAll(const Model& model, const Matrix& inputs, TrainCache* cache) const = 0;
  // Accumulates weight gradients into `grads` and returns d loss / d inputs.
  virtual Matrix BackwardAll(const Model& model, const TrainCache& cache, const Matrix& out_grad,
                             Gradients* grads) const = 0;
};

const Encoder& EncoderFor(ScorerKind kind);

// Weight tensors (after the shared item embedding) for each encoder.
struct TensorSpec {
  const char* name;
  std::size_t rows;
  std::size_t cols;
};
std::vector<TensorSpec> EncoderTensorSpecs(const ModelShape& shape);

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace ucrec::internal

#endif  // UCREC_SRC_ENCODERS_HPP_
