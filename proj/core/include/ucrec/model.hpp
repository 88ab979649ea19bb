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

#ifndef UCREC_MODEL_HPP_
#define UCREC_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ucrec/types.hpp"

namespace ucrec {

// Sequence encoders. Every kind maps a masked window to a d-dim
// representation u and scores item j as <u, e_j>.
//   kGru:           one GRU layer, u = last hidden state.
//   kSelfAttention: one causal single-head attention block with learned
//                   positions, a residual feed-forward layer and a final
//                   layer norm.
//   kLinear:        u = sum of the masked input embeddings. Used as an
//                   analytic oracle in tests and fixtures.
enum class ScorerKind { kGru, kSelfAttention, kLinear };

std::string_view ToString(ScorerKind kind);
ScorerKind ParseScorerKind(std::string_view name);

struct ModelShape {
  ScorerKind kind = ScorerKind::kSelfAttention;
  std::size_t n_items = 0;
  std::size_t dim = 0;
  std::size_t window = 0;

  bool operator==(const ModelShape&) const = default;
};

struct Tensor {
  std::string name;
  Matrix value;
};

// Catalog embeddings plus the encoder weights. Immutable once training is
// done; every inference entry point takes it by const reference.
class Model {
 public:
  static Model Zeros(const ModelShape& shape);
  // Small uniform weights; embeddings ~ U(-1/sqrt(d), 1/sqrt(d)).
  static Model Initialize(const ModelShape& shape, std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }
  ScorerKind kind() const { return shape_.kind; }
  std::size_t n_items() const { return shape_.n_items; }
  std::size_t dim() const { return shape_.dim; }
  std::size_t window() const { return shape_.window; }

  bool trained() const { return trained_; }
  void set_trained(bool trained) { trained_ = trained; }

  const Matrix& embeddings() const { return tensors_.front().value; }
  Matrix& embeddings() { return tensors_.front().value; }
  auto embedding(ItemId item) const { return embeddings().row(item); }

  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const Matrix& tensor(std::string_view name) const;
  Matrix& tensor(std::string_view name);

  bool IsValidItem(ItemId item) const {
    return item >= 0 && static_cast<std::size_t>(item) < shape_.n_items;
  }
  // Throws InvalidItemError.
  void CheckItem(ItemId item) const;
  bool AllFinite() const;

 private:
  explicit Model(const ModelShape& shape);

  ModelShape shape_;
  std::vector<Tensor> tensors_;
  bool trained_ = false;
};

// Row t of the result is the input vector of slot t (zero for padding).
Matrix EmbedSequence(const Model& model, const SequenceWindow& window);

// Row t scaled by (1 - mask[t]).
Matrix ApplyMask(const Matrix& sequence, const MaskVector& mask);

namespace internal {
struct PreparedWindow;
}

// Binds a model to one window and caches everything that does not depend
// on the mask, so repeated what-if evaluations only pay for the parts the
// mask touches.
class WindowScorer {
 public:
  WindowScorer(const Model& model, SequenceWindow window);
  ~WindowScorer();
  WindowScorer(WindowScorer&&) noexcept;
  WindowScorer& operator=(WindowScorer&&) noexcept;

  const Model& model() const { return *model_; }
  const SequenceWindow& window() const { return window_; }

  Vector Represent(const MaskVector& mask) const;
  double Score(const MaskVector& mask, ItemId item) const;
  Vector ScoreAll(const MaskVector& mask) const;

  // With exclude_history, items at slots not revoked by `mask` are
  // ineligible (relaxed masks count as revoked at >= revoke_threshold).
  RecommendationList TopK(const MaskVector& mask, std::size_t k, bool exclude_history,
                          double revoke_threshold = 0.5) const;
  RecommendationList TopKFromScores(const Vector& scores, const MaskVector& mask, std::size_t k,
                                    bool exclude_history, double revoke_threshold = 0.5) const;

  // d loss / d mask given d loss / d representation. Works for any mask
  // mode; padding slots always get 0.
  Vector MaskGradient(const MaskVector& mask, const Vector& repr_grad) const;

 private:
  void CheckMask(const MaskVector& mask) const;

  const Model* model_;
  SequenceWindow window_;
  std::unique_ptr<internal::PreparedWindow> prepared_;
};

// Single-shot wrappers around WindowScorer.
double Score(const Model& model, const SequenceWindow& window, const MaskVector& mask, ItemId item);

struct ScoreGradient {
  std::vector<ItemId> items;
  Vector scores;
  // Row i holds d score(items[i]) / d mask.
  Matrix mask_grad;
};

// Requires a relaxed mask.
ScoreGradient ScoreWithGradient(const Model& model, const SequenceWindow& window,
                                const MaskVector& mask, std::span<const ItemId> items);

RecommendationList RecommendTopK(const Model& model, const SequenceWindow& window,
                                 const MaskVector& mask, std::size_t k, bool exclude_history = true);

// Ranks `scores` (higher first, ties by lower id) skipping `ineligible`.
RecommendationList RankTopK(const Vector& scores, std::size_t k, std::span<const char> ineligible);

}  // namespace ucrec

#endif  // UCREC_MODEL_HPP_
