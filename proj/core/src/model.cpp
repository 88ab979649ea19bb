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

#include "ucrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "encoders.hpp"
#include "ucrec/error.hpp"

namespace ucrec {

std::string_view ToString(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kGru:
      return "gru";
    case ScorerKind::kSelfAttention:
      return "self-attention";
    case ScorerKind::kLinear:
      return "linear";
  }
  return "unknown";
}

ScorerKind ParseScorerKind(std::string_view name) {
  if (name == "gru") return ScorerKind::kGru;
  if (name == "self-attention" || name == "attention" || name == "sasrec") return ScorerKind::kSelfAttention;
  if (name == "linear") return ScorerKind::kLinear;
  throw DataError("unknown scorer kind '" + std::string(name) + "'");
}

Model::Model(const ModelShape& shape) : shape_(shape) {
  if (shape.n_items == 0 || shape.dim == 0 || shape.window == 0) {
    throw ContractError("model needs n_items, dim and window >= 1");
  }
  tensors_.push_back({"item_embedding", Matrix::Zero(static_cast<Eigen::Index>(shape.n_items),
                                                     static_cast<Eigen::Index>(shape.dim))});
  for (const auto& spec : internal::EncoderTensorSpecs(shape)) {
    tensors_.push_back(
        {spec.name, Matrix::Zero(static_cast<Eigen::Index>(spec.rows), static_cast<Eigen::Index>(spec.cols))});
  }
}

Model Model::Zeros(const ModelShape& shape) { return Model(shape); }

Model Model::Initialize(const ModelShape& shape, std::uint64_t seed) {
  Model model(shape);
  std::mt19937_64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(shape.dim));
  auto fill = [&rng](Matrix& m, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  for (Tensor& t : model.tensors_) {
    // Biases start at zero.
    if (t.value.rows() == 1 && t.name.find(".b_") != std::string::npos) continue;
    if (t.name == "norm.scale") {
      t.value.setOnes();
      continue;
    }
    fill(t.value, t.name == "attn.position" ? 0.1 * scale : scale);
  }
  return model;
}

const Matrix& Model::tensor(std::string_view name) const {
  for (const Tensor& t : tensors_) {
    if (t.name == name) return t.value;
  }
  throw ContractError("no tensor named '" + std::string(name) + "'");
}

Matrix& Model::tensor(std::string_view name) {
  return const_cast<Matrix&>(static_cast<const Model&>(*this).tensor(name));
}

void Model::CheckItem(ItemId item) const {
  if (!IsValidItem(item)) {
    throw InvalidItemError("item " + std::to_string(item) + " is not in the catalog of " +
                           std::to_string(shape_.n_items) + " items");
  }
}

bool Model::AllFinite() const {
  return std::all_of(tensors_.begin(), tensors_.end(), [](const Tensor& t) { return t.value.allFinite(); });
}

Matrix EmbedSequence(const Model& model, const SequenceWindow& window) {
  if (window.capacity() != model.window()) {
    throw ContractError("window capacity " + std::to_string(window.capacity()) + " != model window " +
                        std::to_string(model.window()));
  }
  const auto d = static_cast<Eigen::Index>(model.dim());
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(window.capacity()), d);
  const bool positional = model.kind() == ScorerKind::kSelfAttention;
  for (std::size_t t = 0; t < window.capacity(); ++t) {
    const ItemId item = window[t];
    if (item == kPaddingItem) continue;
    model.CheckItem(item);
    const auto row = static_cast<Eigen::Index>(t);
    out.row(row) = model.embedding(item);
    if (positional) out.row(row) += model.tensor("attn.position").row(row);
  }
  return out;
}

Matrix ApplyMask(const Matrix& sequence, const MaskVector& mask) {
  if (static_cast<std::size_t>(sequence.rows()) != mask.size()) {
    throw ContractError("mask length " + std::to_string(mask.size()) + " != sequence length " +
                        std::to_string(sequence.rows()));
  }
  const Vector keep = (1.0 - mask.values().array()).matrix();
  return keep.asDiagonal() * sequence;
}

WindowScorer::WindowScorer(const Model& model, SequenceWindow window)
    : model_(&model), window_(std::move(window)) {
  prepared_ = std::make_unique<internal::PreparedWindow>(
      internal::EncoderFor(model.kind()).Prepare(model, EmbedSequence(model, window_)));
}

WindowScorer::~WindowScorer() = default;
WindowScorer::WindowScorer(WindowScorer&&) noexcept = default;
WindowScorer& WindowScorer::operator=(WindowScorer&&) noexcept = default;

void WindowScorer::CheckMask(const MaskVector& mask) const {
  if (mask.size() != window_.capacity()) {
    throw ContractError("mask length " + std::to_string(mask.size()) + " != window capacity " +
                        std::to_string(window_.capacity()));
  }
}

Vector WindowScorer::Represent(const MaskVector& mask) const {
  CheckMask(mask);
  const Vector keep = (1.0 - mask.values().array()).matrix();
  return internal::EncoderFor(model_->kind()).Encode(*model_, *prepared_, keep);
}

double WindowScorer::Score(const MaskVector& mask, ItemId item) const {
  model_->CheckItem(item);
  return model_->embedding(item).dot(Represent(mask));
}

Vector WindowScorer::ScoreAll(const MaskVector& mask) const { return model_->embeddings() * Represent(mask); }

RecommendationList WindowScorer::TopK(const MaskVector& mask, std::size_t k, bool exclude_history,
                                      double revoke_threshold) const {
  return TopKFromScores(ScoreAll(mask), mask, k, exclude_history, revoke_threshold);
}

RecommendationList WindowScorer::TopKFromScores(const Vector& scores, const MaskVector& mask, std::size_t k,
                                                bool exclude_history, double revoke_threshold) const {
  CheckMask(mask);
  std::vector<char> ineligible(model_->n_items(), 0);
  if (exclude_history) {
    for (std::size_t t = 0; t < window_.capacity(); ++t) {
      if (!window_.is_padding(t) && !mask.IsRevoked(t, revoke_threshold)) {
        ineligible[static_cast<std::size_t>(window_[t])] = 1;
      }
    }
  }
  return RankTopK(scores, k, ineligible);
}

Vector WindowScorer::MaskGradient(const MaskVector& mask, const Vector& repr_grad) const {
  CheckMask(mask);
  const Vector keep = (1.0 - mask.values().array()).matrix();
  Vector grad = -internal::EncoderFor(model_->kind()).KeepGradient(*model_, *prepared_, keep, repr_grad);
  for (std::size_t t = 0; t < window_.capacity(); ++t) {
    if (window_.is_padding(t)) grad[static_cast<Eigen::Index>(t)] = 0.0;
  }
  return grad;
}

double Score(const Model& model, const SequenceWindow& window, const MaskVector& mask, ItemId item) {
  return WindowScorer(model, window).Score(mask, item);
}

ScoreGradient ScoreWithGradient(const Model& model, const SequenceWindow& window, const MaskVector& mask,
                                std::span<const ItemId> items) {
  if (mask.binary()) throw ContractError("score gradient requires a relaxed mask");
  const WindowScorer scorer(model, window);
  const Vector repr = scorer.Represent(mask);
  ScoreGradient out;
  out.items.assign(items.begin(), items.end());
  out.scores.resize(static_cast<Eigen::Index>(items.size()));
  out.mask_grad.resize(static_cast<Eigen::Index>(items.size()), static_cast<Eigen::Index>(window.capacity()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    model.CheckItem(items[i]);
    const Vector e = model.embedding(items[i]).transpose();
    const auto row = static_cast<Eigen::Index>(i);
    out.scores[row] = e.dot(repr);
    out.mask_grad.row(row) = scorer.MaskGradient(mask, e).transpose();
  }
  return out;
}

RecommendationList RecommendTopK(const Model& model, const SequenceWindow& window, const MaskVector& mask,
                                 std::size_t k, bool exclude_history) {
  return WindowScorer(model, window).TopK(mask, k, exclude_history);
}

RecommendationList RankTopK(const Vector& scores, std::size_t k, std::span<const char> ineligible) {
  if (k == 0) throw ContractError("K must be >= 1");
  std::vector<ItemId> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (static_cast<std::size_t>(i) < ineligible.size() && ineligible[static_cast<std::size_t>(i)]) continue;
    candidates.push_back(static_cast<ItemId>(i));
  }
  const auto better = [&scores](ItemId a, ItemId b) {
    const double sa = scores[a];
    const double sb = scores[b];
    if (sa != sb) return sa > sb;
    return a < b;
  };
  RecommendationList list;
  list.k = k;
  list.truncated = candidates.size() < k;
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                    better);
  list.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) list.entries.push_back({candidates[i], scores[candidates[i]]});
  return list;
}

}  // namespace ucrec
