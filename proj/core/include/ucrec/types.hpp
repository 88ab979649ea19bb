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

#ifndef UCREC_TYPES_HPP_
#define UCREC_TYPES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ucrec {

using ItemId = std::int32_t;
using UserId = std::int32_t;

// Marks an empty window slot. Its embedding is the zero vector.
inline constexpr ItemId kPaddingItem = -1;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// The last `capacity` interactions of a user, oldest first. Short histories
// are left-padded. Padding may also appear in the middle when a caller
// substitutes the padding item for a behavior.
class SequenceWindow {
 public:
  explicit SequenceWindow(std::size_t capacity);
  SequenceWindow(std::vector<ItemId> positions);

  // Keeps the most recent `capacity` entries of `history`.
  static SequenceWindow FromHistory(std::span<const ItemId> history, std::size_t capacity);

  std::size_t capacity() const { return positions_.size(); }
  std::size_t effective_length() const;
  bool empty() const { return effective_length() == 0; }
  bool is_padding(std::size_t pos) const { return positions_[pos] == kPaddingItem; }

  ItemId operator[](std::size_t pos) const { return positions_[pos]; }
  std::span<const ItemId> positions() const { return positions_; }

  // Non-padding items, oldest first.
  std::vector<ItemId> history() const;

  // Shifts everything one slot left and puts `item` in the last slot. The
  // oldest slot falls off, so a full window keeps its effective length.
  SequenceWindow Appended(ItemId item) const;

  SequenceWindow WithPadding(std::size_t pos) const;

  bool operator==(const SequenceWindow&) const = default;

 private:
  std::vector<ItemId> positions_;
};

// Per-position revocation vector. A value of 1 revokes the behavior at that
// slot; relaxed masks carry values in [0, 1].
class MaskVector {
 public:
  enum class Mode { kBinary, kRelaxed };

  static MaskVector Binary(std::size_t length);
  static MaskVector Relaxed(std::size_t length);
  static MaskVector Relaxed(const Vector& values);

  Mode mode() const { return mode_; }
  bool binary() const { return mode_ == Mode::kBinary; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t pos) const { return values_[static_cast<Eigen::Index>(pos)]; }
  const Vector& values() const { return values_; }

  // Binary masks accept only 0 or 1; relaxed masks clip into [0, 1].
  void Set(std::size_t pos, double value);
  void Revoke(std::size_t pos) { Set(pos, 1.0); }
  void ClipToUnitInterval();

  // For binary masks: value == 1. For relaxed masks: value >= threshold.
  bool IsRevoked(std::size_t pos, double threshold = 0.5) const;
  std::size_t CountRevoked() const;

  // Positions with value >= threshold become 1, the rest 0.
  MaskVector Binarized(double threshold) const;

  // Same shift as SequenceWindow::Appended; the new slot is unrevoked.
  MaskVector Appended() const;

  bool operator==(const MaskVector& other) const {
    return mode_ == other.mode_ && values_ == other.values_;
  }

 private:
  MaskVector(Mode mode, Vector values) : mode_(mode), values_(std::move(values)) {}

  Mode mode_;
  Vector values_;
};

struct ScoredItem {
  ItemId item;
  double score;
  bool operator==(const ScoredItem&) const = default;
};

// Top-K list, best first. Ties are broken by ascending item id.
struct RecommendationList {
  std::vector<ScoredItem> entries;
  std::size_t k = 0;
  // Set when fewer than k items were eligible.
  bool truncated = false;

  std::size_t size() const { return entries.size(); }
  bool Contains(ItemId item) const;
  // 1-based rank, 0 when absent.
  std::size_t RankOf(ItemId item) const;
  std::vector<ItemId> items() const;
};

}  // namespace ucrec

#endif  // UCREC_TYPES_HPP_
