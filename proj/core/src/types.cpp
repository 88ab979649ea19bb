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

#include <algorithm>
#include <string>

#include "ucrec/error.hpp"
#include "ucrec/types.hpp"

namespace ucrec {

SequenceWindow::SequenceWindow(std::size_t capacity) : positions_(capacity, kPaddingItem) {}

SequenceWindow::SequenceWindow(std::vector<ItemId> positions) : positions_(std::move(positions)) {}

SequenceWindow SequenceWindow::FromHistory(std::span<const ItemId> history, std::size_t capacity) {
  SequenceWindow window(capacity);
  const std::size_t n = std::min(history.size(), capacity);
  std::copy(history.end() - static_cast<std::ptrdiff_t>(n), history.end(),
            window.positions_.end() - static_cast<std::ptrdiff_t>(n));
  return window;
}

std::size_t SequenceWindow::effective_length() const {
  return static_cast<std::size_t>(
      std::count_if(positions_.begin(), positions_.end(), [](ItemId i) { return i != kPaddingItem; }));
}

std::vector<ItemId> SequenceWindow::history() const {
  std::vector<ItemId> out;
  for (ItemId i : positions_) {
    if (i != kPaddingItem) out.push_back(i);
  }
  return out;
}

SequenceWindow SequenceWindow::Appended(ItemId item) const {
  SequenceWindow out(capacity());
  if (capacity() == 0) return out;
  std::copy(positions_.begin() + 1, positions_.end(), out.positions_.begin());
  out.positions_.back() = item;
  return out;
}

SequenceWindow SequenceWindow::WithPadding(std::size_t pos) const {
  SequenceWindow out = *this;
  out.positions_.at(pos) = kPaddingItem;
  return out;
}

MaskVector MaskVector::Binary(std::size_t length) {
  return MaskVector(Mode::kBinary, Vector::Zero(static_cast<Eigen::Index>(length)));
}

MaskVector MaskVector::Relaxed(std::size_t length) {
  return MaskVector(Mode::kRelaxed, Vector::Zero(static_cast<Eigen::Index>(length)));
}

MaskVector MaskVector::Relaxed(const Vector& values) {
  MaskVector mask(Mode::kRelaxed, values);
  mask.ClipToUnitInterval();
  return mask;
}

void MaskVector::Set(std::size_t pos, double value) {
  if (pos >= size()) {
    throw ContractError("mask position " + std::to_string(pos) + " out of range " + std::to_string(size()));
  }
  if (binary() && value != 0.0 && value != 1.0) {
    throw ContractError("binary mask accepts only 0 or 1");
  }
  values_[static_cast<Eigen::Index>(pos)] = binary() ? value : std::clamp(value, 0.0, 1.0);
}

void MaskVector::ClipToUnitInterval() { values_ = values_.cwiseMax(0.0).cwiseMin(1.0); }

bool MaskVector::IsRevoked(std::size_t pos, double threshold) const {
  const double v = (*this)[pos];
  return binary() ? v == 1.0 : v >= threshold;
}

std::size_t MaskVector::CountRevoked() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += IsRevoked(i) ? 1 : 0;
  return n;
}

MaskVector MaskVector::Binarized(double threshold) const {
  MaskVector out = Binary(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if ((*this)[i] >= threshold) out.values_[static_cast<Eigen::Index>(i)] = 1.0;
  }
  return out;
}

MaskVector MaskVector::Appended() const {
  MaskVector out(mode_, Vector::Zero(values_.size()));
  if (values_.size() > 1) out.values_.head(values_.size() - 1) = values_.tail(values_.size() - 1);
  return out;
}

bool RecommendationList::Contains(ItemId item) const { return RankOf(item) != 0; }

std::size_t RecommendationList::RankOf(ItemId item) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].item == item) return i + 1;
  }
  return 0;
}

std::vector<ItemId> RecommendationList::items() const {
  std::vector<ItemId> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.item);
  return out;
}

}  // namespace ucrec
