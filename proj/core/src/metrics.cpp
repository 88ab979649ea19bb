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

#include "ucrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ucrec/error.hpp"

namespace ucrec::eval {

double Complexity(const MaskVector& mask, std::size_t effective_length) {
  if (!mask.binary()) throw ContractError("complexity is defined on binary masks");
  if (effective_length == 0) throw ContractError("complexity needs a non-empty history");
  return static_cast<double>(mask.CountRevoked()) / static_cast<double>(effective_length);
}

double ControlAccuracy(const RecommendationList& original, const RecommendationList& counterfactual,
                       std::span<const ItemId> undesired) {
  if (original.k != counterfactual.k) {
    throw PreconditionError("lists have different K (" + std::to_string(original.k) + " vs " +
                            std::to_string(counterfactual.k) + ")");
  }
  for (ItemId g : undesired) {
    if (!original.Contains(g)) {
      throw PreconditionError("undesired item " + std::to_string(g) + " is not in the original list");
    }
  }
  std::vector<ItemId> removed;
  for (const auto& e : original.entries) {
    if (!counterfactual.Contains(e.item)) removed.push_back(e.item);
  }
  std::vector<ItemId> wanted(undesired.begin(), undesired.end());
  std::sort(removed.begin(), removed.end());
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  std::vector<ItemId> inter;
  std::vector<ItemId> uni;
  std::set_intersection(removed.begin(), removed.end(), wanted.begin(), wanted.end(), std::back_inserter(inter));
  std::set_union(removed.begin(), removed.end(), wanted.begin(), wanted.end(), std::back_inserter(uni));
  if (uni.empty()) return 1.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double NdcgFromRank(std::size_t rank, std::size_t k) {
  if (rank == 0 || rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double HitFromRank(std::size_t rank, std::size_t k) { return rank != 0 && rank <= k ? 1.0 : 0.0; }

namespace {
std::size_t RankIn(std::span<const ItemId> ranked, ItemId relevant) {
  const auto it = std::find(ranked.begin(), ranked.end(), relevant);
  return it == ranked.end() ? 0 : static_cast<std::size_t>(it - ranked.begin()) + 1;
}
}  // namespace

double NdcgAtK(std::span<const ItemId> ranked, ItemId relevant, std::size_t k) {
  return NdcgFromRank(RankIn(ranked, relevant), k);
}

double HitRateAtK(std::span<const ItemId> ranked, ItemId relevant, std::size_t k) {
  return HitFromRank(RankIn(ranked, relevant), k);
}

std::size_t FullRank(const Vector& scores, ItemId item, std::span<const char> ineligible) {
  const auto skip = [&](Eigen::Index i) {
    return static_cast<std::size_t>(i) < ineligible.size() && ineligible[static_cast<std::size_t>(i)];
  };
  if (skip(item)) return 0;
  const double target = scores[item];
  std::size_t ahead = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (i == item || skip(i)) continue;
    if (scores[i] > target || (scores[i] == target && i < item)) ++ahead;
  }
  return ahead + 1;
}

}  // namespace ucrec::eval
