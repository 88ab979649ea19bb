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

#ifndef UCREC_METRICS_HPP_
#define UCREC_METRICS_HPP_

#include <cstddef>
#include <span>

#include "ucrec/types.hpp"

namespace ucrec::eval {

// Share of the real history that was revoked: ones(mask) / effective_length.
// Requires a binary mask and effective_length >= 1.
double Complexity(const MaskVector& mask, std::size_t effective_length);

// Jaccard overlap between the items that left the list and the undesired
// items: |(R \ R*) n G| / |(R \ R*) u G|. Both lists must share K and G must
// be a subset of R. Returns 1 when both sets are empty.
double ControlAccuracy(const RecommendationList& original, const RecommendationList& counterfactual,
                       std::span<const ItemId> undesired);

// Single relevant item metrics. `rank` is 1-based; 0 means not ranked.
double NdcgFromRank(std::size_t rank, std::size_t k);
double HitFromRank(std::size_t rank, std::size_t k);
double NdcgAtK(std::span<const ItemId> ranked, ItemId relevant, std::size_t k);
double HitRateAtK(std::span<const ItemId> ranked, ItemId relevant, std::size_t k);

// 1-based position `item` would take in a full ranking of `scores` (ties by
// lower id first), skipping ineligible items. 0 when `item` is ineligible.
std::size_t FullRank(const Vector& scores, ItemId item, std::span<const char> ineligible);

}  // namespace ucrec::eval

#endif  // UCREC_METRICS_HPP_
