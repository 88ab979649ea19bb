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

#ifndef UCREC_ENGINE_HPP_
#define UCREC_ENGINE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ucrec/model.hpp"
#include "ucrec/types.hpp"

namespace ucrec {

enum class Method { kSearch, kRelax, kRandom, kSimilarity };

std::string_view ToString(Method method);
Method ParseMethod(std::string_view name);

struct RetroHyperparams {
  // Greedy: weight on keeping the rest of the list.
  double gamma1 = 1.0;
  // Relaxation.
  double lambda = 10.0;
  double gamma2 = 1.0;
  double alpha1 = 0.1;
  double learning_rate = 0.01;
  std::size_t steps = 500;
  double threshold = 0.5;
  // Minimize +mean(score of kept items) instead of its negation.
  bool literal_r2 = false;

  // Throws ContractError on out-of-range values.
  void Validate() const;
};

struct RetroRequest {
  ItemId target = kPaddingItem;
  std::size_t k = 10;
  RetroHyperparams hyper;
  // Only used by the random baseline.
  std::uint64_t seed = 0;
};

// One user's window bound to a model. Items at non-revoked window slots and
// the `exclude` items are never recommended; revoking a slot makes its item
// eligible again.
class ExplainContext {
 public:
  // `exclude` is meant for history that fell out of the window. With
  // exclude_window = false the window items stay recommendable too.
  ExplainContext(const Model& model, SequenceWindow window, std::span<const ItemId> exclude = {},
                 bool exclude_window = true);

  const Model& model() const { return scorer_.model(); }
  const SequenceWindow& window() const { return scorer_.window(); }
  const WindowScorer& scorer() const { return scorer_; }

  // Relaxed masks count a slot as revoked at >= threshold.
  std::vector<char> Ineligible(const MaskVector& mask, double threshold = 0.5) const;
  RecommendationList TopK(const MaskVector& mask, std::size_t k) const;

 private:
  WindowScorer scorer_;
  std::vector<char> excluded_;
  bool exclude_window_;
};

struct Revocation {
  std::size_t position;
  ItemId item;
  bool operator==(const Revocation&) const = default;
};

struct ExplanationRecord {
  enum class Kind { kRetrospective, kProspective };
  enum class Status { kSuccess, kFailure };

  Kind kind = Kind::kRetrospective;
  Method method = Method::kSearch;
  Status status = Status::kFailure;
  // Target item for retrospective records, the new interaction for
  // prospective ones.
  ItemId item = kPaddingItem;
  std::size_t k = 0;
  // Ascending by position. Empty on failure.
  std::vector<Revocation> revoked;
  // In the order they rank in the new list.
  std::vector<ItemId> added_items;
  std::size_t iterations = 0;
  MaskVector final_mask = MaskVector::Binary(0);
  std::string diagnostic;

  bool success() const { return status == Status::kSuccess; }
};

// All four retrospective generators share these rules: the target must be in
// the current top-K (PreconditionError otherwise), an empty window yields a
// failure record, and success means the target is absent from the top-K
// under final_mask.
ExplanationRecord GreedyRetrospective(const ExplainContext& ctx, const RetroRequest& req);
ExplanationRecord RelaxedRetrospective(const ExplainContext& ctx, const RetroRequest& req);
ExplanationRecord RandomRetrospective(const ExplainContext& ctx, const RetroRequest& req);
ExplanationRecord SimilarityRetrospective(const ExplainContext& ctx, const RetroRequest& req);
ExplanationRecord Retrospective(const ExplainContext& ctx, const RetroRequest& req, Method method);

// Relaxation objective at `mask` with v_K chosen from the ranking under
// `mask`. `original` is the unmasked top-K list.
struct RelaxationValue {
  double loss = 0.0;
  Vector gradient;
  ItemId kth_item = kPaddingItem;
};
RelaxationValue RelaxationObjective(const ExplainContext& ctx, const RetroRequest& req,
                                    const RecommendationList& original, const MaskVector& mask);

// Items that enter the top-K when `new_item` is appended to the window.
// Both lists exclude the window items, `exclude` and `new_item` itself.
ExplanationRecord ProspectiveExplanation(const Model& model, const SequenceWindow& window, ItemId new_item,
                                         std::size_t k, std::span<const ItemId> exclude = {});

using ItemLabel = std::function<std::string(ItemId)>;

// Fills the user-facing templates. `verb` completes "because you ...".
std::string RenderExplanation(const ExplanationRecord& record, const ItemLabel& name,
                              std::string_view verb = "interacted with");

// One JSON object, no trailing newline.
std::string ToJsonLine(const ExplanationRecord& record, std::string_view user, const ItemLabel& id);

}  // namespace ucrec

#endif  // UCREC_ENGINE_HPP_
