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

#include "ucrec/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"

#include "ucrec/error.hpp"

namespace ucrec {
namespace {

using Status = ExplanationRecord::Status;

// Non-padding slot indices, oldest first.
std::vector<std::size_t> Slots(const SequenceWindow& window) {
  std::vector<std::size_t> slots;
  for (std::size_t pos = 0; pos < window.capacity(); ++pos) {
    if (!window.is_padding(pos)) slots.push_back(pos);
  }
  return slots;
}

bool TargetRemoved(const ExplainContext& ctx, const MaskVector& mask, ItemId target, std::size_t k) {
  return !ctx.TopK(mask, k).Contains(target);
}

// Checks the shared preconditions and returns the unmasked top-K.
RecommendationList Begin(const ExplainContext& ctx, const RetroRequest& req) {
  if (req.k == 0) throw ContractError("K must be >= 1");
  req.hyper.Validate();
  ctx.model().CheckItem(req.target);
  RecommendationList original = ctx.TopK(MaskVector::Binary(ctx.window().capacity()), req.k);
  if (!original.Contains(req.target)) {
    throw PreconditionError("item " + std::to_string(req.target) + " is not in the current top-" +
                            std::to_string(req.k));
  }
  return original;
}

ExplanationRecord NewRecord(const ExplainContext& ctx, const RetroRequest& req, Method method) {
  ExplanationRecord record;
  record.kind = ExplanationRecord::Kind::kRetrospective;
  record.method = method;
  record.item = req.target;
  record.k = req.k;
  record.final_mask = MaskVector::Binary(ctx.window().capacity());
  return record;
}

void Finish(const ExplainContext& ctx, ExplanationRecord* record) {
  if (TargetRemoved(ctx, record->final_mask, record->item, record->k)) {
    record->status = Status::kSuccess;
    for (std::size_t pos : Slots(ctx.window())) {
      if (record->final_mask.IsRevoked(pos)) record->revoked.push_back({pos, ctx.window()[pos]});
    }
  } else {
    record->status = Status::kFailure;
    record->revoked.clear();
  }
}

// Revokes positions in `order` one at a time until the target drops out.
ExplanationRecord RevokeInOrder(const ExplainContext& ctx, const RetroRequest& req, Method method,
                                const std::vector<std::size_t>& order) {
  ExplanationRecord record = NewRecord(ctx, req, method);
  for (std::size_t pos : order) {
    if (TargetRemoved(ctx, record.final_mask, req.target, req.k)) break;
    record.final_mask.Revoke(pos);
    ++record.iterations;
  }
  Finish(ctx, &record);
  return record;
}

}  // namespace

std::string_view ToString(Method method) {
  switch (method) {
    case Method::kSearch:
      return "search";
    case Method::kRelax:
      return "relax";
    case Method::kRandom:
      return "random";
    case Method::kSimilarity:
      return "similarity";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  if (name == "search" || name == "greedy") return Method::kSearch;
  if (name == "relax" || name == "relaxation") return Method::kRelax;
  if (name == "random") return Method::kRandom;
  if (name == "similarity") return Method::kSimilarity;
  throw ContractError("unknown method '" + std::string(name) + "'");
}

void RetroHyperparams::Validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ContractError("threshold must be in (0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ContractError("learning rate must be > 0");
  if (!(lambda >= 0.0) || !(gamma1 >= 0.0) || !(gamma2 >= 0.0) || !(alpha1 >= 0.0)) {
    throw ContractError("lambda, gamma1, gamma2 and alpha1 must be >= 0");
  }
}

ExplainContext::ExplainContext(const Model& model, SequenceWindow window, std::span<const ItemId> exclude,
                               bool exclude_window)
    : scorer_(model, std::move(window)), excluded_(model.n_items(), 0), exclude_window_(exclude_window) {
  for (ItemId item : exclude) {
    model.CheckItem(item);
    excluded_[static_cast<std::size_t>(item)] = 1;
  }
}

std::vector<char> ExplainContext::Ineligible(const MaskVector& mask, double threshold) const {
  std::vector<char> out = excluded_;
  if (!exclude_window_) return out;
  const SequenceWindow& w = window();
  for (std::size_t pos = 0; pos < w.capacity(); ++pos) {
    if (!w.is_padding(pos) && !mask.IsRevoked(pos, threshold)) out[static_cast<std::size_t>(w[pos])] = 1;
  }
  return out;
}

RecommendationList ExplainContext::TopK(const MaskVector& mask, std::size_t k) const {
  return RankTopK(scorer_.ScoreAll(mask), k, Ineligible(mask));
}

ExplanationRecord GreedyRetrospective(const ExplainContext& ctx, const RetroRequest& req) {
  const RecommendationList original = Begin(ctx, req);
  ExplanationRecord record = NewRecord(ctx, req, Method::kSearch);
  const Model& model = ctx.model();
  std::vector<ItemId> others;
  for (const auto& e : original.entries) {
    if (e.item != req.target) others.push_back(e.item);
  }
  std::vector<std::size_t> remaining = Slots(ctx.window());
  while (!remaining.empty() && !TargetRemoved(ctx, record.final_mask, req.target, req.k)) {
    std::size_t best = 0;
    double best_h = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      MaskVector trial = record.final_mask;
      trial.Revoke(remaining[i]);
      const Vector u = ctx.scorer().Represent(trial);
      double kept = 0.0;
      for (ItemId q : others) kept += u.dot(model.embedding(q));
      const double h = u.dot(model.embedding(req.target)) - req.hyper.gamma1 * kept;
      if (i == 0 || h < best_h) {
        best = i;
        best_h = h;
      }
    }
    record.final_mask.Revoke(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    ++record.iterations;
  }
  Finish(ctx, &record);
  return record;
}

RelaxationValue RelaxationObjective(const ExplainContext& ctx, const RetroRequest& req,
                                    const RecommendationList& original, const MaskVector& mask) {
  const Model& model = ctx.model();
  const RetroHyperparams& hp = req.hyper;
  const Vector u = ctx.scorer().Represent(mask);
  const Vector scores = model.embeddings() * u;

  // v_K: the K-th ranked item under the current mask, ignoring the target.
  std::vector<char> ineligible = ctx.Ineligible(mask, hp.threshold);
  ineligible[static_cast<std::size_t>(req.target)] = 1;
  const RecommendationList ranked = RankTopK(scores, req.k, ineligible);
  RelaxationValue value;
  if (!ranked.entries.empty()) value.kth_item = ranked.entries.back().item;

  Vector repr_grad = Vector::Zero(u.size());
  double objective = 0.0;
  if (value.kth_item != kPaddingItem) {
    const double margin = hp.alpha1 + scores[req.target] - scores[value.kth_item];
    if (margin > 0.0) {
      objective += margin;
      repr_grad += model.embedding(req.target).transpose() - model.embedding(value.kth_item).transpose();
    }
  }
  if (original.entries.size() > 1) {
    const double sign = hp.literal_r2 ? 1.0 : -1.0;
    const double weight = sign * hp.gamma2 / static_cast<double>(original.entries.size() - 1);
    for (const auto& e : original.entries) {
      if (e.item == req.target) continue;
      objective += weight * scores[e.item];
      repr_grad += weight * model.embedding(e.item).transpose();
    }
  }
  value.gradient = hp.lambda * ctx.scorer().MaskGradient(mask, repr_grad);
  value.loss = hp.lambda * objective;
  for (std::size_t pos : Slots(ctx.window())) {
    value.loss += std::abs(mask[pos]);
    value.gradient[static_cast<Eigen::Index>(pos)] += mask[pos] < 0.0 ? -1.0 : 1.0;
  }
  return value;
}

ExplanationRecord RelaxedRetrospective(const ExplainContext& ctx, const RetroRequest& req) {
  const RecommendationList original = Begin(ctx, req);
  ExplanationRecord record = NewRecord(ctx, req, Method::kRelax);
  const std::vector<std::size_t> positions = Slots(ctx.window());
  if (positions.empty()) {
    record.diagnostic = "empty window";
    return record;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const auto n = static_cast<Eigen::Index>(ctx.window().capacity());
  MaskVector delta = MaskVector::Relaxed(static_cast<std::size_t>(n));
  Vector m = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  for (std::size_t step = 1; step <= req.hyper.steps; ++step) {
    const RelaxationValue value = RelaxationObjective(ctx, req, original, delta);
    if (!std::isfinite(value.loss) || !value.gradient.allFinite()) {
      record.diagnostic = "non-finite objective at step " + std::to_string(step);
      record.iterations = step;
      return record;
    }
    m = kBeta1 * m + (1.0 - kBeta1) * value.gradient;
    v = kBeta2 * v + (1.0 - kBeta2) * value.gradient.cwiseProduct(value.gradient);
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    Vector next = delta.values() - req.hyper.learning_rate * ((m / c1).array() / ((v / c2).array().sqrt() + kEps)).matrix();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ctx.window().is_padding(static_cast<std::size_t>(i))) next[i] = 0.0;
    }
    delta = MaskVector::Relaxed(next);
    record.iterations = step;
  }
  record.final_mask = delta.Binarized(req.hyper.threshold);
  Finish(ctx, &record);
  if (!record.success()) record.diagnostic = "post-check failed";
  return record;
}

ExplanationRecord RandomRetrospective(const ExplainContext& ctx, const RetroRequest& req) {
  Begin(ctx, req);
  std::vector<std::size_t> order = Slots(ctx.window());
  std::mt19937_64 rng(req.seed);
  std::shuffle(order.begin(), order.end(), rng);
  return RevokeInOrder(ctx, req, Method::kRandom, order);
}

ExplanationRecord SimilarityRetrospective(const ExplainContext& ctx, const RetroRequest& req) {
  Begin(ctx, req);
  const Model& model = ctx.model();
  std::vector<std::size_t> order = Slots(ctx.window());
  std::vector<double> sim(ctx.window().capacity(), 0.0);
  for (std::size_t pos : order) sim[pos] = model.embedding(ctx.window()[pos]).dot(model.embedding(req.target));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  return RevokeInOrder(ctx, req, Method::kSimilarity, order);
}

ExplanationRecord Retrospective(const ExplainContext& ctx, const RetroRequest& req, Method method) {
  switch (method) {
    case Method::kSearch:
      return GreedyRetrospective(ctx, req);
    case Method::kRelax:
      return RelaxedRetrospective(ctx, req);
    case Method::kRandom:
      return RandomRetrospective(ctx, req);
    case Method::kSimilarity:
      return SimilarityRetrospective(ctx, req);
  }
  throw ContractError("unknown method");
}

ExplanationRecord ProspectiveExplanation(const Model& model, const SequenceWindow& window, ItemId new_item,
                                         std::size_t k, std::span<const ItemId> exclude) {
  if (k == 0) throw ContractError("K must be >= 1");
  model.CheckItem(new_item);
  std::vector<ItemId> hidden(exclude.begin(), exclude.end());
  const std::vector<ItemId> current = window.history();
  hidden.insert(hidden.end(), current.begin(), current.end());
  hidden.push_back(new_item);

  const ExplainContext before(model, window, hidden);
  const ExplainContext after(model, window.Appended(new_item), hidden);
  const RecommendationList old_list = before.TopK(MaskVector::Binary(window.capacity()), k);
  const RecommendationList new_list = after.TopK(MaskVector::Binary(window.capacity()), k);

  ExplanationRecord record;
  record.kind = ExplanationRecord::Kind::kProspective;
  record.status = Status::kSuccess;
  record.item = new_item;
  record.k = k;
  record.iterations = 1;
  record.final_mask = MaskVector::Binary(window.capacity());
  for (const auto& e : new_list.entries) {
    if (!old_list.Contains(e.item)) record.added_items.push_back(e.item);
  }
  return record;
}

namespace {

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
    out += names[i];
  }
  return out;
}

}  // namespace

std::string RenderExplanation(const ExplanationRecord& record, const ItemLabel& name, std::string_view verb) {
  std::vector<std::string> names;
  if (record.kind == ExplanationRecord::Kind::kRetrospective) {
    if (!record.success() || record.revoked.empty()) {
      return "No combination of your recent behaviors explains this recommendation.";
    }
    for (const auto& r : record.revoked) names.push_back(name(r.item));
    return "We recommend this item because you " + std::string(verb) + " " + JoinNames(names) +
           ". Revoke these behaviors to stop its recommendation.";
  }
  if (record.added_items.empty()) {
    return "With the current interaction, there is no change to future recommendations.";
  }
  for (ItemId item : record.added_items) names.push_back(name(item));
  return "With the current interaction, " + JoinNames(names) +
         " will be added to future recommendations. Revoke this behavior to prevent their recommendation.";
}

std::string ToJsonLine(const ExplanationRecord& record, std::string_view user, const ItemLabel& id) {
  nlohmann::json j;
  j["user"] = user;
  const bool retro = record.kind == ExplanationRecord::Kind::kRetrospective;
  j["kind"] = retro ? "retrospective" : "prospective";
  j["item"] = id(record.item);
  j["k"] = record.k;
  if (retro) j["method"] = ToString(record.method);
  j["status"] = record.success() ? "success" : "failure";
  auto& revoked = j["revoked"] = nlohmann::json::array();
  for (const auto& r : record.revoked) revoked.push_back({{"position", r.position}, {"item", id(r.item)}});
  auto& added = j["added_items"] = nlohmann::json::array();
  for (ItemId item : record.added_items) added.push_back(id(item));
  j["iterations"] = record.iterations;
  if (!record.diagnostic.empty()) j["diagnostic"] = record.diagnostic;
  return j.dump();
}

}  // namespace ucrec
