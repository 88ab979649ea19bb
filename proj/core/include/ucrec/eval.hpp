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

#ifndef UCREC_EVAL_HPP_
#define UCREC_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ucrec/data.hpp"
#include "ucrec/engine.hpp"
#include "ucrec/model.hpp"

namespace ucrec::eval {

// Called with (done, total) after each user finishes. May be invoked from
// worker threads, but never concurrently.
using Progress = std::function<void(std::size_t, std::size_t)>;

struct RetroEvalConfig {
  std::vector<Method> methods{Method::kSearch, Method::kRelax, Method::kRandom, Method::kSimilarity};
  std::vector<std::size_t> ks{3, 5, 10};
  std::size_t sample_size = 200;
  std::uint64_t seed = 42;
  RetroHyperparams hyper;
  std::size_t jobs = 1;
};

// One explanation attempt.
struct RetroRow {
  UserId user = 0;
  std::size_t k = 0;
  Method method = Method::kSearch;
  ItemId target = kPaddingItem;
  // 1-based rank of the target in the original list.
  std::size_t target_rank = 0;
  bool success = false;
  std::size_t revoked = 0;
  std::size_t effective_length = 0;
  // Only meaningful on success.
  double complexity = 0.0;
  double accuracy = 0.0;
  std::size_t iterations = 0;
  // Wall time of the generator call. Not written to reports.
  double seconds = 0.0;
};

// Means of complexity and accuracy run over successful rows; fidelity is
// successes / attempts.
struct MethodSummary {
  Method method = Method::kSearch;
  std::size_t k = 0;
  std::size_t attempts = 0;
  std::size_t successes = 0;
  double complexity = 0.0;
  double accuracy = 0.0;
  double fidelity = 0.0;
};

struct RetroReport {
  std::vector<UserId> users;
  std::vector<RetroRow> rows;
  std::vector<MethodSummary> summary;

  const MethodSummary& Find(Method method, std::size_t k) const;
};

// Seed of the random baseline for one attempt. Depends only on its inputs,
// so results do not depend on scheduling.
std::uint64_t AttemptSeed(std::uint64_t root, UserId user, std::size_t k, ItemId target);

// Users drawn without replacement, returned in ascending id order.
std::vector<UserId> SampleUsers(const data::SplitDataset& dataset, std::size_t sample_size, std::uint64_t seed);

// Explains every item of every sampled user's top-K for each method. The
// user's window is the last T items of train + validation. Older history
// is never recommended; window items only once revoked. Throws Error on an
// untrained model.
RetroReport RetrospectiveEval(const Model& model, const data::SplitDataset& dataset, const RetroEvalConfig& config,
                              const Progress& progress = {});

std::vector<MethodSummary> Summarize(const std::vector<RetroRow>& rows);

struct RankingMetrics {
  std::size_t users = 0;
  double ndcg = 0.0;
  double hit = 0.0;
};

struct ProspectiveConfig {
  // List size for the added items.
  std::size_t k = 10;
  // Cutoff for NDCG / HitRate on the test item.
  std::size_t eval_k = 10;
  std::size_t jobs = 1;
};

struct ProspectiveRow {
  UserId user = 0;
  ItemId current = kPaddingItem;
  std::vector<ItemId> added;
  bool target_cohort = false;
  // 1-based rank of the test item under each condition.
  std::size_t keep_rank = 0;
  std::size_t revoke_rank = 0;
};

struct ProspectiveReport {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t eval_k = 0;
  std::size_t excluded_users = 0;
  std::vector<ProspectiveRow> rows;
  RankingMetrics all_keep;
  RankingMetrics all_revoke;
  RankingMetrics target_keep;
  RankingMetrics target_revoke;
};

// The first simulation item is the current interaction and the rest is the
// future. Keep predicts the test item from history + whole simulation span;
// revoke drops the current interaction. Users whose added items never show
// up in their simulation span form the target cohort.
ProspectiveReport ProspectiveSimulation(const Model& model, const data::SplitDataset& dataset,
                                        const ProspectiveConfig& config, const Progress& progress = {});

// Test-item ranking from everything before it; earlier items are excluded.
RankingMetrics TestMetrics(const Model& model, const data::SplitDataset& dataset, std::size_t k);

// Same protocol with scores = item frequency in the train spans.
Vector PopularityScores(const data::SplitDataset& dataset);
RankingMetrics PopularityTestMetrics(const data::SplitDataset& dataset, std::size_t k);

enum class SweepParam { kGamma1, kLambda, kGamma2, kAlpha1 };

std::string_view ToString(SweepParam param);
SweepParam ParseSweepParam(std::string_view name);

struct SweepPoint {
  double value = 0.0;
  std::vector<MethodSummary> summary;
};

// Reruns RetrospectiveEval per value. gamma1 drives the greedy search, the
// rest the relaxation; `base.methods` is replaced accordingly.
std::vector<SweepPoint> AblationSweep(const Model& model, const data::SplitDataset& dataset, SweepParam param,
                                      const std::vector<double>& values, const RetroEvalConfig& base,
                                      const Progress& progress = {});

// Comma-separated tables with a header line.
void WriteRetroRows(const RetroReport& report, const data::IdMap& ids, std::ostream& out);
void WriteRetroSummary(const std::vector<MethodSummary>& summary, std::ostream& out);
void WriteProspectiveRows(const ProspectiveReport& report, const data::IdMap& ids, std::ostream& out);
void WriteSweep(SweepParam param, const std::vector<SweepPoint>& points, std::ostream& out);

// Plain-text tables for terminals.
void PrintRetroTable(const std::vector<MethodSummary>& summary, std::ostream& out);
void PrintProspectiveTable(const ProspectiveReport& report, std::ostream& out);

}  // namespace ucrec::eval

#endif  // UCREC_EVAL_HPP_
