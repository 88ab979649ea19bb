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

#ifndef UCREC_TRAIN_HPP_
#define UCREC_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ucrec/data.hpp"
#include "ucrec/model.hpp"

namespace ucrec {

struct TrainConfig {
  ScorerKind kind = ScorerKind::kSelfAttention;
  std::size_t dim = 100;
  std::size_t window = 50;
  std::size_t batch_size = 128;
  double dropout = 0.2;
  double learning_rate = 0.001;
  std::size_t max_epochs = 200;
  // Stop after this many epochs without a better validation NDCG.
  std::size_t patience = 20;
  std::size_t eval_k = 10;
  std::uint64_t seed = 42;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double validation_ndcg = 0.0;
  double validation_hit = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_validation_ndcg = 0.0;
  std::size_t training_windows = 0;
  std::size_t training_targets = 0;
  // Users whose train span has no next-item pair.
  std::size_t skipped_users = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Next-item training with one uniform negative (any item but the positive)
// per positive and binary
// cross-entropy, optimized with Adam. Returns the parameters from the epoch
// with the best validation NDCG@eval_k. Deterministic for a fixed seed.
// Throws DataError when there is nothing to train on.
Model Train(const data::SplitDataset& dataset, const TrainConfig& config, TrainReport* report = nullptr,
            const EpochCallback& on_epoch = {});

// Validation NDCG@k / HitRate@k: rank each user's validation item from the
// last `window` train items over the full catalog minus the rest of the train span.
std::pair<double, double> ValidationMetrics(const Model& model, const data::SplitDataset& dataset, std::size_t k);

}  // namespace ucrec

#endif  // UCREC_TRAIN_HPP_
