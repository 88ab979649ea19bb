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

#include "ucrec/train.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ucrec/error.hpp"

namespace ucrec {
namespace {

// One user cycling a -> b -> c, plus filler users so the catalog has
// items that never follow anything in particular.
data::SplitDataset CycleFixture(std::size_t length) {
  std::ostringstream text;
  const char* cycle[] = {"a", "b", "c"};
  for (std::size_t t = 0; t < length; ++t) text << "u0\t" << cycle[t % 3] << '\t' << t << '\n';
  std::mt19937_64 rng(5);
  for (int u = 1; u <= 3; ++u) {
    for (int t = 0; t < 8; ++t) text << "f" << u << "\tx" << rng() % 7 << '\t' << t << '\n';
  }
  std::istringstream in(text.str());
  return data::Split(data::ParseLog(in, data::LogFormat::kTsv, "fixture"), 3);
}

TrainConfig SmallConfig(ScorerKind kind) {
  TrainConfig config;
  config.kind = kind;
  config.dim = 16;
  config.window = 8;
  config.batch_size = 4;
  config.dropout = 0.0;
  config.learning_rate = 0.01;
  config.max_epochs = 60;
  config.patience = 60;
  config.seed = 9;
  return config;
}

class CycleFixtureTest : public ::testing::TestWithParam<ScorerKind> {};

TEST_P(CycleFixtureTest, TrueNextBeatsRandomNegative) {
  const data::SplitDataset dataset = CycleFixture(60);
  const Model model = Train(dataset, SmallConfig(GetParam()));
  const data::UserSplit& user = *dataset.FindUser(*dataset.ids.FindUser("u0"));
  const std::size_t held_out_begin = user.train_end();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<ItemId> pick(0, static_cast<ItemId>(dataset.n_items) - 1);
  int wins = 0;
  int total = 0;
  for (std::size_t t = held_out_begin; t < user.sequence.size(); ++t) {
    const std::span<const ItemId> prefix(user.sequence.data(), t);
    const WindowScorer scorer(model, SequenceWindow::FromHistory(prefix, model.window()));
    const Vector scores = scorer.ScoreAll(MaskVector::Binary(model.window()));
    const ItemId next = user.sequence[t];
    for (int draw = 0; draw < 20; ++draw) {
      ItemId neg = pick(rng);
      while (neg == next) neg = pick(rng);
      wins += scores[next] > scores[neg] ? 1 : 0;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(wins) / total, 0.9);
}

INSTANTIATE_TEST_SUITE_P(Scorers, CycleFixtureTest,
                         ::testing::Values(ScorerKind::kGru, ScorerKind::kSelfAttention));

TEST(TrainTest, SameSeedSameParameters) {
  const data::SplitDataset dataset = CycleFixture(30);
  TrainConfig config = SmallConfig(ScorerKind::kSelfAttention);
  config.max_epochs = 3;
  config.dropout = 0.2;
  const Model a = Train(dataset, config);
  const Model b = Train(dataset, config);
  for (std::size_t i = 0; i < a.tensors().size(); ++i) {
    EXPECT_TRUE(a.tensors()[i].value == b.tensors()[i].value) << a.tensors()[i].name;
  }
  config.seed = 10;
  const Model c = Train(dataset, config);
  EXPECT_FALSE(a.embeddings() == c.embeddings());
}

TEST(TrainTest, ReportTracksBestEpoch) {
  const data::SplitDataset dataset = CycleFixture(30);
  TrainConfig config = SmallConfig(ScorerKind::kGru);
  config.max_epochs = 5;
  TrainReport report;
  std::size_t calls = 0;
  const Model model = Train(dataset, config, &report, [&](const EpochStats&) { ++calls; });
  EXPECT_TRUE(model.trained());
  EXPECT_EQ(calls, report.epochs.size());
  ASSERT_FALSE(report.epochs.empty());
  EXPECT_GE(report.best_epoch, 1u);
  for (const auto& e : report.epochs) EXPECT_LE(e.validation_ndcg, report.best_validation_ndcg);
  EXPECT_GT(report.training_targets, 0u);
}

TEST(TrainTest, EmptyDatasetIsRejected) {
  data::SplitDataset empty;
  EXPECT_THROW(Train(empty, SmallConfig(ScorerKind::kGru)), DataError);
}

}  // namespace
}  // namespace ucrec
