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
#include <random>

#include <gtest/gtest.h>

#include "encoders.hpp"
#include "test_util.hpp"
#include "ucrec/error.hpp"

namespace ucrec {
namespace {

using testing::CentralDifference;
using testing::RandomRelaxedMask;
using testing::RandomWindow;
using testing::RelativeError;

constexpr ScorerKind kSequenceKinds[] = {ScorerKind::kGru, ScorerKind::kSelfAttention};
constexpr ScorerKind kAllKinds[] = {ScorerKind::kGru, ScorerKind::kSelfAttention, ScorerKind::kLinear};

TEST(ApplyMaskTest, ZeroMaskIsIdentity) {
  Matrix s(3, 2);
  s << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(ApplyMask(s, MaskVector::Binary(3)), s);
}

TEST(ApplyMaskTest, RevokedRowBecomesZero) {
  Matrix s = Matrix::Constant(5, 3, 2.5);
  MaskVector mask = MaskVector::Binary(5);
  mask.Revoke(3);
  const Matrix out = ApplyMask(s, mask);
  EXPECT_TRUE(out.row(3).isZero(0.0));
  EXPECT_EQ(out.row(2), s.row(2));
}

TEST(ApplyMaskTest, RelaxedScalesContinuously) {
  Matrix s(1, 2);
  s << 2, -4;
  MaskVector mask = MaskVector::Relaxed(1);
  mask.Set(0, 0.5);
  const Matrix out = ApplyMask(s, mask);
  EXPECT_DOUBLE_EQ(out(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out(0, 1), -2.0);
}

TEST(ApplyMaskTest, LengthMismatchIsContractViolation) {
  EXPECT_THROW(ApplyMask(Matrix::Zero(4, 2), MaskVector::Binary(3)), ContractError);
}

TEST(MaskVectorTest, BinaryRejectsFractions) {
  MaskVector mask = MaskVector::Binary(2);
  EXPECT_THROW(mask.Set(0, 0.5), ContractError);
  MaskVector relaxed = MaskVector::Relaxed(2);
  relaxed.Set(0, 1.7);
  EXPECT_EQ(relaxed[0], 1.0);
}

// Closed-form GRU forward for d = 2 over the window [item0, item1], scored
// against item2. The expected value below was computed with an independent
// scalar implementation of the same recurrences.
TEST(ScoreTest, HandSizedGruMatchesHandRolledForward) {
  Model model = Model::Zeros({ScorerKind::kGru, 3, 2, 2});
  model.embeddings() << 0.5, -0.25, 0.1, 0.4, -0.3, 0.2;
  Matrix& wx = model.tensor("gru.w_input");
  Matrix& wh = model.tensor("gru.w_hidden");
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 6; ++c) {
      wx(i, c) = 0.05 * (c + 1) - 0.1 * i;
      wh(i, c) = 0.03 * (c + 1) * (i == 0 ? 1 : -1);
    }
  }
  for (int c = 0; c < 6; ++c) model.tensor("gru.b_input")(0, c) = 0.01 * c;
  for (int k = 0; k < 2; ++k) model.tensor("gru.b_hidden_n")(0, k) = 0.02 * (k + 1);

  const SequenceWindow window({0, 1});
  const double score = Score(model, window, MaskVector::Binary(2), 2);
  EXPECT_NEAR(score, -0.004248191318866137, 1e-15);

  const Vector h = WindowScorer(model, window).Represent(MaskVector::Binary(2));
  EXPECT_NEAR(h[0], 0.09841694019689332, 1e-15);
  EXPECT_NEAR(h[1], 0.12638445370100929, 1e-15);
}

TEST(ScoreTest, UnknownItemIsRejected) {
  const Model model = Model::Initialize({ScorerKind::kGru, 4, 3, 3}, 1);
  const SequenceWindow window({0, 1, 2});
  EXPECT_THROW(Score(model, window, MaskVector::Binary(3), 4), InvalidItemError);
  EXPECT_THROW(Score(model, window, MaskVector::Binary(3), -1), InvalidItemError);
}

TEST(ScoreTest, Deterministic) {
  for (ScorerKind kind : kAllKinds) {
    const Model model = Model::Initialize({kind, 20, 6, 5}, 3);
    const SequenceWindow window({1, 2, 3, 4, 5});
    MaskVector mask = MaskVector::Binary(5);
    mask.Revoke(2);
    EXPECT_EQ(Score(model, window, mask, 7), Score(model, SequenceWindow({1, 2, 3, 4, 5}), mask, 7));
  }
}

// Property: revoking slot t scores exactly like substituting padding at t.
TEST(ScoreTest, MaskEqualsPaddingSubstitution) {
  std::mt19937_64 rng(11);
  for (ScorerKind kind : kAllKinds) {
    const Model model = Model::Initialize({kind, 30, 8, 7}, 5);
    for (int trial = 0; trial < 100; ++trial) {
      const SequenceWindow window = RandomWindow(rng, 7, 30);
      const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, 6)(rng);
      MaskVector mask = MaskVector::Binary(7);
      mask.Revoke(pos);
      const WindowScorer masked(model, window);
      const WindowScorer padded(model, window.WithPadding(pos));
      const Vector a = masked.ScoreAll(mask);
      const Vector b = padded.ScoreAll(MaskVector::Binary(7));
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

// The cached single-query path must agree with the all-positions training
// path on the last slot.
TEST(EncoderTest, CachedPathMatchesTrainingPathOnLastSlot) {
  std::mt19937_64 rng(17);
  for (ScorerKind kind : kAllKinds) {
    const Model model = Model::Initialize({kind, 25, 6, 9}, 2);
    const auto& encoder = internal::EncoderFor(kind);
    for (int trial = 0; trial < 20; ++trial) {
      const SequenceWindow window = RandomWindow(rng, 9, 25);
      const MaskVector mask = RandomRelaxedMask(rng, 9, 0.0, 1.0);
      const Vector repr = WindowScorer(model, window).Represent(mask);
      internal::TrainCache cache;
      const Matrix all = encoder.ForwardAll(model, ApplyMask(EmbedSequence(model, window), mask), &cache);
      EXPECT_LE((all.row(8).transpose() - repr).cwiseAbs().maxCoeff(), 1e-12) << ToString(kind);
    }
  }
}

TEST(ScoreGradientTest, MatchesCentralDifferences) {
  std::mt19937_64 rng(23);
  for (ScorerKind kind : kAllKinds) {
    const Model model = Model::Initialize({kind, 40, 8, 10}, 9);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const SequenceWindow window = RandomWindow(rng, 10, 40);
      const MaskVector mask = RandomRelaxedMask(rng, 10);
      const ItemId item = std::uniform_int_distribution<ItemId>(0, 39)(rng);
      const ItemId items[] = {item};
      const ScoreGradient g = ScoreWithGradient(model, window, mask, items);
      const WindowScorer scorer(model, window);
      const Vector fd = CentralDifference(
          [&](const Vector& v) { return scorer.Score(MaskVector::Relaxed(v), item); }, mask.values(), 1e-4);
      worst = std::max(worst, RelativeError(g.mask_grad.row(0).transpose(), fd));
    }
    EXPECT_LE(worst, 1e-4) << ToString(kind);
  }
}

TEST(ScoreGradientTest, PaddingSlotHasZeroGradient) {
  for (ScorerKind kind : kAllKinds) {
    const Model model = Model::Initialize({kind, 10, 4, 5}, 4);
    const SequenceWindow window({kPaddingItem, kPaddingItem, 3, 4, 5});
    MaskVector mask = MaskVector::Relaxed(5);
    mask.Set(0, 0.3);
    mask.Set(3, 0.4);
    const ItemId items[] = {1, 2};
    const ScoreGradient g = ScoreWithGradient(model, window, mask, items);
    EXPECT_EQ(g.mask_grad(0, 0), 0.0);
    EXPECT_EQ(g.mask_grad(1, 1), 0.0);
  }
}

TEST(ScoreGradientTest, LinearScorerHasAnalyticGradient) {
  std::mt19937_64 rng(3);
  const Model model = Model::Initialize({ScorerKind::kLinear, 12, 5, 6}, 8);
  const SequenceWindow window = RandomWindow(rng, 6, 12, 6);
  const MaskVector mask = RandomRelaxedMask(rng, 6);
  const ItemId items[] = {4};
  const ScoreGradient g = ScoreWithGradient(model, window, mask, items);
  for (std::size_t t = 0; t < 6; ++t) {
    EXPECT_NEAR(g.mask_grad(0, static_cast<Eigen::Index>(t)),
                -model.embedding(window[t]).dot(model.embedding(4)), 1e-14);
  }
}

TEST(ScoreGradientTest, BinaryMaskIsContractViolation) {
  const Model model = Model::Initialize({ScorerKind::kGru, 10, 4, 3}, 4);
  const ItemId items[] = {1};
  EXPECT_THROW(ScoreWithGradient(model, SequenceWindow({1, 2, 3}), MaskVector::Binary(3), items), ContractError);
}

TEST(TopKTest, SortsAndBreaksTiesById) {
  Vector scores(3);
  scores << 0.9, 0.1, 0.5;
  const RecommendationList list = RankTopK(scores, 2, {});
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list.entries[0].item, 0);
  EXPECT_EQ(list.entries[1].item, 2);

  Vector ties = Vector::Constant(4, 1.0);
  EXPECT_EQ(RankTopK(ties, 3, {}).items(), (std::vector<ItemId>{0, 1, 2}));
}

TEST(TopKTest, TruncatesWhenCatalogTooSmall) {
  Vector scores = Vector::Ones(3);
  const std::vector<char> ineligible = {1, 0, 0};
  const RecommendationList list = RankTopK(scores, 5, ineligible);
  EXPECT_TRUE(list.truncated);
  EXPECT_EQ(list.size(), 2u);
}

TEST(TopKTest, HistoryExclusionAndRevocation) {
  Matrix e(4, 2);
  e << 1, 0, 0.9, 0.1, 0, 1, -1, 0;
  const Model model = testing::LinearModel(e, 2);
  const SequenceWindow window({0, 2});
  // Item 0 scores highest but sits unmasked in the window.
  const RecommendationList excluded = RecommendTopK(model, window, MaskVector::Binary(2), 2, true);
  EXPECT_FALSE(excluded.Contains(0));
  EXPECT_FALSE(excluded.Contains(2));
  const RecommendationList kept = RecommendTopK(model, window, MaskVector::Binary(2), 2, false);
  EXPECT_TRUE(kept.Contains(0));
  // Revoking slot 1 makes item 2 eligible again.
  MaskVector mask = MaskVector::Binary(2);
  mask.Revoke(1);
  EXPECT_TRUE(RecommendTopK(model, window, mask, 3, true).Contains(2));
}

// Top-K under a revocation mask equals re-ranking a physically edited
// window (the revoked slot replaced by padding) with the same eligibility.
TEST(TopKTest, MaskMatchesEditedWindowReRanking) {
  std::mt19937_64 rng(29);
  for (ScorerKind kind : kSequenceKinds) {
    const Model model = Model::Initialize({kind, 50, 6, 8}, 13);
    for (int trial = 0; trial < 50; ++trial) {
      const SequenceWindow window = RandomWindow(rng, 8, 50, 8);
      MaskVector mask = MaskVector::Binary(8);
      SequenceWindow edited = window;
      for (std::size_t t = 0; t < 8; ++t) {
        if (rng() % 3 == 0) {
          mask.Revoke(t);
          edited = edited.WithPadding(t);
        }
      }
      const RecommendationList got = RecommendTopK(model, window, mask, 5, true);
      // Brute force: score every item on the edited window, exclude the
      // remaining history, sort everything.
      const WindowScorer scorer(model, edited);
      std::vector<std::pair<double, ItemId>> all;
      const auto history = edited.history();
      for (ItemId i = 0; i < 50; ++i) {
        if (std::find(history.begin(), history.end(), i) != history.end()) continue;
        all.push_back({-scorer.Score(MaskVector::Binary(8), i), i});
      }
      std::sort(all.begin(), all.end());
      for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(got.entries[r].item, all[r].second);
    }
  }
}

// Weight gradients of the training path against finite differences of a
// random linear functional of the outputs.
TEST(EncoderTest, TrainingBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  for (ScorerKind kind : kSequenceKinds) {
    Model model = Model::Initialize({kind, 15, 4, 5}, 21);
    const auto& encoder = internal::EncoderFor(kind);
    const SequenceWindow window = RandomWindow(rng, 5, 15, 3);
    const Matrix inputs = EmbedSequence(model, window);
    Matrix probe(5, 4);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = normal(rng);
    auto loss = [&](const Model& m, const Matrix& x) {
      internal::TrainCache cache;
      return encoder.ForwardAll(m, x, &cache).cwiseProduct(probe).sum();
    };
    internal::TrainCache cache;
    encoder.ForwardAll(model, inputs, &cache);
    internal::Gradients grads = internal::ZeroGradients(model);
    const Matrix dx = encoder.BackwardAll(model, cache, probe, &grads);

    const double h = 1e-5;
    for (std::size_t ti = 1; ti < model.tensors().size(); ++ti) {
      if (model.tensors()[ti].name == "attn.position") continue;  // enters through the inputs
      Matrix& w = model.tensors()[ti].value;
      Matrix fd(w.rows(), w.cols());
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double saved = w.data()[i];
        w.data()[i] = saved + h;
        const double up = loss(model, inputs);
        w.data()[i] = saved - h;
        const double down = loss(model, inputs);
        w.data()[i] = saved;
        fd.data()[i] = (up - down) / (2 * h);
      }
      const Eigen::Map<const Vector> a(grads[ti].data(), grads[ti].size());
      const Eigen::Map<const Vector> b(fd.data(), fd.size());
      EXPECT_LE(RelativeError(a, b), 1e-6) << ToString(kind) << " " << model.tensors()[ti].name;
    }
    Matrix fdx(inputs.rows(), inputs.cols());
    for (Eigen::Index i = 0; i < inputs.size(); ++i) {
      Matrix up = inputs;
      Matrix down = inputs;
      up.data()[i] += h;
      down.data()[i] -= h;
      fdx.data()[i] = (loss(model, up) - loss(model, down)) / (2 * h);
    }
    const Eigen::Map<const Vector> a(dx.data(), dx.size());
    const Eigen::Map<const Vector> b(fdx.data(), fdx.size());
    EXPECT_LE(RelativeError(a, b), 1e-6) << ToString(kind) << " inputs";
  }
}

}  // namespace
}  // namespace ucrec
