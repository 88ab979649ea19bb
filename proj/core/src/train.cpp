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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "encoders.hpp"
#include "ucrec/error.hpp"
#include "ucrec/metrics.hpp"

namespace ucrec {
namespace {

class Adam {
 public:
  Adam(const Model& model, double lr) : lr_(lr), m_(internal::ZeroGradients(model)), v_(m_) {}

  void Step(Model* model, const internal::Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < grads.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      model->tensors()[i].value.array() -=
          lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  double lr_;
  std::size_t t_ = 0;
  internal::Gradients m_;
  internal::Gradients v_;
};

double LogSigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// Forward + backward for one window. Returns the summed loss.
double WindowLoss(const Model& model, const data::TrainingWindow& window, double dropout,
                  std::mt19937_64& rng, internal::Gradients* grads) {
  const auto& encoder = internal::EncoderFor(model.kind());
  Matrix inputs = EmbedSequence(model, window.inputs);
  Matrix keep;
  if (dropout > 0.0) {
    std::bernoulli_distribution drop(dropout);
    keep.resize(inputs.rows(), inputs.cols());
    const double scale = 1.0 / (1.0 - dropout);
    for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = drop(rng) ? 0.0 : scale;
    inputs = inputs.cwiseProduct(keep);
  }
  internal::TrainCache cache;
  const Matrix out = encoder.ForwardAll(model, inputs, &cache);
  Matrix dout = Matrix::Zero(out.rows(), out.cols());
  Matrix& demb = (*grads)[0];
  std::uniform_int_distribution<ItemId> pick(0, static_cast<ItemId>(model.n_items()) - 1);
  double loss = 0.0;
  for (std::size_t t = 0; t < window.targets.size(); ++t) {
    const ItemId pos = window.targets[t];
    if (pos == kPaddingItem) continue;
    ItemId neg = pick(rng);
    while (neg == pos) neg = pick(rng);
    const auto row = static_cast<Eigen::Index>(t);
    const double sp = out.row(row).dot(model.embedding(pos));
    const double sn = out.row(row).dot(model.embedding(neg));
    loss -= LogSigmoid(sp) + LogSigmoid(-sn);
    const double gp = internal::Sigmoid(sp) - 1.0;
    const double gn = internal::Sigmoid(sn);
    dout.row(row) += gp * model.embedding(pos) + gn * model.embedding(neg);
    demb.row(pos) += gp * out.row(row);
    demb.row(neg) += gn * out.row(row);
  }
  Matrix dinputs = encoder.BackwardAll(model, cache, dout, grads);
  if (keep.size() > 0) dinputs = dinputs.cwiseProduct(keep);
  const bool positional = model.kind() == ScorerKind::kSelfAttention;
  for (std::size_t t = 0; t < window.inputs.capacity(); ++t) {
    if (window.inputs.is_padding(t)) continue;
    const auto row = static_cast<Eigen::Index>(t);
    demb.row(window.inputs[t]) += dinputs.row(row);
    if (positional) (*grads)[1].row(row) += dinputs.row(row);
  }
  return loss;
}

}  // namespace

std::pair<double, double> ValidationMetrics(const Model& model, const data::SplitDataset& dataset, std::size_t k) {
  if (dataset.users.empty()) return {0.0, 0.0};
  double ndcg = 0.0;
  double hit = 0.0;
  std::vector<char> ineligible(model.n_items(), 0);
  for (const auto& user : dataset.users) {
    const SequenceWindow window = SequenceWindow::FromHistory(user.train(), model.window());
    const Vector scores = WindowScorer(model, window).ScoreAll(MaskVector::Binary(model.window()));
    for (ItemId i : user.train()) ineligible[static_cast<std::size_t>(i)] = 1;
    ineligible[static_cast<std::size_t>(user.validation())] = 0;
    const std::size_t rank = eval::FullRank(scores, user.validation(), ineligible);
    for (ItemId i : user.train()) ineligible[static_cast<std::size_t>(i)] = 0;
    ndcg += eval::NdcgFromRank(rank, k);
    hit += eval::HitFromRank(rank, k);
  }
  const auto n = static_cast<double>(dataset.users.size());
  return {ndcg / n, hit / n};
}

Model Train(const data::SplitDataset& dataset, const TrainConfig& config, TrainReport* report,
            const EpochCallback& on_epoch) {
  if (dataset.users.empty() || dataset.n_items < 2) throw DataError("cannot train on an empty dataset");
  if (config.dropout < 0.0 || config.dropout >= 1.0) throw ContractError("dropout must be in [0, 1)");
  if (config.batch_size == 0) throw ContractError("batch size must be >= 1");

  TrainReport local;
  std::vector<data::TrainingWindow> windows;
  for (const auto& user : dataset.users) {
    auto w = data::TrainingWindows(user, config.window);
    std::size_t targets = 0;
    for (const auto& x : w) targets += x.n_targets();
    if (targets == 0) {
      ++local.skipped_users;
      continue;
    }
    local.training_targets += targets;
    for (auto& x : w) {
      if (x.n_targets() > 0) windows.push_back(std::move(x));
    }
  }
  local.training_windows = windows.size();
  if (windows.empty()) throw DataError("no user has a next-item pair in the train span");

  std::mt19937_64 rng(config.seed);
  Model model = Model::Initialize({config.kind, dataset.n_items, config.dim, config.window}, rng());
  Model best = model;
  Adam adam(model, config.learning_rate);
  std::vector<std::size_t> order(windows.size());
  std::size_t since_best = 0;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      internal::Gradients grads = internal::ZeroGradients(model);
      double targets = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        const auto& w = windows[order[b]];
        epoch_loss += WindowLoss(model, w, config.dropout, rng, &grads);
        targets += static_cast<double>(w.n_targets());
      }
      for (auto& g : grads) g /= targets;
      adam.Step(&model, grads);
    }
    if (!model.AllFinite()) throw Error("training diverged at epoch " + std::to_string(epoch));

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = epoch_loss / static_cast<double>(local.training_targets);
    std::tie(stats.validation_ndcg, stats.validation_hit) = ValidationMetrics(model, dataset, config.eval_k);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    local.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (!have_best || stats.validation_ndcg > local.best_validation_ndcg) {
      have_best = true;
      local.best_validation_ndcg = stats.validation_ndcg;
      local.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  best.set_trained(true);
  if (report != nullptr) *report = std::move(local);
  return best;
}

}  // namespace ucrec
