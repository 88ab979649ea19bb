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

#include "ucrec/eval.hpp"

#include <algorithm>
#include <chrono>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "ucrec/error.hpp"
#include "ucrec/metrics.hpp"

namespace ucrec::eval {
namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void ParallelFor(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn,
                 const Progress& progress) {
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
      std::lock_guard lock(mu);
      ++done;
      if (progress) progress(done, n);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<char> Ineligible(std::size_t n_items, std::span<const ItemId> items, ItemId keep) {
  std::vector<char> mask(n_items, 0);
  for (ItemId i : items) mask[static_cast<std::size_t>(i)] = 1;
  if (keep != kPaddingItem) mask[static_cast<std::size_t>(keep)] = 0;
  return mask;
}

std::size_t TestRank(const Model& model, std::span<const ItemId> before, ItemId test) {
  const SequenceWindow window = SequenceWindow::FromHistory(before, model.window());
  const Vector scores = WindowScorer(model, window).ScoreAll(MaskVector::Binary(model.window()));
  return FullRank(scores, test, Ineligible(model.n_items(), before, test));
}

RankingMetrics Mean(const std::vector<std::size_t>& ranks, std::size_t k) {
  RankingMetrics m;
  m.users = ranks.size();
  if (ranks.empty()) return m;
  for (std::size_t r : ranks) {
    m.ndcg += NdcgFromRank(r, k);
    m.hit += HitFromRank(r, k);
  }
  m.ndcg /= static_cast<double>(ranks.size());
  m.hit /= static_cast<double>(ranks.size());
  return m;
}

// History that does not fit in the window.
std::span<const ItemId> Older(std::span<const ItemId> history, std::size_t window) {
  return history.first(history.size() - std::min(history.size(), window));
}

void RequireTrained(const Model& model) {
  if (!model.trained()) throw Error("model is not trained");
}

}  // namespace

std::uint64_t AttemptSeed(std::uint64_t root, UserId user, std::size_t k, ItemId target) {
  std::uint64_t h = SplitMix(root);
  h = SplitMix(h ^ static_cast<std::uint64_t>(user));
  h = SplitMix(h ^ static_cast<std::uint64_t>(k));
  return SplitMix(h ^ static_cast<std::uint64_t>(target));
}

std::vector<UserId> SampleUsers(const data::SplitDataset& dataset, std::size_t sample_size, std::uint64_t seed) {
  if (sample_size > dataset.users.size()) {
    throw ContractError("sample size " + std::to_string(sample_size) + " exceeds the " +
                        std::to_string(dataset.users.size()) + " evaluable users");
  }
  std::vector<UserId> users;
  for (const auto& u : dataset.users) users.push_back(u.user);
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  users.resize(sample_size);
  std::sort(users.begin(), users.end());
  return users;
}

const MethodSummary& RetroReport::Find(Method method, std::size_t k) const {
  for (const auto& s : summary) {
    if (s.method == method && s.k == k) return s;
  }
  throw ContractError("no summary for " + std::string(ToString(method)) + "@" + std::to_string(k));
}

std::vector<MethodSummary> Summarize(const std::vector<RetroRow>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::pair<Method, std::size_t>, std::size_t> index;
  for (const auto& row : rows) {
    auto [it, inserted] = index.try_emplace({row.method, row.k}, out.size());
    if (inserted) out.push_back({row.method, row.k});
    MethodSummary& s = out[it->second];
    ++s.attempts;
    if (!row.success) continue;
    ++s.successes;
    s.complexity += row.complexity;
    s.accuracy += row.accuracy;
  }
  for (auto& s : out) {
    if (s.successes > 0) {
      s.complexity /= static_cast<double>(s.successes);
      s.accuracy /= static_cast<double>(s.successes);
    }
    s.fidelity = s.attempts == 0 ? 0.0 : static_cast<double>(s.successes) / static_cast<double>(s.attempts);
  }
  std::sort(out.begin(), out.end(), [](const MethodSummary& a, const MethodSummary& b) {
    return std::pair(a.method, a.k) < std::pair(b.method, b.k);
  });
  return out;
}

RetroReport RetrospectiveEval(const Model& model, const data::SplitDataset& dataset, const RetroEvalConfig& config,
                              const Progress& progress) {
  RequireTrained(model);
  if (config.ks.empty() || config.methods.empty()) throw ContractError("need at least one K and one method");
  config.hyper.Validate();
  RetroReport report;
  report.users = SampleUsers(dataset, config.sample_size, config.seed);
  std::vector<std::vector<RetroRow>> per_user(report.users.size());

  ParallelFor(
      report.users.size(), config.jobs,
      [&](std::size_t u) {
        const data::UserSplit& user = *dataset.FindUser(report.users[u]);
        const ExplainContext ctx(model, SequenceWindow::FromHistory(user.history(), model.window()),
                                 Older(user.history(), model.window()));
        const std::size_t eff = ctx.window().effective_length();
        for (std::size_t k : config.ks) {
          const RecommendationList original = ctx.TopK(MaskVector::Binary(model.window()), k);
          for (std::size_t rank = 1; rank <= original.entries.size(); ++rank) {
            const ItemId target = original.entries[rank - 1].item;
            for (Method method : config.methods) {
              const RetroRequest req{target, k, config.hyper, AttemptSeed(config.seed, user.user, k, target)};
              const auto start = std::chrono::steady_clock::now();
              const ExplanationRecord record = Retrospective(ctx, req, method);
              RetroRow row;
              row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
              row.user = user.user;
              row.k = k;
              row.method = method;
              row.target = target;
              row.target_rank = rank;
              row.success = record.success();
              row.revoked = record.revoked.size();
              row.effective_length = eff;
              row.iterations = record.iterations;
              if (row.success) {
                const ItemId undesired[] = {target};
                row.complexity = Complexity(record.final_mask, eff);
                row.accuracy = ControlAccuracy(original, ctx.TopK(record.final_mask, k), undesired);
              }
              per_user[u].push_back(row);
            }
          }
        }
      },
      progress);

  for (auto& rows : per_user) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  report.summary = Summarize(report.rows);
  return report;
}

ProspectiveReport ProspectiveSimulation(const Model& model, const data::SplitDataset& dataset,
                                        const ProspectiveConfig& config, const Progress& progress) {
  RequireTrained(model);
  if (config.k == 0 || config.eval_k == 0) throw ContractError("K must be >= 1");
  ProspectiveReport report;
  report.m = dataset.m;
  report.k = config.k;
  report.eval_k = config.eval_k;
  report.excluded_users = dataset.excluded_users;
  report.rows.resize(dataset.users.size());

  ParallelFor(
      dataset.users.size(), config.jobs,
      [&](std::size_t u) {
        const data::UserSplit& user = dataset.users[u];
        ProspectiveRow& row = report.rows[u];
        row.user = user.user;
        const auto history = user.history();
        const auto simulation = user.simulation();
        const auto prefix = user.prefix();
        if (simulation.empty()) {
          row.keep_rank = row.revoke_rank = TestRank(model, prefix, user.test());
          return;
        }
        row.current = simulation.front();
        const SequenceWindow window = SequenceWindow::FromHistory(history, model.window());
        row.added = ProspectiveExplanation(model, window, row.current, config.k, history).added_items;
        row.target_cohort = std::none_of(row.added.begin(), row.added.end(), [&](ItemId a) {
          return std::find(simulation.begin(), simulation.end(), a) != simulation.end();
        });

        const std::vector<char> ineligible = Ineligible(model.n_items(), prefix, user.test());
        const auto rank_from = [&](std::span<const ItemId> seq) {
          const SequenceWindow w = SequenceWindow::FromHistory(seq, model.window());
          const Vector scores = WindowScorer(model, w).ScoreAll(MaskVector::Binary(model.window()));
          return FullRank(scores, user.test(), ineligible);
        };
        row.keep_rank = rank_from(prefix);
        std::vector<ItemId> revoked(history.begin(), history.end());
        revoked.insert(revoked.end(), simulation.begin() + 1, simulation.end());
        row.revoke_rank = rank_from(revoked);
      },
      progress);

  std::vector<std::size_t> all_keep, all_revoke, target_keep, target_revoke;
  for (const auto& row : report.rows) {
    all_keep.push_back(row.keep_rank);
    all_revoke.push_back(row.revoke_rank);
    if (row.target_cohort) {
      target_keep.push_back(row.keep_rank);
      target_revoke.push_back(row.revoke_rank);
    }
  }
  report.all_keep = Mean(all_keep, config.eval_k);
  report.all_revoke = Mean(all_revoke, config.eval_k);
  report.target_keep = Mean(target_keep, config.eval_k);
  report.target_revoke = Mean(target_revoke, config.eval_k);
  return report;
}

RankingMetrics TestMetrics(const Model& model, const data::SplitDataset& dataset, std::size_t k) {
  std::vector<std::size_t> ranks;
  for (const auto& user : dataset.users) ranks.push_back(TestRank(model, user.prefix(), user.test()));
  return Mean(ranks, k);
}

Vector PopularityScores(const data::SplitDataset& dataset) {
  Vector counts = Vector::Zero(static_cast<Eigen::Index>(dataset.n_items));
  for (const auto& user : dataset.users) {
    for (ItemId i : user.train()) counts[i] += 1.0;
  }
  return counts;
}

RankingMetrics PopularityTestMetrics(const data::SplitDataset& dataset, std::size_t k) {
  const Vector scores = PopularityScores(dataset);
  std::vector<std::size_t> ranks;
  for (const auto& user : dataset.users) {
    ranks.push_back(FullRank(scores, user.test(), Ineligible(dataset.n_items, user.prefix(), user.test())));
  }
  return Mean(ranks, k);
}

std::string_view ToString(SweepParam param) {
  switch (param) {
    case SweepParam::kGamma1:
      return "gamma1";
    case SweepParam::kLambda:
      return "lambda";
    case SweepParam::kGamma2:
      return "gamma2";
    case SweepParam::kAlpha1:
      return "alpha1";
  }
  return "unknown";
}

SweepParam ParseSweepParam(std::string_view name) {
  if (name == "gamma1") return SweepParam::kGamma1;
  if (name == "lambda") return SweepParam::kLambda;
  if (name == "gamma2") return SweepParam::kGamma2;
  if (name == "alpha1") return SweepParam::kAlpha1;
  throw ContractError("unknown sweep parameter '" + std::string(name) + "' (gamma1, lambda, gamma2, alpha1)");
}

std::vector<SweepPoint> AblationSweep(const Model& model, const data::SplitDataset& dataset, SweepParam param,
                                      const std::vector<double>& values, const RetroEvalConfig& base,
                                      const Progress& progress) {
  if (values.empty()) throw ContractError("sweep needs at least one value");
  std::vector<SweepPoint> points;
  for (double value : values) {
    RetroEvalConfig config = base;
    config.methods = {param == SweepParam::kGamma1 ? Method::kSearch : Method::kRelax};
    switch (param) {
      case SweepParam::kGamma1:
        config.hyper.gamma1 = value;
        break;
      case SweepParam::kLambda:
        config.hyper.lambda = value;
        break;
      case SweepParam::kGamma2:
        config.hyper.gamma2 = value;
        break;
      case SweepParam::kAlpha1:
        config.hyper.alpha1 = value;
        break;
    }
    points.push_back({value, RetrospectiveEval(model, dataset, config, progress).summary});
  }
  return points;
}

namespace {

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void WriteSummaryFields(const MethodSummary& s, std::ostream& out) {
  out << ToString(s.method) << ',' << s.k << ',' << s.attempts << ',' << s.successes << ',' << Fixed(s.fidelity)
      << ',' << Fixed(s.complexity) << ',' << Fixed(s.accuracy);
}

}  // namespace

void WriteRetroRows(const RetroReport& report, const data::IdMap& ids, std::ostream& out) {
  out << "user,k,method,target,target_rank,status,revoked,effective_length,complexity,accuracy,iterations\n";
  for (const auto& r : report.rows) {
    out << ids.users.at(static_cast<std::size_t>(r.user)) << ',' << r.k << ',' << ToString(r.method) << ','
        << ids.items.at(static_cast<std::size_t>(r.target)) << ',' << r.target_rank << ','
        << (r.success ? "success" : "failure") << ',' << r.revoked << ',' << r.effective_length << ','
        << Fixed(r.complexity) << ',' << Fixed(r.accuracy) << ',' << r.iterations << '\n';
  }
}

void WriteRetroSummary(const std::vector<MethodSummary>& summary, std::ostream& out) {
  out << "method,k,attempts,successes,fidelity,complexity,accuracy\n";
  for (const auto& s : summary) {
    WriteSummaryFields(s, out);
    out << '\n';
  }
}

void WriteProspectiveRows(const ProspectiveReport& report, const data::IdMap& ids, std::ostream& out) {
  out << "user,current,added,target_cohort,keep_rank,revoke_rank,ndcg_keep,ndcg_revoke\n";
  for (const auto& r : report.rows) {
    out << ids.users.at(static_cast<std::size_t>(r.user)) << ',';
    if (r.current != kPaddingItem) out << ids.items.at(static_cast<std::size_t>(r.current));
    out << ',';
    for (std::size_t i = 0; i < r.added.size(); ++i) {
      if (i > 0) out << ';';
      out << ids.items.at(static_cast<std::size_t>(r.added[i]));
    }
    out << ',' << (r.target_cohort ? 1 : 0) << ',' << r.keep_rank << ',' << r.revoke_rank << ','
        << Fixed(NdcgFromRank(r.keep_rank, report.eval_k)) << ','
        << Fixed(NdcgFromRank(r.revoke_rank, report.eval_k)) << '\n';
  }
}

void WriteSweep(SweepParam param, const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "param,value,method,k,attempts,successes,fidelity,complexity,accuracy\n";
  for (const auto& p : points) {
    for (const auto& s : p.summary) {
      out << ToString(param) << ',' << p.value << ',';
      WriteSummaryFields(s, out);
      out << '\n';
    }
  }
}

void PrintRetroTable(const std::vector<MethodSummary>& summary, std::ostream& out) {
  std::vector<Method> methods;
  std::vector<std::size_t> ks;
  for (const auto& s : summary) {
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
    if (std::find(ks.begin(), ks.end(), s.k) == ks.end()) ks.push_back(s.k);
  }
  std::sort(ks.begin(), ks.end());
  const auto find = [&](Method m, std::size_t k) -> const MethodSummary* {
    for (const auto& s : summary) {
      if (s.method == m && s.k == k) return &s;
    }
    return nullptr;
  };
  char buf[64];
  out << "method      ";
  for (const char* metric : {"complexity", "accuracy", "fidelity"}) {
    for (std::size_t k : ks) {
      std::snprintf(buf, sizeof buf, " %10s@%-3zu", metric, k);
      out << buf;
    }
  }
  out << '\n';
  for (Method m : methods) {
    std::snprintf(buf, sizeof buf, "%-12s", std::string(ToString(m)).c_str());
    out << buf;
    for (int metric = 0; metric < 3; ++metric) {
      for (std::size_t k : ks) {
        const MethodSummary* s = find(m, k);
        const double v = s == nullptr ? 0.0 : metric == 0 ? s->complexity : metric == 1 ? s->accuracy : s->fidelity;
        std::snprintf(buf, sizeof buf, " %13.2f%%", 100.0 * v);
        out << buf;
      }
    }
    out << '\n';
  }
}

void PrintProspectiveTable(const ProspectiveReport& report, std::ostream& out) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s %6s %12s %12s %12s %12s\n", "cohort", "users", "ndcg keep", "ndcg revoke",
                "hit keep", "hit revoke");
  out << buf;
  const auto line = [&](const char* name, const RankingMetrics& keep, const RankingMetrics& revoke) {
    std::snprintf(buf, sizeof buf, "%-8s %6zu %12.4f %12.4f %12.4f %12.4f\n", name, keep.users, keep.ndcg,
                  revoke.ndcg, keep.hit, revoke.hit);
    out << buf;
  };
  line("all", report.all_keep, report.all_revoke);
  line("target", report.target_keep, report.target_revoke);
  out << "M = " << report.m << ", K = " << report.k << ", excluded users = " << report.excluded_users << '\n';
}

}  // namespace ucrec::eval
