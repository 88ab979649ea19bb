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

#ifndef UCREC_DATA_HPP_
#define UCREC_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ucrec/types.hpp"

namespace ucrec::data {

// kMovieLens: user, item, rating, timestamp separated by "::" (ML-1M) or a
// tab (ML-100K u.data). The rating is ignored.
// kTsv: user, item, timestamp separated by tabs.
enum class LogFormat { kMovieLens, kTsv };

LogFormat ParseLogFormat(std::string_view name);

struct Interaction {
  UserId user;
  ItemId item;
  std::int64_t timestamp;
  // Position in the input file; breaks timestamp ties.
  std::size_t order;
};

// Original id <-> dense index for users and items, plus optional titles.
struct IdMap {
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<std::string> item_names;  // empty or one per item

  std::optional<UserId> FindUser(std::string_view original) const;
  std::optional<ItemId> FindItem(std::string_view original) const;
  // Title when known, otherwise the original id.
  std::string ItemName(ItemId item) const;

  bool operator==(const IdMap&) const = default;
};

struct IngestSummary {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
};

struct FilterSummary {
  std::size_t removed_users = 0;
  std::size_t removed_items = 0;
  std::size_t removed_interactions = 0;
  std::size_t rounds = 0;
};

struct InteractionLog {
  std::vector<Interaction> records;
  IdMap ids;
  std::string source;
  IngestSummary ingest;

  std::size_t n_users() const { return ids.users.size(); }
  std::size_t n_items() const { return ids.items.size(); }
};

InteractionLog ParseLog(std::istream& in, LogFormat format, std::string source = "stream");
InteractionLog Ingest(const std::filesystem::path& path, LogFormat format);

// Attaches titles from "original-id<TAB>title" lines. Unknown ids are ignored.
void LoadItemNames(const std::filesystem::path& path, IdMap* ids);

// Drops users with fewer than `min_user` and items with fewer than
// `min_item` interactions, repeating until nothing changes, then re-densifies
// the ids.
InteractionLog Filter(const InteractionLog& log, std::size_t min_user, std::size_t min_item,
                      FilterSummary* summary = nullptr);

// One user's chronological sequence cut as
//   [train ...][validation][simulation x M][test].
struct UserSplit {
  UserId user = 0;
  std::vector<ItemId> sequence;
  std::size_t m = 0;

  std::size_t train_end() const { return sequence.size() - m - 2; }
  std::span<const ItemId> train() const { return {sequence.data(), train_end()}; }
  ItemId validation() const { return sequence[train_end()]; }
  std::span<const ItemId> simulation() const { return {sequence.data() + train_end() + 1, m}; }
  ItemId test() const { return sequence.back(); }
  // Everything observed before the simulation span: train + validation.
  std::span<const ItemId> history() const { return {sequence.data(), train_end() + 1}; }
  // Everything before the test item.
  std::span<const ItemId> prefix() const { return {sequence.data(), sequence.size() - 1}; }
};

struct SplitDataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t m = 0;
  std::vector<UserSplit> users;
  std::size_t excluded_users = 0;
  IdMap ids;

  const UserSplit* FindUser(UserId user) const;
};

// Users shorter than M + 3 are excluded and counted.
SplitDataset Split(const InteractionLog& log, std::size_t m);

// A chunk of one user's train span: inputs and, per slot, the next item
// (kPaddingItem where the next item is outside the train span).
struct TrainingWindow {
  UserId user = 0;
  SequenceWindow inputs{0};
  std::vector<ItemId> targets;

  std::size_t n_targets() const;
};

// Non-overlapping windows over each train span, newest chunk first.
std::vector<TrainingWindow> TrainingWindows(const UserSplit& user, std::size_t capacity);
std::vector<TrainingWindow> TrainingWindows(const SplitDataset& dataset, std::size_t capacity);

// Line-oriented persistence. Writers throw DataError on I/O failure.
void SaveIdMap(const IdMap& ids, const std::filesystem::path& path);
IdMap LoadIdMap(const std::filesystem::path& path);
void SaveSplit(const SplitDataset& dataset, const std::filesystem::path& path);
// The id map is loaded separately; `ids` is attached when given.
SplitDataset LoadSplit(const std::filesystem::path& path, const IdMap* ids = nullptr);

}  // namespace ucrec::data

#endif  // UCREC_DATA_HPP_
