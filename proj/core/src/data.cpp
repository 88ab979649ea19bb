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

#include "ucrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "ucrec/error.hpp"
#include "ucrec/io.hpp"

namespace ucrec::data {
namespace {

std::vector<std::string_view> SplitFields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> ParseInt(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::int64_t ParseTimestamp(std::string_view s, std::size_t line_no) {
  if (auto v = ParseInt(s)) return *v;
  // Some exports write timestamps as floats ("881250949.0").
  double d = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec == std::errc() && ptr == s.data() + s.size()) return static_cast<std::int64_t>(d);
  throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + std::string(s) + "'");
}

// Numeric ids sort numerically, anything else lexicographically after them.
bool IdLess(const std::string& a, const std::string& b) {
  const auto na = ParseInt(a);
  const auto nb = ParseInt(b);
  if (na && nb) return *na < *nb;
  if (na != nb && (na || nb)) return static_cast<bool>(na);
  return a < b;
}

std::vector<std::string> SortedIds(const std::set<std::string>& raw) {
  std::vector<std::string> ids(raw.begin(), raw.end());
  std::sort(ids.begin(), ids.end(), IdLess);
  return ids;
}

template <typename Id>
std::optional<Id> Find(const std::vector<std::string>& ids, std::string_view original) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == original) return static_cast<Id>(i);
  }
  return std::nullopt;
}

}  // namespace

LogFormat ParseLogFormat(std::string_view name) {
  if (name == "movielens" || name == "ml") return LogFormat::kMovieLens;
  if (name == "tsv") return LogFormat::kTsv;
  throw DataError("unknown log format '" + std::string(name) + "' (expected movielens or tsv)");
}

std::optional<UserId> IdMap::FindUser(std::string_view original) const { return Find<UserId>(users, original); }

std::optional<ItemId> IdMap::FindItem(std::string_view original) const { return Find<ItemId>(items, original); }

std::string IdMap::ItemName(ItemId item) const {
  const auto i = static_cast<std::size_t>(item);
  if (i < item_names.size() && !item_names[i].empty()) return item_names[i];
  if (i < items.size()) return items[i];
  return std::to_string(item);
}

InteractionLog ParseLog(std::istream& in, LogFormat format, std::string source) {
  struct Raw {
    std::string user;
    std::string item;
    std::int64_t ts;
    std::size_t order;
  };
  std::vector<Raw> raw;
  IngestSummary summary;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = Trim(line);
    if (view.empty()) continue;
    ++summary.lines;
    std::vector<std::string_view> fields;
    if (format == LogFormat::kMovieLens) {
      fields = SplitFields(view, view.find("::") != std::string_view::npos ? "::" : "\t");
      if (fields.size() != 4) {
        throw DataError(source + ": line " + std::to_string(line_no) + ": expected user::item::rating::timestamp");
      }
      fields = {fields[0], fields[1], fields[3]};
    } else {
      fields = SplitFields(view, "\t");
      if (fields.size() != 3) {
        throw DataError(source + ": line " + std::to_string(line_no) + ": expected user<TAB>item<TAB>timestamp");
      }
    }
    for (auto& f : fields) f = Trim(f);
    if (fields[0].empty() || fields[1].empty()) {
      throw DataError(source + ": line " + std::to_string(line_no) + ": empty id");
    }
    raw.push_back({std::string(fields[0]), std::string(fields[1]), ParseTimestamp(fields[2], line_no), line_no});
  }
  if (raw.empty()) throw DataError(source + ": no interactions");

  std::set<std::tuple<std::string, std::string, std::int64_t>> seen;
  std::set<std::string> user_ids;
  std::set<std::string> item_ids;
  std::vector<Raw> unique;
  unique.reserve(raw.size());
  for (auto& r : raw) {
    if (!seen.insert({r.user, r.item, r.ts}).second) {
      ++summary.duplicates;
      continue;
    }
    user_ids.insert(r.user);
    item_ids.insert(r.item);
    unique.push_back(std::move(r));
  }

  InteractionLog log;
  log.source = std::move(source);
  log.ingest = summary;
  log.ids.users = SortedIds(user_ids);
  log.ids.items = SortedIds(item_ids);
  std::unordered_map<std::string, UserId> user_index;
  std::unordered_map<std::string, ItemId> item_index;
  for (std::size_t i = 0; i < log.ids.users.size(); ++i) user_index[log.ids.users[i]] = static_cast<UserId>(i);
  for (std::size_t i = 0; i < log.ids.items.size(); ++i) item_index[log.ids.items[i]] = static_cast<ItemId>(i);
  log.records.reserve(unique.size());
  for (const auto& r : unique) log.records.push_back({user_index[r.user], item_index[r.item], r.ts, r.order});
  return log;
}

InteractionLog Ingest(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return ParseLog(in, format, path.string());
}

void LoadItemNames(const std::filesystem::path& path, IdMap* ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  ids->item_names.assign(ids->items.size(), "");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids->items.size(); ++i) index[ids->items[i]] = i;
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = SplitFields(Trim(line), "\t");
    if (fields.size() < 2) continue;
    if (auto it = index.find(std::string(fields[0])); it != index.end()) {
      ids->item_names[it->second] = std::string(fields[1]);
    }
  }
}

InteractionLog Filter(const InteractionLog& log, std::size_t min_user, std::size_t min_item,
                      FilterSummary* summary) {
  FilterSummary local;
  std::vector<char> user_alive(log.n_users(), 1);
  std::vector<char> item_alive(log.n_items(), 1);
  std::vector<Interaction> records = log.records;
  while (true) {
    std::vector<std::size_t> user_count(log.n_users(), 0);
    std::vector<std::size_t> item_count(log.n_items(), 0);
    for (const auto& r : records) {
      ++user_count[static_cast<std::size_t>(r.user)];
      ++item_count[static_cast<std::size_t>(r.item)];
    }
    bool changed = false;
    for (std::size_t u = 0; u < user_alive.size(); ++u) {
      if (user_alive[u] && user_count[u] < min_user) {
        user_alive[u] = 0;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < item_alive.size(); ++i) {
      if (item_alive[i] && item_count[i] < min_item) {
        item_alive[i] = 0;
        changed = true;
      }
    }
    if (!changed) break;
    ++local.rounds;
    std::erase_if(records, [&](const Interaction& r) {
      return !user_alive[static_cast<std::size_t>(r.user)] || !item_alive[static_cast<std::size_t>(r.item)];
    });
  }
  if (records.empty()) throw DataError("filtering removed every interaction");

  // Users or items left without interactions are dropped too.
  std::vector<char> user_used(log.n_users(), 0);
  std::vector<char> item_used(log.n_items(), 0);
  for (const auto& r : records) {
    user_used[static_cast<std::size_t>(r.user)] = 1;
    item_used[static_cast<std::size_t>(r.item)] = 1;
  }
  InteractionLog out;
  out.source = log.source;
  out.ingest = log.ingest;
  std::vector<UserId> user_remap(log.n_users(), -1);
  std::vector<ItemId> item_remap(log.n_items(), -1);
  for (std::size_t u = 0; u < log.n_users(); ++u) {
    if (!user_used[u]) continue;
    user_remap[u] = static_cast<UserId>(out.ids.users.size());
    out.ids.users.push_back(log.ids.users[u]);
  }
  const bool names = !log.ids.item_names.empty();
  for (std::size_t i = 0; i < log.n_items(); ++i) {
    if (!item_used[i]) continue;
    item_remap[i] = static_cast<ItemId>(out.ids.items.size());
    out.ids.items.push_back(log.ids.items[i]);
    if (names) out.ids.item_names.push_back(log.ids.item_names[i]);
  }
  local.removed_users = log.n_users() - out.n_users();
  local.removed_items = log.n_items() - out.n_items();
  local.removed_interactions = log.records.size() - records.size();
  out.records.reserve(records.size());
  for (const auto& r : records) {
    out.records.push_back(
        {user_remap[static_cast<std::size_t>(r.user)], item_remap[static_cast<std::size_t>(r.item)], r.timestamp,
         r.order});
  }
  if (summary != nullptr) *summary = local;
  return out;
}

const UserSplit* SplitDataset::FindUser(UserId user) const {
  const auto it = std::lower_bound(users.begin(), users.end(), user,
                                   [](const UserSplit& s, UserId u) { return s.user < u; });
  return it != users.end() && it->user == user ? &*it : nullptr;
}

SplitDataset Split(const InteractionLog& log, std::size_t m) {
  std::vector<std::vector<const Interaction*>> per_user(log.n_users());
  for (const auto& r : log.records) per_user[static_cast<std::size_t>(r.user)].push_back(&r);
  SplitDataset out;
  out.n_users = log.n_users();
  out.n_items = log.n_items();
  out.m = m;
  out.ids = log.ids;
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& seq = per_user[u];
    if (seq.size() < m + 3) {
      ++out.excluded_users;
      continue;
    }
    std::stable_sort(seq.begin(), seq.end(), [](const Interaction* a, const Interaction* b) {
      return std::tie(a->timestamp, a->order) < std::tie(b->timestamp, b->order);
    });
    UserSplit split;
    split.user = static_cast<UserId>(u);
    split.m = m;
    split.sequence.reserve(seq.size());
    for (const Interaction* r : seq) split.sequence.push_back(r->item);
    out.users.push_back(std::move(split));
  }
  return out;
}

std::size_t TrainingWindow::n_targets() const {
  return static_cast<std::size_t>(
      std::count_if(targets.begin(), targets.end(), [](ItemId i) { return i != kPaddingItem; }));
}

std::vector<TrainingWindow> TrainingWindows(const UserSplit& user, std::size_t capacity) {
  std::vector<TrainingWindow> out;
  const std::span<const ItemId> train = user.train();
  if (train.empty() || capacity == 0) return out;
  // Inputs cover train[begin, end); targets are train[begin+1, end+1) with
  // the final train item having no in-span successor.
  std::size_t end = train.size();
  while (end > 0) {
    const std::size_t begin = end > capacity ? end - capacity : 0;
    TrainingWindow w;
    w.user = user.user;
    w.inputs = SequenceWindow::FromHistory(train.subspan(begin, end - begin), capacity);
    w.targets.assign(capacity, kPaddingItem);
    const std::size_t offset = capacity - (end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      if (i + 1 < train.size()) w.targets[offset + (i - begin)] = train[i + 1];
    }
    out.push_back(std::move(w));
    end = begin;
  }
  return out;
}

std::vector<TrainingWindow> TrainingWindows(const SplitDataset& dataset, std::size_t capacity) {
  std::vector<TrainingWindow> out;
  for (const auto& user : dataset.users) {
    auto w = TrainingWindows(user, capacity);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

void SaveIdMap(const IdMap& ids, const std::filesystem::path& path) {
  WriteAtomically(path, [&](std::ostream& out) {
    out << "# ucrec id map v1: kind<TAB>original<TAB>dense[<TAB>name]\n";
    for (std::size_t i = 0; i < ids.users.size(); ++i) out << "user\t" << ids.users[i] << '\t' << i << '\n';
    for (std::size_t i = 0; i < ids.items.size(); ++i) {
      out << "item\t" << ids.items[i] << '\t' << i;
      if (i < ids.item_names.size() && !ids.item_names[i].empty()) out << '\t' << ids.item_names[i];
      out << '\n';
    }
  });
}

IdMap LoadIdMap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  IdMap ids;
  std::map<std::size_t, std::string> users;
  std::map<std::size_t, std::pair<std::string, std::string>> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = SplitFields(line, "\t");
    const auto dense = f.size() >= 3 ? ParseInt(f[2]) : std::nullopt;
    if (!dense || *dense < 0) throw DataError(path.string() + ": line " + std::to_string(line_no) + ": malformed");
    const auto index = static_cast<std::size_t>(*dense);
    if (f[0] == "user") {
      users[index] = std::string(f[1]);
    } else if (f[0] == "item") {
      items[index] = {std::string(f[1]), f.size() >= 4 ? std::string(f[3]) : std::string()};
    } else {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": unknown kind");
    }
  }
  for (const auto& [i, u] : users) {
    if (i != ids.users.size()) throw DataError(path.string() + ": user indices not dense");
    ids.users.push_back(u);
  }
  bool any_name = false;
  for (const auto& [i, item] : items) {
    if (i != ids.items.size()) throw DataError(path.string() + ": item indices not dense");
    ids.items.push_back(item.first);
    ids.item_names.push_back(item.second);
    any_name = any_name || !item.second.empty();
  }
  if (!any_name) ids.item_names.clear();
  return ids;
}

void SaveSplit(const SplitDataset& dataset, const std::filesystem::path& path) {
  WriteAtomically(path, [&](std::ostream& out) {
    out << "# ucrec split v1: user <dense> <train_end> <validation> <sim_begin> <test> <items...>\n";
    out << "n_users " << dataset.n_users << '\n';
    out << "n_items " << dataset.n_items << '\n';
    out << "m " << dataset.m << '\n';
    out << "excluded " << dataset.excluded_users << '\n';
    for (const auto& u : dataset.users) {
      const std::size_t te = u.train_end();
      out << "user " << u.user << ' ' << te << ' ' << te << ' ' << te + 1 << ' ' << u.sequence.size() - 1;
      for (ItemId i : u.sequence) out << ' ' << i;
      out << '\n';
    }
  });
}

SplitDataset LoadSplit(const std::filesystem::path& path, const IdMap* ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  SplitDataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    auto fail = [&] { return DataError(path.string() + ": line " + std::to_string(line_no) + ": malformed"); };
    if (key == "n_users") {
      fields >> out.n_users;
    } else if (key == "n_items") {
      fields >> out.n_items;
    } else if (key == "m") {
      fields >> out.m;
    } else if (key == "excluded") {
      fields >> out.excluded_users;
    } else if (key == "user") {
      UserSplit u;
      std::size_t train_end = 0, validation = 0, sim_begin = 0, test = 0;
      if (!(fields >> u.user >> train_end >> validation >> sim_begin >> test)) throw fail();
      ItemId item = 0;
      while (fields >> item) u.sequence.push_back(item);
      u.m = out.m;
      if (u.sequence.size() < out.m + 3 || u.train_end() != train_end || test + 1 != u.sequence.size()) {
        throw fail();
      }
      out.users.push_back(std::move(u));
    } else {
      throw fail();
    }
    if (fields.fail() && !fields.eof()) throw fail();
  }
  if (ids != nullptr) out.ids = *ids;
  return out;
}

}  // namespace ucrec::data
