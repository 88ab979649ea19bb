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

#include "ucrec/service.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ucrec/error.hpp"
#include "ucrec/io.hpp"

namespace ucrec::service {

using nlohmann::json;

namespace internal {

struct Session {
  std::mutex mutex;
  std::string id;
  UserId user = 0;
  SequenceWindow window{0};
  MaskVector mask = MaskVector::Binary(0);
  // History that fell out of the window; never recommended.
  std::vector<ItemId> exclude;
  std::optional<ItemId> pending;
  std::atomic<std::chrono::steady_clock::rep> touched{0};
  std::map<std::pair<ItemId, Method>, std::string> explanations;
};

}  // namespace internal

namespace {

using internal::Session;
using Query = std::multimap<std::string, std::string>;

// Thrown inside handlers and turned into an error payload.
struct ApiError {
  int status;
  std::string code;
  std::string message;
};

Response Json(const json& body, int status = 200) {
  json out = body;
  out["schema_version"] = kSchemaVersion;
  return {status, out.dump()};
}

Response ErrorResponse(const ApiError& e) {
  return Json({{"code", e.code}, {"message", e.message}}, e.status);
}

std::vector<std::string_view> Segments(std::string_view path) {
  std::vector<std::string_view> out;
  while (!path.empty()) {
    const auto slash = path.find('/');
    if (slash != 0) out.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return out;
}

json ParseBody(std::string_view body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ApiError{400, "bad_request", "request body must be a JSON object"};
  }
  return parsed;
}

// Ids may arrive as strings or numbers.
std::string IdField(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end()) throw ApiError{400, "bad_request", std::string("missing field '") + field + "'"};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw ApiError{400, "bad_request", std::string("field '") + field + "' must be a string or integer"};
}

SequenceWindow Effective(const Session& s) {
  SequenceWindow eff = s.window;
  for (std::size_t pos = 0; pos < s.mask.size(); ++pos) {
    if (s.mask.IsRevoked(pos)) eff = eff.WithPadding(pos);
  }
  return eff;
}

}  // namespace

ControlService::ControlService(const Model& model, const data::SplitDataset& dataset, ServiceOptions options,
                               Clock clock)
    : model_(model), dataset_(dataset), options_(std::move(options)), clock_(std::move(clock)) {
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
  if (options_.k == 0) throw ContractError("service list size must be positive");
  options_.hyper.Validate();
  if (dataset_.n_items != model_.n_items()) throw DataError("dataset and model disagree on the catalog size");
  std::random_device rd;
  id_state_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  if (!options_.snapshot.empty() && std::filesystem::exists(options_.snapshot)) LoadSnapshot(options_.snapshot);
}

ControlService::~ControlService() = default;

std::string ControlService::NewSessionId() {
  // splitmix64 over a randomly seeded counter.
  std::uint64_t z = (id_state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(z));
  return buf;
}

std::size_t ControlService::ExpireIdle() {
  const auto now = clock_().time_since_epoch().count();
  const auto limit = std::chrono::duration_cast<std::chrono::steady_clock::duration>(options_.idle_timeout).count();
  std::unique_lock lock(sessions_mutex_);
  return std::erase_if(sessions_, [&](const auto& entry) { return now - entry.second->touched.load() > limit; });
}

std::size_t ControlService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

ControlService::SessionPtr ControlService::Find(std::string_view id) {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(std::string(id));
  if (it == sessions_.end()) throw ApiError{404, "unknown_session", "no session '" + std::string(id) + "'"};
  it->second->touched = clock_().time_since_epoch().count();
  return it->second;
}

Response ControlService::Handle(std::string_view method, std::string_view path, const Query& query,
                                std::string_view body) {
  ExpireIdle();
  try {
    return Route(method, path, query, body);
  } catch (const ApiError& e) {
    return ErrorResponse(e);
  } catch (const std::exception& e) {
    return ErrorResponse({500, "internal", e.what()});
  }
}

Response ControlService::Route(std::string_view method, std::string_view path, const Query& query,
                               std::string_view body) {
  const auto seg = Segments(path);
  const auto require = [&](std::string_view expected) {
    if (method != expected) {
      throw ApiError{405, "method_not_allowed", std::string(method) + " is not supported on " + std::string(path)};
    }
  };
  if (seg.size() == 1 && seg[0] == "healthz") {
    require("GET");
    return Health();
  }
  if (seg.size() == 1 && seg[0] == "items") {
    require("GET");
    return Items();
  }
  if (seg.empty() || seg[0] != "sessions" || seg.size() > 4) {
    throw ApiError{404, "not_found", "no route for " + std::string(path)};
  }
  if (seg.size() == 1) {
    require("POST");
    Response r = CreateSession(body);
    Persist();
    return r;
  }

  if (seg.size() == 2 && method == "DELETE") {
    {
      std::unique_lock lock(sessions_mutex_);
      if (sessions_.erase(std::string(seg[1])) == 0) {
        throw ApiError{404, "unknown_session", "no session '" + std::string(seg[1]) + "'"};
      }
    }
    Persist();
    return Json({{"session_id", seg[1]}, {"closed", true}});
  }

  const SessionPtr session = Find(seg[1]);
  Response response;
  bool mutated = false;
  {
    std::lock_guard lock(session->mutex);
    if (seg.size() == 2) {
      require("GET");
      response = GetSession(*session);
    } else if (seg.size() == 3 && seg[2] == "recommendations") {
      require("GET");
      response = Recommendations(*session);
    } else if (seg.size() == 4 && seg[2] == "explanations") {
      require("GET");
      response = Explain(*session, seg[3], query);
    } else if (seg.size() == 3 && seg[2] == "revoke") {
      require("POST");
      response = Revoke(*session, body);
      mutated = true;
    } else if (seg.size() == 3 && seg[2] == "interact") {
      require("POST");
      response = Interact(*session, body);
      mutated = true;
    } else if (seg.size() == 3 && seg[2] == "confirm") {
      require("POST");
      response = Confirm(*session);
      mutated = true;
    } else if (seg.size() == 3 && seg[2] == "undo") {
      require("POST");
      response = Undo(*session);
      mutated = true;
    } else {
      throw ApiError{404, "not_found", "no route for " + std::string(path)};
    }
  }
  if (mutated) Persist();
  return response;
}

namespace {

json ItemJson(const data::IdMap& ids, ItemId item) {
  return {{"item", ids.items[static_cast<std::size_t>(item)]}, {"name", ids.ItemName(item)}};
}

json ListJson(const data::IdMap& ids, const RecommendationList& list) {
  json rows = json::array();
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    json row = ItemJson(ids, list.entries[i].item);
    row["rank"] = i + 1;
    row["score"] = list.entries[i].score;
    rows.push_back(std::move(row));
  }
  return rows;
}

RecommendationList CurrentList(const Model& model, const Session& s, std::size_t k) {
  const ExplainContext ctx(model, Effective(s), s.exclude);
  return ctx.TopK(MaskVector::Binary(model.window()), k);
}

// The list after appending `item`, with the same eviction rule as Confirm.
RecommendationList PreviewList(const Model& model, const Session& s, ItemId item, std::size_t k) {
  const SequenceWindow eff = Effective(s);
  std::vector<ItemId> exclude = s.exclude;
  if (eff.capacity() > 0 && !eff.is_padding(0)) exclude.push_back(eff[0]);
  const ExplainContext ctx(model, eff.Appended(item), exclude);
  return ctx.TopK(MaskVector::Binary(model.window()), k);
}

ItemId ResolveItem(const data::IdMap& ids, std::string_view original) {
  const auto item = ids.FindItem(original);
  if (!item) throw ApiError{404, "unknown_item", "no item '" + std::string(original) + "'"};
  return *item;
}

void Invalidate(Session& s) { s.explanations.clear(); }

}  // namespace

Response ControlService::CreateSession(std::string_view body) {
  const json request = ParseBody(body);
  const std::string original = IdField(request, "user_id");
  const auto user = dataset_.ids.FindUser(original);
  const data::UserSplit* split = user ? dataset_.FindUser(*user) : nullptr;
  if (split == nullptr) throw ApiError{404, "unknown_user", "no user '" + original + "'"};

  auto session = std::make_shared<Session>();
  session->user = split->user;
  const std::span<const ItemId> history = split->sequence;
  session->window = SequenceWindow::FromHistory(history, model_.window());
  session->mask = MaskVector::Binary(model_.window());
  const std::size_t older = history.size() - std::min(history.size(), model_.window());
  session->exclude.assign(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(older));
  session->touched = clock_().time_since_epoch().count();
  {
    std::unique_lock lock(sessions_mutex_);
    do {
      session->id = NewSessionId();
    } while (sessions_.contains(session->id));
    sessions_.emplace(session->id, session);
  }
  std::lock_guard lock(session->mutex);
  json out = json::parse(GetSession(*session).body);
  out.erase("schema_version");
  return Json(out, 201);
}

Response ControlService::GetSession(Session& s) {
  json history = json::array();
  for (std::size_t pos = 0; pos < s.window.capacity(); ++pos) {
    if (s.window.is_padding(pos)) continue;
    json row = ItemJson(dataset_.ids, s.window[pos]);
    row["position"] = pos;
    row["revoked"] = s.mask.IsRevoked(pos);
    history.push_back(std::move(row));
  }
  json out = {{"session_id", s.id},
              {"user_id", dataset_.ids.users[static_cast<std::size_t>(s.user)]},
              {"k", options_.k},
              {"history", std::move(history)},
              {"pending", s.pending ? ItemJson(dataset_.ids, *s.pending) : json(nullptr)},
              {"recommendations", ListJson(dataset_.ids, CurrentList(model_, s, options_.k))}};
  return Json(out);
}

Response ControlService::Recommendations(Session& s) {
  return Json({{"session_id", s.id},
               {"k", options_.k},
               {"recommendations", ListJson(dataset_.ids, CurrentList(model_, s, options_.k))}});
}

Response ControlService::Explain(Session& s, std::string_view original, const Query& query) {
  Method method = options_.default_method;
  if (const auto it = query.find("method"); it != query.end()) {
    if (it->second == "search") {
      method = Method::kSearch;
    } else if (it->second == "relax") {
      method = Method::kRelax;
    } else {
      throw ApiError{400, "bad_method", "method must be 'search' or 'relax'"};
    }
  }
  const ItemId item = ResolveItem(dataset_.ids, original);
  if (const auto it = s.explanations.find({item, method}); it != s.explanations.end()) return {200, it->second};

  const ExplainContext ctx(model_, Effective(s), s.exclude);
  const RecommendationList current = ctx.TopK(MaskVector::Binary(model_.window()), options_.k);
  if (!current.Contains(item)) {
    throw ApiError{409, "not_recommended", "item '" + std::string(original) + "' is not currently recommended"};
  }
  const ExplanationRecord record = Retrospective(ctx, RetroRequest{item, options_.k, options_.hyper, 0}, method);
  json revoked = json::array();
  for (const auto& r : record.revoked) {
    json row = ItemJson(dataset_.ids, r.item);
    row["position"] = r.position;
    revoked.push_back(std::move(row));
  }
  const auto name = [&](ItemId i) { return dataset_.ids.ItemName(i); };
  json out = {{"session_id", s.id},
              {"kind", "retrospective"},
              {"method", ToString(method)},
              {"status", record.success() ? "success" : "failure"},
              {"target", ItemJson(dataset_.ids, item)},
              {"k", record.k},
              {"revoked", std::move(revoked)},
              {"iterations", record.iterations},
              {"diagnostic", record.diagnostic},
              {"text", RenderExplanation(record, name, options_.verb)}};
  Response response = Json(out);
  s.explanations.emplace(std::make_pair(item, method), response.body);
  return response;
}

Response ControlService::Revoke(Session& s, std::string_view body) {
  const json request = ParseBody(body);
  const auto it = request.find("positions");
  if (it == request.end() || !it->is_array()) throw ApiError{400, "bad_request", "'positions' must be an array"};
  std::set<std::size_t> positions;
  for (const auto& p : *it) {
    if (!p.is_number_integer() || p.get<std::int64_t>() < 0 ||
        p.get<std::uint64_t>() >= s.window.capacity()) {
      throw ApiError{400, "invalid_position", "position " + p.dump() + " is out of range"};
    }
    const auto pos = p.get<std::size_t>();
    if (s.window.is_padding(pos)) throw ApiError{400, "invalid_position", "position " + p.dump() + " is empty"};
    if (s.mask.IsRevoked(pos)) {
      throw ApiError{400, "invalid_position", "position " + p.dump() + " is already revoked"};
    }
    if (!positions.insert(pos).second) {
      throw ApiError{400, "invalid_position", "position " + p.dump() + " is listed twice"};
    }
  }
  for (std::size_t pos : positions) s.mask.Revoke(pos);
  if (!positions.empty()) Invalidate(s);
  return GetSession(s);
}

Response ControlService::Interact(Session& s, std::string_view body) {
  const json request = ParseBody(body);
  const ItemId item = ResolveItem(dataset_.ids, IdField(request, "item"));
  if (s.pending) {
    throw ApiError{409, "pending_interaction", "confirm or undo the pending interaction first"};
  }
  const ExplanationRecord record = ProspectiveExplanation(model_, Effective(s), item, options_.k, s.exclude);
  json added = json::array();
  for (ItemId a : record.added_items) added.push_back(ItemJson(dataset_.ids, a));
  const auto name = [&](ItemId i) { return dataset_.ids.ItemName(i); };
  json out = {{"session_id", s.id},
              {"kind", "prospective"},
              {"pending", ItemJson(dataset_.ids, item)},
              {"added_items", std::move(added)},
              {"text", RenderExplanation(record, name, options_.verb)},
              {"preview", ListJson(dataset_.ids, PreviewList(model_, s, item, options_.k))}};
  s.pending = item;
  return Json(out);
}

Response ControlService::Confirm(Session& s) {
  if (!s.pending) throw ApiError{409, "nothing_pending", "there is no pending interaction"};
  if (s.window.capacity() > 0 && !s.window.is_padding(0) && !s.mask.IsRevoked(0)) {
    s.exclude.push_back(s.window[0]);
  }
  s.window = s.window.Appended(*s.pending);
  s.mask = s.mask.Appended();
  s.pending.reset();
  Invalidate(s);
  return GetSession(s);
}

Response ControlService::Undo(Session& s) {
  if (!s.pending) throw ApiError{409, "nothing_pending", "there is no pending interaction"};
  s.pending.reset();
  return GetSession(s);
}

Response ControlService::Health() const {
  const ModelShape& shape = model_.shape();
  return Json({{"status", "ok"},
               {"model",
                {{"kind", ToString(shape.kind)},
                 {"n_items", shape.n_items},
                 {"dim", shape.dim},
                 {"window", shape.window},
                 {"trained", model_.trained()}}},
               {"users", dataset_.users.size()},
               {"k", options_.k},
               {"method", ToString(options_.default_method)},
               {"sessions", session_count()}});
}

Response ControlService::Items() const {
  json items = json::array();
  for (std::size_t i = 0; i < dataset_.ids.items.size(); ++i) items.push_back(ItemJson(dataset_.ids, static_cast<ItemId>(i)));
  return Json({{"items", std::move(items)}});
}

void ControlService::Persist() const {
  if (options_.snapshot.empty()) return;
  SaveSnapshot(options_.snapshot);
}

void ControlService::SaveSnapshot(const std::filesystem::path& path) const {
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, s] : sessions_) sessions.push_back(s);
  }
  std::sort(sessions.begin(), sessions.end(), [](const auto& a, const auto& b) { return a->id < b->id; });
  json out = {{"schema_version", kSchemaVersion}, {"window", model_.window()}, {"sessions", json::array()}};
  for (const auto& s : sessions) {
    std::lock_guard lock(s->mutex);
    std::vector<int> mask;
    for (std::size_t pos = 0; pos < s->mask.size(); ++pos) mask.push_back(s->mask.IsRevoked(pos) ? 1 : 0);
    const auto window = s->window.positions();
    out["sessions"].push_back({{"id", s->id},
                               {"user", s->user},
                               {"window", std::vector<ItemId>(window.begin(), window.end())},
                               {"mask", mask},
                               {"exclude", s->exclude},
                               {"pending", s->pending ? json(*s->pending) : json(nullptr)}});
  }
  std::lock_guard lock(snapshot_mutex_);
  WriteAtomically(path, [&](std::ostream& os) { os << out.dump() << '\n'; });
}

void ControlService::LoadSnapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open snapshot " + path.string());
  const json snapshot = json::parse(in, nullptr, false);
  if (snapshot.is_discarded() || snapshot.value("window", std::size_t{0}) != model_.window()) {
    throw DataError("snapshot " + path.string() + " does not match the loaded model");
  }
  std::unordered_map<std::string, SessionPtr> restored;
  const auto now = clock_().time_since_epoch().count();
  try {
    for (const auto& entry : snapshot.at("sessions")) {
      auto s = std::make_shared<Session>();
      s->id = entry.at("id").get<std::string>();
      s->user = entry.at("user").get<UserId>();
      if (dataset_.FindUser(s->user) == nullptr) throw DataError("unknown user");
      std::vector<ItemId> window = entry.at("window").get<std::vector<ItemId>>();
      for (ItemId item : window) {
        if (item != kPaddingItem) model_.CheckItem(item);
      }
      if (window.size() != model_.window()) throw DataError("window size");
      s->window = SequenceWindow(std::move(window));
      s->mask = MaskVector::Binary(model_.window());
      const auto mask = entry.at("mask").get<std::vector<int>>();
      if (mask.size() != model_.window()) throw DataError("mask size");
      for (std::size_t pos = 0; pos < mask.size(); ++pos) s->mask.Set(pos, mask[pos]);
      s->exclude = entry.at("exclude").get<std::vector<ItemId>>();
      for (ItemId item : s->exclude) model_.CheckItem(item);
      if (!entry.at("pending").is_null()) {
        s->pending = entry.at("pending").get<ItemId>();
        model_.CheckItem(*s->pending);
      }
      s->touched = now;
      restored.emplace(s->id, std::move(s));
    }
  } catch (const std::exception& e) {
    throw DataError("snapshot " + path.string() + " is malformed: " + e.what());
  }
  std::unique_lock lock(sessions_mutex_);
  sessions_ = std::move(restored);
}

}  // namespace ucrec::service
