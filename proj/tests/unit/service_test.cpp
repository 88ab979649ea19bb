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
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "json.hpp"
#include "ucrec/error.hpp"

// After Eigen, see http_server.cpp.
#include "httplib.h"

namespace ucrec::service {
namespace {

using nlohmann::json;
using Query = std::multimap<std::string, std::string>;

constexpr std::size_t kWindow = 8;
constexpr std::size_t kK = 5;

data::SplitDataset Dataset() {
  std::mt19937_64 rng(3);
  std::ostringstream text;
  for (std::size_t u = 0; u < 12; ++u) {
    const std::size_t length = 6 + rng() % 14;
    std::vector<std::size_t> pool(40);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t t = 0; t < length; ++t) text << 'u' << u << "\ti" << pool[t] << '\t' << t << '\n';
  }
  std::istringstream in(text.str());
  data::SplitDataset dataset = data::Split(data::ParseLog(in, data::LogFormat::kTsv, "random"), 2);
  for (std::size_t i = 0; i < dataset.ids.items.size(); ++i) dataset.ids.item_names.push_back("Title " + dataset.ids.items[i]);
  return dataset;
}

Model TrainedLike(std::size_t n_items) {
  Model model = Model::Initialize({ScorerKind::kSelfAttention, n_items, 6, kWindow}, 11);
  model.set_trained(true);
  return model;
}

struct FakeClock {
  std::chrono::steady_clock::time_point now{};
  Clock clock() {
    return [this] { return now; };
  }
};

class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest() : dataset_(Dataset()), model_(TrainedLike(dataset_.n_items)) { Reset({}); }

  void Reset(ServiceOptions options) {
    options.k = kK;
    service_ = std::make_unique<ControlService>(model_, dataset_, options, clock_.clock());
  }

  json Call(std::string_view method, std::string_view path, const json& body = nullptr, const Query& query = {},
            int* status = nullptr) {
    const Response r = service_->Handle(method, path, query, body.is_null() ? "" : body.dump());
    if (status != nullptr) *status = r.status;
    json parsed = json::parse(r.body);
    EXPECT_EQ(parsed.at("schema_version"), kSchemaVersion) << r.body;
    return parsed;
  }

  std::string Raw(std::string_view method, std::string_view path, const Query& query = {}) {
    return service_->Handle(method, path, query, "").body;
  }

  std::string Open(const std::string& user) {
    int status = 0;
    const json created = Call("POST", "/sessions", {{"user_id", user}}, {}, &status);
    EXPECT_EQ(status, 201) << created.dump();
    return created.at("session_id");
  }

  // The engine's own answer for a window/exclude pair.
  std::vector<std::string> Expected(const SequenceWindow& window, const std::vector<ItemId>& exclude) const {
    const ExplainContext ctx(model_, window, exclude);
    std::vector<std::string> out;
    for (ItemId item : ctx.TopK(MaskVector::Binary(kWindow), kK).items()) out.push_back(dataset_.ids.items[item]);
    return out;
  }

  static std::vector<std::string> Ids(const json& list) {
    std::vector<std::string> out;
    for (const auto& row : list) out.push_back(row.at("item"));
    return out;
  }

  std::vector<ItemId> Older(const data::UserSplit& user) const {
    const std::size_t older = user.sequence.size() - std::min(user.sequence.size(), kWindow);
    return {user.sequence.begin(), user.sequence.begin() + static_cast<std::ptrdiff_t>(older)};
  }

  const data::UserSplit& LongUser() const {
    for (const auto& u : dataset_.users) {
      if (u.sequence.size() > kWindow + 2) return u;
    }
    throw Error("fixture has no long user");
  }

  std::string Name(const data::UserSplit& u) const { return dataset_.ids.users[static_cast<std::size_t>(u.user)]; }

  data::SplitDataset dataset_;
  Model model_;
  FakeClock clock_;
  std::unique_ptr<ControlService> service_;
};

TEST_F(ServiceTest, HealthReportsModelMetadata) {
  const json health = Call("GET", "/healthz");
  EXPECT_EQ(health.at("status"), "ok");
  EXPECT_EQ(health.at("model").at("kind"), "self-attention");
  EXPECT_EQ(health.at("model").at("window"), kWindow);
  EXPECT_EQ(health.at("model").at("n_items"), dataset_.n_items);
  EXPECT_EQ(health.at("k"), kK);
}

TEST_F(ServiceTest, ItemsListsTheCatalogWithNames) {
  const json items = Call("GET", "/items").at("items");
  ASSERT_EQ(items.size(), dataset_.n_items);
  EXPECT_EQ(items[0].at("item"), dataset_.ids.items[0]);
  EXPECT_EQ(items[0].at("name"), "Title " + dataset_.ids.items[0]);
}

TEST_F(ServiceTest, UnknownUserIsStructuredError) {
  int status = 0;
  const json error = Call("POST", "/sessions", {{"user_id", "nobody"}}, {}, &status);
  EXPECT_EQ(status, 404);
  EXPECT_EQ(error.at("code"), "unknown_user");
  EXPECT_FALSE(error.at("message").get<std::string>().empty());
}

TEST_F(ServiceTest, NewSessionMatchesEngineRecommendations) {
  const auto& user = LongUser();
  const std::string id = Open(Name(user));
  const json recs = Call("GET", "/sessions/" + id + "/recommendations").at("recommendations");
  ASSERT_EQ(recs.size(), kK);
  EXPECT_EQ(Ids(recs), Expected(SequenceWindow::FromHistory(user.sequence, kWindow), Older(user)));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].at("rank"), i + 1);
    EXPECT_EQ(recs[i].at("name"), "Title " + recs[i].at("item").get<std::string>());
    if (i > 0) EXPECT_GE(recs[i - 1].at("score").get<double>(), recs[i].at("score").get<double>());
  }
}

TEST_F(ServiceTest, SessionsOfOneUserAreIndependent) {
  const std::string name = Name(LongUser());
  const std::string a = Open(name);
  const std::string b = Open(name);
  ASSERT_NE(a, b);
  const std::string before = Raw("GET", "/sessions/" + b);
  Call("POST", "/sessions/" + a + "/revoke", {{"positions", {kWindow - 1}}});
  EXPECT_EQ(Raw("GET", "/sessions/" + b), before);
  EXPECT_TRUE(Call("GET", "/sessions/" + a).at("history").back().at("revoked").get<bool>());
}

TEST_F(ServiceTest, RevokingAnExplanationRemovesTheTarget) {
  std::size_t successes = 0;
  for (const auto& user : dataset_.users) {
    for (const char* method : {"search", "relax"}) {
      const std::string id = Open(Name(user));
      const json recs = Call("GET", "/sessions/" + id + "/recommendations").at("recommendations");
      const std::string target = recs[0].at("item");
      const json expl = Call("GET", "/sessions/" + id + "/explanations/" + target, nullptr, {{"method", method}});
      EXPECT_EQ(expl.at("method"), method);
      if (expl.at("status") != "success") {
        EXPECT_TRUE(expl.at("revoked").empty());
        continue;
      }
      ++successes;
      json positions = json::array();
      for (const auto& r : expl.at("revoked")) positions.push_back(r.at("position"));
      const json after = Call("POST", "/sessions/" + id + "/revoke", {{"positions", positions}});
      const auto ids = Ids(after.at("recommendations"));
      EXPECT_EQ(std::count(ids.begin(), ids.end(), target), 0);
      int status = 0;
      const json stale =
          Call("GET", "/sessions/" + id + "/explanations/" + target, nullptr, {{"method", method}}, &status);
      EXPECT_EQ(status, 409);
      EXPECT_EQ(stale.at("code"), "not_recommended");
    }
  }
  EXPECT_GT(successes, 0u);
}

TEST_F(ServiceTest, ExplanationIsCachedByteForByte) {
  const std::string id = Open(Name(LongUser()));
  const json recs = Call("GET", "/sessions/" + id + "/recommendations").at("recommendations");
  const std::string path = "/sessions/" + id + "/explanations/" + recs[1].at("item").get<std::string>();
  const std::string first = Raw("GET", path);
  EXPECT_EQ(Raw("GET", path), first);
  EXPECT_EQ(Raw("GET", path, {{"method", "search"}}), first);
  const json parsed = json::parse(first);
  EXPECT_EQ(parsed.at("kind"), "retrospective");
  EXPECT_EQ(parsed.at("method"), "search");
  EXPECT_FALSE(parsed.at("text").get<std::string>().empty());
}

TEST_F(ServiceTest, ExplanationErrors) {
  const std::string id = Open(Name(LongUser()));
  const std::string item = Call("GET", "/sessions/" + id + "/recommendations").at("recommendations")[0].at("item");
  int status = 0;
  EXPECT_EQ(Call("GET", "/sessions/" + id + "/explanations/" + item, nullptr, {{"method", "random"}}, &status)
                .at("code"),
            "bad_method");
  EXPECT_EQ(status, 400);
  EXPECT_EQ(Call("GET", "/sessions/" + id + "/explanations/zzz", nullptr, {}, &status).at("code"), "unknown_item");
  EXPECT_EQ(status, 404);
  // A window item is never recommended.
  const std::string own = Call("GET", "/sessions/" + id).at("history").back().at("item");
  EXPECT_EQ(Call("GET", "/sessions/" + id + "/explanations/" + own, nullptr, {}, &status).at("code"),
            "not_recommended");
}

TEST_F(ServiceTest, FailedRevokeLeavesSessionUnchanged) {
  const auto& user = LongUser();
  const std::string id = Open(Name(user));
  Call("POST", "/sessions/" + id + "/revoke", {{"positions", {3}}});
  const std::string before = Raw("GET", "/sessions/" + id);
  for (const json& bad : {json{{"positions", {1, kWindow}}}, json{{"positions", {2, 2}}}, json{{"positions", {3}}},
                          json{{"positions", {-1}}}, json{{"positions", "1"}}, json{{"positions", {0.5}}}}) {
    int status = 0;
    const json error = Call("POST", "/sessions/" + id + "/revoke", bad, {}, &status);
    EXPECT_EQ(status, 400) << bad.dump();
    EXPECT_EQ(Raw("GET", "/sessions/" + id), before) << bad.dump();
  }
  const json same = Call("POST", "/sessions/" + id + "/revoke", {{"positions", json::array()}});
  EXPECT_EQ(same.dump(), json::parse(before).dump());
}

TEST_F(ServiceTest, RevokeMatchesPaddingRecomputation) {
  const auto& user = LongUser();
  const std::string id = Open(Name(user));
  const json after = Call("POST", "/sessions/" + id + "/revoke", {{"positions", {2, kWindow - 1}}});
  const SequenceWindow window = SequenceWindow::FromHistory(user.sequence, kWindow).WithPadding(2).WithPadding(kWindow - 1);
  EXPECT_EQ(Ids(after.at("recommendations")), Expected(window, Older(user)));
  EXPECT_EQ(Ids(Call("GET", "/sessions/" + id + "/recommendations").at("recommendations")),
            Ids(after.at("recommendations")));
}

TEST_F(ServiceTest, InteractStagesWithoutCommitting) {
  const auto& user = LongUser();
  const std::string id = Open(Name(user));
  const std::string before = Raw("GET", "/sessions/" + id + "/recommendations");
  const ItemId fresh = 0;
  const std::string fresh_id = dataset_.ids.items[fresh];
  const json staged = Call("POST", "/sessions/" + id + "/interact", {{"item", fresh_id}});
  EXPECT_EQ(staged.at("pending").at("item"), fresh_id);

  const SequenceWindow window = SequenceWindow::FromHistory(user.sequence, kWindow);
  const ExplanationRecord record = ProspectiveExplanation(model_, window, fresh, kK, Older(user));
  std::vector<std::string> added;
  for (ItemId a : record.added_items) added.push_back(dataset_.ids.items[a]);
  EXPECT_EQ(Ids(staged.at("added_items")), added);
  EXPECT_EQ(Raw("GET", "/sessions/" + id + "/recommendations"), before);

  int status = 0;
  EXPECT_EQ(Call("POST", "/sessions/" + id + "/interact", {{"item", fresh_id}}, {}, &status).at("code"),
            "pending_interaction");
  EXPECT_EQ(status, 409);
}

TEST_F(ServiceTest, ConfirmMatchesPreviewAndEvictsOldest) {
  const auto& user = LongUser();
  const std::string id = Open(Name(user));
  Call("POST", "/sessions/" + id + "/revoke", {{"positions", {4}}});
  const json history = Call("GET", "/sessions/" + id).at("history");
  ASSERT_EQ(history.size(), kWindow);
  const std::string item = dataset_.ids.items[1];
  const json staged = Call("POST", "/sessions/" + id + "/interact", {{"item", item}});
  const json confirmed = Call("POST", "/sessions/" + id + "/confirm");
  EXPECT_EQ(Ids(confirmed.at("recommendations")), Ids(staged.at("preview")));
  const json after = confirmed.at("history");
  ASSERT_EQ(after.size(), kWindow);
  EXPECT_EQ(after.back().at("item"), item);
  EXPECT_EQ(after[0].at("item"), history[1].at("item"));
  // The revoked slot moved left with its behavior.
  EXPECT_TRUE(after[3].at("revoked").get<bool>());
  EXPECT_TRUE(confirmed.at("pending").is_null());

  std::vector<ItemId> exclude = Older(user);
  exclude.push_back(user.sequence[user.sequence.size() - kWindow]);
  SequenceWindow window = SequenceWindow::FromHistory(user.sequence, kWindow).Appended(1).WithPadding(3);
  EXPECT_EQ(Ids(confirmed.at("recommendations")), Expected(window, exclude));
}

TEST_F(ServiceTest, UndoRestoresPreviousList) {
  const std::string id = Open(Name(LongUser()));
  const std::string before = Raw("GET", "/sessions/" + id);
  Call("POST", "/sessions/" + id + "/interact", {{"item", dataset_.ids.items[2]}});
  const json undone = Call("POST", "/sessions/" + id + "/undo");
  EXPECT_EQ(undone.dump(), json::parse(before).dump());
  int status = 0;
  EXPECT_EQ(Call("POST", "/sessions/" + id + "/undo", nullptr, {}, &status).at("code"), "nothing_pending");
  EXPECT_EQ(status, 409);
  EXPECT_EQ(Call("POST", "/sessions/" + id + "/confirm", nullptr, {}, &status).at("code"), "nothing_pending");
}

TEST_F(ServiceTest, IdleSessionsExpire) {
  const std::string id = Open(Name(LongUser()));
  clock_.now += std::chrono::minutes(29);
  int status = 0;
  Call("GET", "/sessions/" + id, nullptr, {}, &status);
  EXPECT_EQ(status, 200);
  clock_.now += std::chrono::minutes(29);
  Call("GET", "/sessions/" + id, nullptr, {}, &status);
  EXPECT_EQ(status, 200);
  clock_.now += std::chrono::minutes(31);
  EXPECT_EQ(Call("GET", "/sessions/" + id, nullptr, {}, &status).at("code"), "unknown_session");
  EXPECT_EQ(status, 404);
  EXPECT_EQ(service_->session_count(), 0u);
}

TEST_F(ServiceTest, SessionCanBeClosed) {
  const std::string id = Open(Name(LongUser()));
  int status = 0;
  Call("DELETE", "/sessions/" + id, nullptr, {}, &status);
  EXPECT_EQ(status, 200);
  Call("GET", "/sessions/" + id, nullptr, {}, &status);
  EXPECT_EQ(status, 404);
}

TEST_F(ServiceTest, SnapshotRestoresSessions) {
  const auto path = std::filesystem::temp_directory_path() / "ucrec_service_snapshot.json";
  std::filesystem::remove(path);
  ServiceOptions options;
  options.snapshot = path;
  Reset(options);
  const std::string id = Open(Name(LongUser()));
  Call("POST", "/sessions/" + id + "/revoke", {{"positions", {5}}});
  Call("POST", "/sessions/" + id + "/interact", {{"item", dataset_.ids.items[3]}});
  const std::string state = Raw("GET", "/sessions/" + id);
  ASSERT_TRUE(std::filesystem::exists(path));

  Reset(options);
  EXPECT_EQ(service_->session_count(), 1u);
  EXPECT_EQ(Raw("GET", "/sessions/" + id), state);
  Call("POST", "/sessions/" + id + "/confirm");
  std::filesystem::remove(path);
}

TEST_F(ServiceTest, CorruptSnapshotIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "ucrec_bad_snapshot.json";
  { std::ofstream(path) << "{\"window\": 3, \"sessions\": []}"; }
  ServiceOptions options;
  options.snapshot = path;
  EXPECT_THROW(Reset(options), DataError);
  std::filesystem::remove(path);
}

TEST_F(ServiceTest, RoutingErrors) {
  int status = 0;
  EXPECT_EQ(Call("GET", "/nope", nullptr, {}, &status).at("code"), "not_found");
  EXPECT_EQ(status, 404);
  EXPECT_EQ(Call("GET", "/sessions", nullptr, {}, &status).at("code"), "method_not_allowed");
  EXPECT_EQ(status, 405);
  const Response r = service_->Handle("POST", "/sessions", {}, "{not json");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body).at("code"), "bad_request");
  EXPECT_EQ(Call("POST", "/sessions", json::object(), {}, &status).at("code"), "bad_request");
  EXPECT_EQ(Call("GET", "/sessions/abc/recommendations", nullptr, {}, &status).at("code"), "unknown_session");
}

TEST_F(ServiceTest, NumericUserIdsAreAccepted) {
  // Original ids are strings; numbers are converted.
  data::SplitDataset numeric = dataset_;
  numeric.ids.users[0] = "17";
  ControlService service(model_, numeric, {}, clock_.clock());
  EXPECT_EQ(service.Handle("POST", "/sessions", {}, R"({"user_id": 17})").status, 201);
}

TEST_F(ServiceTest, LiveHttpRoundTrip) {
  HttpServer server(*service_);
  const int port = server.BindAnyPort("127.0.0.1");
  std::thread serving([&] { server.Serve(); });
  server.WaitUntilReady();

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body).at("status"), "ok");

  std::vector<std::thread> workers;
  std::atomic<int> ok{0};
  for (std::size_t u = 0; u < 4; ++u) {
    workers.emplace_back([&, u] {
      httplib::Client c("127.0.0.1", port);
      const json body = {{"user_id", dataset_.ids.users[u]}};
      const auto created = c.Post("/sessions", body.dump(), "application/json");
      if (!created || created->status != 201) return;
      const std::string id = json::parse(created->body).at("session_id");
      const auto revoked =
          c.Post("/sessions/" + id + "/revoke", R"({"positions": [)" + std::to_string(kWindow - 1) + "]}",
                 "application/json");
      const auto item = json::parse(revoked->body).at("recommendations")[0].at("item").get<std::string>();
      const auto expl = c.Get("/sessions/" + id + "/explanations/" + item + "?method=relax");
      if (revoked->status == 200 && expl && expl->status == 200) ++ok;
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(ok.load(), 4);

  const auto missing = client.Post("/sessions", R"({"user_id": "nobody"})", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body).at("code"), "unknown_user");

  server.Stop();
  serving.join();
}

}  // namespace
}  // namespace ucrec::service
