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

#ifndef UCREC_SERVICE_HPP_
#define UCREC_SERVICE_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "ucrec/data.hpp"
#include "ucrec/engine.hpp"
#include "ucrec/model.hpp"

namespace ucrec::service {

inline constexpr int kSchemaVersion = 1;

struct ServiceOptions {
  std::size_t k = 10;
  Method default_method = Method::kSearch;
  RetroHyperparams hyper;
  std::chrono::seconds idle_timeout{30 * 60};
  // Written after every mutation when set, read once at startup.
  std::filesystem::path snapshot;
  std::string verb = "interacted with";
};

struct Response {
  int status = 200;
  std::string body;
};

using Clock = std::function<std::chrono::steady_clock::time_point()>;

namespace internal {
struct Session;
}

// The session-scoped control loop behind the HTTP API, independent of any
// transport. Requests and responses are JSON text; users and items are
// addressed by their original ids, window slots by index. Handle() is safe
// to call from many threads. Calls on one session are serialized, the model
// is only read.
class ControlService {
 public:
  ControlService(const Model& model, const data::SplitDataset& dataset, ServiceOptions options,
                 Clock clock = {});
  ~ControlService();

  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  // `path` excludes the query string, which arrives split in `query`.
  Response Handle(std::string_view method, std::string_view path,
                  const std::multimap<std::string, std::string>& query, std::string_view body);

  // Drops sessions idle for longer than the timeout. Also run on every request.
  std::size_t ExpireIdle();
  std::size_t session_count() const;

  void SaveSnapshot(const std::filesystem::path& path) const;
  // Replaces all sessions. Restored sessions count as touched now.
  void LoadSnapshot(const std::filesystem::path& path);

  const ServiceOptions& options() const { return options_; }

 private:
  using SessionPtr = std::shared_ptr<internal::Session>;

  Response Route(std::string_view method, std::string_view path,
                 const std::multimap<std::string, std::string>& query, std::string_view body);
  Response CreateSession(std::string_view body);
  Response GetSession(internal::Session& s);
  Response Recommendations(internal::Session& s);
  Response Explain(internal::Session& s, std::string_view item,
                   const std::multimap<std::string, std::string>& query);
  Response Revoke(internal::Session& s, std::string_view body);
  Response Interact(internal::Session& s, std::string_view body);
  Response Confirm(internal::Session& s);
  Response Undo(internal::Session& s);
  Response Health() const;
  Response Items() const;

  SessionPtr Find(std::string_view id);
  std::string NewSessionId();
  void Persist() const;

  const Model& model_;
  const data::SplitDataset& dataset_;
  ServiceOptions options_;
  Clock clock_;

  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, SessionPtr> sessions_;
  std::uint64_t id_state_;
  mutable std::mutex snapshot_mutex_;
};

// Blocking HTTP front end. Stop() may be called from another thread.
class HttpServer {
 public:
  explicit HttpServer(ControlService& service);
  ~HttpServer();

  // Binds and serves until Stop(). Throws Error when the address cannot be
  // bound.
  void Listen(const std::string& host, int port);
  // Bind first, then Serve() until Stop().
  void Bind(const std::string& host, int port);
  // Binds to a free port and returns it.
  int BindAnyPort(const std::string& host);
  void Serve();
  void Stop();
  // Blocks until the server accepts connections.
  void WaitUntilReady() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ucrec::service

#endif  // UCREC_SERVICE_HPP_
