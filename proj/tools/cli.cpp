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

#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "ucrec/config.hpp"
#include "ucrec/data.hpp"
#include "ucrec/engine.hpp"
#include "ucrec/error.hpp"
#include "ucrec/eval.hpp"
#include "ucrec/io.hpp"
#include "ucrec/model_io.hpp"
#include "ucrec/service.hpp"
#include "ucrec/train.hpp"

namespace ucrec::cli {
namespace {

namespace fs = std::filesystem;

// Bad flags or config values; exits with kExitUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::shared_ptr<spdlog::logger> Log() {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("ucrec");
    l->set_pattern("[%H:%M:%S.%e] %^%l%$ %v");
    return l;
  }();
  return logger;
}

class Stage {
 public:
  explicit Stage(std::string name) : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {
    Log()->info("{}: start", name_);
  }
  ~Stage() { Log()->info("{}: {:.2f} s", name_, seconds()); }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

// A flag that overrides one config key when given.
struct Override {
  CLI::Option* option;
  std::string key;
  std::shared_ptr<std::string> value;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<Override> overrides;

  void Bind(const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    overrides.push_back({app->add_option(flag, *value, help + " (" + key + ")"), key, value});
  }

  Config Resolve() const {
    Config config;
    if (!config_path.empty()) config = Config::Load(config_path);
    try {
      for (const auto& s : sets) config.SetAssignment(s);
      for (const auto& o : overrides) {
        if (o.option->count() > 0) config.Set(o.key, *o.value);
      }
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
    return config;
  }
};

Command MakeCommand(CLI::App& parent, const std::string& name, const std::string& help) {
  Command c;
  c.app = parent.add_subcommand(name, help);
  c.app->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  c.app->add_option("--set", c.sets, "override one config key, key=value (repeatable)");
  return c;
}

struct RunFiles {
  Model model;
  data::SplitDataset dataset;
};

fs::path RunDir(const fs::path& model) { return fs::is_directory(model) ? model : model.parent_path(); }

// A run directory as written by `train`, or the model file inside one.
RunFiles LoadRun(const Config& config) {
  const std::string& path = config.Get("model.path");
  if (path.empty()) throw UsageError("--model is required");
  const fs::path model_file = fs::is_directory(path) ? fs::path(path) / "model.ucm" : fs::path(path);
  const fs::path dir = RunDir(path);
  Stage stage("load " + dir.string());
  if (!fs::exists(model_file)) throw DataError("no model at " + model_file.string() + "; run `ucrec train` first");
  RunFiles run{LoadModel(model_file), {}};
  const data::IdMap ids = data::LoadIdMap(dir / "idmap.tsv");
  run.dataset = data::LoadSplit(dir / "split.tsv", &ids);
  if (run.dataset.n_items != run.model.n_items()) {
    throw DataError("model and split in " + dir.string() + " disagree on the catalog size");
  }
  Log()->info("{} model, {} items, {} users, window {}", ToString(run.model.kind()), run.model.n_items(),
              run.dataset.users.size(), run.model.window());
  return run;
}

const data::UserSplit& FindUser(const data::SplitDataset& dataset, const std::string& original) {
  const auto user = dataset.ids.FindUser(original);
  const data::UserSplit* split = user ? dataset.FindUser(*user) : nullptr;
  if (split == nullptr) throw DataError("unknown user '" + original + "'");
  return *split;
}

ItemId FindItem(const data::SplitDataset& dataset, const std::string& original) {
  const auto item = dataset.ids.FindItem(original);
  if (!item) throw DataError("unknown item '" + original + "'");
  return *item;
}

// Everything known about the user: the whole sequence, with older items
// outside the window still excluded from recommendation.
ExplainContext LiveContext(const Model& model, const data::UserSplit& user) {
  const std::span<const ItemId> seq = user.sequence;
  const std::size_t older = seq.size() - std::min(seq.size(), model.window());
  return ExplainContext(model, SequenceWindow::FromHistory(seq, model.window()), seq.first(older));
}

eval::Progress ProgressLog(const std::string& what) {
  return [what, next = std::size_t{0}](std::size_t done, std::size_t total) mutable {
    if (done * 10 >= next * total || done == total) {
      Log()->info("{}: {}/{} users", what, done, total);
      next = done * 10 / std::max<std::size_t>(total, 1) + 1;
    }
  };
}

// Writes files into an existing or new directory; anything written by this
// invocation is removed again if a later step fails.
class OutputDir {
 public:
  explicit OutputDir(std::string path) : dir_(std::move(path)) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }
  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : written_) fs::remove(f, ec);
  }
  bool enabled() const { return !dir_.empty(); }
  void Write(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    if (!enabled()) return;
    const fs::path path = dir_ / name;
    WriteAtomically(path, writer);
    written_.push_back(path);
    Log()->info("wrote {}", path.string());
  }
  void Commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

std::vector<double> ParseValues(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    char* end = nullptr;
    const double v = std::strtod(part.c_str(), &end);
    if (part.empty() || *end != '\0') throw UsageError("bad value '" + part + "' in --values");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--values is empty");
  return out;
}

std::vector<double> DefaultSweep(eval::SweepParam param) {
  switch (param) {
    case eval::SweepParam::kGamma1:
      return {0.0, 0.5, 1.0, 2.0};
    case eval::SweepParam::kLambda:
      return {0.1, 1.0, 10.0, 100.0};
    case eval::SweepParam::kGamma2:
    case eval::SweepParam::kAlpha1:
      return {0.0, 0.1, 1.0, 10.0};
  }
  return {};
}

// --- subcommands -----------------------------------------------------------

int DoTrain(const Config& config, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) throw UsageError("train needs --out <run directory>");
  const std::string& data_path = config.Get("data.path");
  if (data_path.empty()) throw UsageError("train needs --data <interaction file>");
  if (!fs::exists(data_path)) throw DataError("no interaction file at " + data_path);

  data::InteractionLog log;
  {
    Stage stage("ingest");
    log = data::Ingest(data_path, data::ParseLogFormat(config.Get("data.format")));
    Log()->info("{} interactions, {} users, {} items, {} duplicates dropped", log.records.size(), log.n_users(),
                log.n_items(), log.ingest.duplicates);
  }
  data::FilterSummary filter_summary;
  {
    Stage stage("filter");
    log = data::Filter(log, config.GetSize("data.min_user"), config.GetSize("data.min_item"), &filter_summary);
    Log()->info("removed {} users, {} items; {} interactions left", filter_summary.removed_users,
                filter_summary.removed_items, log.records.size());
  }
  if (!config.Get("data.names").empty()) data::LoadItemNames(config.Get("data.names"), &log.ids);
  data::SplitDataset dataset;
  {
    Stage stage("split");
    dataset = data::Split(log, config.GetSize("data.m"));
    Log()->info("{} users kept, {} below the length floor", dataset.users.size(), dataset.excluded_users);
  }

  const fs::path final_dir(out_path);
  const fs::path partial = final_dir.string() + ".partial";
  fs::remove_all(partial);
  fs::create_directories(partial);
  try {
    TrainReport report;
    Model model = [&] {
      Stage stage("train");
      return Train(dataset, config.Training(), &report, [&](const EpochStats& s) {
        Log()->info("epoch {}: loss {:.4f}, validation NDCG {:.4f}, hit {:.4f} ({:.1f} s)", s.epoch, s.loss,
                    s.validation_ndcg, s.validation_hit, s.seconds);
      });
    }();
    SaveModel(model, partial / "model.ucm");
    data::SaveIdMap(dataset.ids, partial / "idmap.tsv");
    data::SaveSplit(dataset, partial / "split.tsv");
    WriteAtomically(partial / "config.txt", [&](std::ostream& os) { config.Write(os); });
    WriteAtomically(partial / "epochs.csv", [&](std::ostream& os) {
      os << "epoch,loss,validation_ndcg,validation_hit\n";
      char line[128];
      for (const auto& s : report.epochs) {
        std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,%.6f\n", s.epoch, s.loss, s.validation_ndcg,
                      s.validation_hit);
        os << line;
      }
    });
    fs::remove_all(final_dir);
    fs::rename(partial, final_dir);
    out << "best epoch " << report.best_epoch << " of " << report.epochs.size() << ", validation NDCG@"
        << config.GetSize("train.eval_k") << " " << report.best_validation_ndcg << '\n'
        << "wrote " << final_dir.string() << '\n';
  } catch (...) {
    std::error_code ec;
    fs::remove_all(partial, ec);
    throw;
  }
  return kExitOk;
}

int DoRecommend(const Config& config, const std::string& user_id, std::ostream& out) {
  const RunFiles run = LoadRun(config);
  const auto& user = FindUser(run.dataset, user_id);
  const ExplainContext ctx = LiveContext(run.model, user);
  const RecommendationList list = ctx.TopK(MaskVector::Binary(run.model.window()), config.GetSize("explain.k"));
  out << "rank\titem\tscore\tname\n";
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    char score[32];
    std::snprintf(score, sizeof(score), "%.6f", e.score);
    out << i + 1 << '\t' << run.dataset.ids.items[static_cast<std::size_t>(e.item)] << '\t' << score << '\t'
        << run.dataset.ids.ItemName(e.item) << '\n';
  }
  return kExitOk;
}

int DoExplainRetro(const Config& config, const std::string& user_id, const std::string& item_id,
                   const std::string& format, std::ostream& out) {
  const RunFiles run = LoadRun(config);
  const auto& ids = run.dataset.ids;
  const auto& user = FindUser(run.dataset, user_id);
  const ExplainContext ctx = LiveContext(run.model, user);
  const std::size_t k = config.GetSize("explain.k");
  const Method method = ParseMethod(config.Get("explain.method"));
  const RecommendationList list = ctx.TopK(MaskVector::Binary(run.model.window()), k);

  std::vector<ItemId> targets;
  if (item_id.empty()) {
    targets = list.items();
  } else {
    targets.push_back(FindItem(run.dataset, item_id));
    if (!list.Contains(targets[0])) {
      throw PreconditionError("item '" + item_id + "' is not in the top-" + std::to_string(k) + " of user '" +
                              user_id + "'");
    }
  }
  const auto name = [&](ItemId i) { return ids.ItemName(i); };
  const auto original = [&](ItemId i) { return ids.items[static_cast<std::size_t>(i)]; };
  for (ItemId target : targets) {
    Stage stage("explain " + original(target));
    const ExplanationRecord record =
        Retrospective(ctx, RetroRequest{target, k, config.Hyperparams(), config.GetSeed()}, method);
    if (format == "json") {
      out << ToJsonLine(record, user_id, original) << '\n';
    } else {
      out << list.RankOf(target) << ". " << name(target) << '\n'
          << "   " << RenderExplanation(record, name, config.Get("explain.verb")) << '\n';
    }
  }
  return kExitOk;
}

int DoExplainPro(const Config& config, const std::string& user_id, const std::string& item_id,
                 const std::string& format, std::ostream& out) {
  if (item_id.empty()) throw UsageError("explain-pro needs --item");
  const RunFiles run = LoadRun(config);
  const auto& ids = run.dataset.ids;
  const auto& user = FindUser(run.dataset, user_id);
  const ItemId item = FindItem(run.dataset, item_id);
  const std::span<const ItemId> seq = user.sequence;
  const std::size_t older = seq.size() - std::min(seq.size(), run.model.window());
  const ExplanationRecord record =
      ProspectiveExplanation(run.model, SequenceWindow::FromHistory(seq, run.model.window()), item,
                             config.GetSize("explain.k"), seq.first(older));
  const auto original = [&](ItemId i) { return ids.items[static_cast<std::size_t>(i)]; };
  if (format == "json") {
    out << ToJsonLine(record, user_id, original) << '\n';
  } else {
    out << RenderExplanation(record, [&](ItemId i) { return ids.ItemName(i); }) << '\n';
  }
  return kExitOk;
}

void LogLatency(const eval::RetroReport& report) {
  std::map<Method, std::pair<double, std::size_t>> totals;
  for (const auto& row : report.rows) {
    auto& t = totals[row.method];
    t.first += row.seconds;
    ++t.second;
  }
  for (const auto& [method, t] : totals) {
    Log()->info("{}: {} explanations, mean {:.1f} ms each", ToString(method), t.second,
                1000.0 * t.first / static_cast<double>(std::max<std::size_t>(t.second, 1)));
  }
}

int DoEvalRetro(const Config& config, const std::string& out_dir, std::ostream& out) {
  const RunFiles run = LoadRun(config);
  OutputDir output(out_dir);
  eval::RetroReport report;
  {
    Stage stage("eval-retro");
    report = eval::RetrospectiveEval(run.model, run.dataset, config.RetroEval(), ProgressLog("eval-retro"));
  }
  LogLatency(report);
  output.Write("retro_rows.csv", [&](std::ostream& os) { eval::WriteRetroRows(report, run.dataset.ids, os); });
  output.Write("retro_summary.csv", [&](std::ostream& os) { eval::WriteRetroSummary(report.summary, os); });
  output.Commit();
  eval::PrintRetroTable(report.summary, out);
  return kExitOk;
}

void WriteRanking(const eval::RankingMetrics& model, const eval::RankingMetrics& popularity, std::ostream& os) {
  char line[128];
  os << "scorer,users,ndcg,hit\n";
  std::snprintf(line, sizeof(line), "model,%zu,%.6f,%.6f\n", model.users, model.ndcg, model.hit);
  os << line;
  std::snprintf(line, sizeof(line), "popularity,%zu,%.6f,%.6f\n", popularity.users, popularity.ndcg,
                popularity.hit);
  os << line;
}

void WriteProspectiveSummary(const eval::ProspectiveReport& r, std::ostream& os) {
  char line[160];
  os << "cohort,users,ndcg_keep,ndcg_revoke,hit_keep,hit_revoke\n";
  const auto row = [&](const char* name, const eval::RankingMetrics& keep, const eval::RankingMetrics& revoke) {
    std::snprintf(line, sizeof(line), "%s,%zu,%.6f,%.6f,%.6f,%.6f\n", name, keep.users, keep.ndcg, revoke.ndcg,
                  keep.hit, revoke.hit);
    os << line;
  };
  row("all", r.all_keep, r.all_revoke);
  row("target", r.target_keep, r.target_revoke);
}

int DoEvalPro(const Config& config, const std::string& out_dir, bool m_given, std::ostream& out) {
  const RunFiles run = LoadRun(config);
  if (m_given && config.GetSize("data.m") != run.dataset.m) {
    throw DataError("the run was split with M = " + std::to_string(run.dataset.m) + "; retrain to use M = " +
                    config.Get("data.m"));
  }
  OutputDir output(out_dir);
  eval::ProspectiveReport report;
  {
    Stage stage("eval-pro");
    report = eval::ProspectiveSimulation(run.model, run.dataset, config.Prospective(), ProgressLog("eval-pro"));
  }
  const std::size_t eval_k = config.GetSize("eval.metric_k");
  const eval::RankingMetrics model = eval::TestMetrics(run.model, run.dataset, eval_k);
  const eval::RankingMetrics popularity = eval::PopularityTestMetrics(run.dataset, eval_k);
  output.Write("prospective_rows.csv",
               [&](std::ostream& os) { eval::WriteProspectiveRows(report, run.dataset.ids, os); });
  output.Write("prospective_summary.csv", [&](std::ostream& os) { WriteProspectiveSummary(report, os); });
  output.Write("ranking.csv", [&](std::ostream& os) { WriteRanking(model, popularity, os); });
  output.Commit();
  eval::PrintProspectiveTable(report, out);
  char line[160];
  std::snprintf(line, sizeof(line), "test NDCG@%zu: model %.4f, popularity %.4f\n", eval_k, model.ndcg,
                popularity.ndcg);
  out << line;
  return kExitOk;
}

int DoAblate(const Config& config, const std::string& param_name, const std::string& values_text,
             const std::string& out_dir, std::ostream& out) {
  eval::SweepParam param;
  try {
    param = eval::ParseSweepParam(param_name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::vector<double> values = values_text.empty() ? DefaultSweep(param) : ParseValues(values_text);
  const RunFiles run = LoadRun(config);
  OutputDir output(out_dir);
  std::vector<eval::SweepPoint> points;
  {
    Stage stage("ablate " + std::string(eval::ToString(param)));
    points = eval::AblationSweep(run.model, run.dataset, param, values, config.RetroEval(), ProgressLog("ablate"));
  }
  const std::string file = "sweep_" + std::string(eval::ToString(param)) + ".csv";
  output.Write(file, [&](std::ostream& os) { eval::WriteSweep(param, points, os); });
  output.Commit();
  eval::WriteSweep(param, points, out);
  return kExitOk;
}

int DoServe(const Config& config, std::ostream& out) {
  const RunFiles run = LoadRun(config);
  service::ServiceOptions options;
  options.k = config.GetSize("explain.k");
  options.default_method = ParseMethod(config.Get("explain.method"));
  if (options.default_method != Method::kSearch && options.default_method != Method::kRelax) {
    throw UsageError("the service explains with search or relax");
  }
  options.hyper = config.Hyperparams();
  options.idle_timeout = std::chrono::seconds(static_cast<long long>(config.GetDouble("serve.idle_minutes") * 60.0));
  options.snapshot = config.Get("serve.snapshot");
  options.verb = config.Get("explain.verb");
  service::ControlService svc(run.model, run.dataset, options);
  service::HttpServer server(svc);

  // Stop cleanly on SIGINT / SIGTERM: block them everywhere and wait in one thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.Stop();
  });
  const std::string host = config.Get("serve.host");
  const auto port = static_cast<int>(config.GetSize("serve.port"));
  std::exception_ptr failure;
  try {
    // Port 0 picks a free port; the bound address goes to `out` either way.
    const int bound = port == 0 ? server.BindAnyPort(host) : (server.Bind(host, port), port);
    out << "listening on " << host << ':' << bound << std::endl;
    server.Serve();
  } catch (...) {
    failure = std::current_exception();
  }
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  if (failure) std::rethrow_exception(failure);
  Log()->info("stopped");
  return kExitOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Controllable sequential recommendation with counterfactual explanations."};
  app.name("ucrec");
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  std::string out_path, user, item, format = "text", param, values;

  Command train = MakeCommand(app, "train", "ingest, split and train; writes a run directory");
  train.Bind("--data", "data.path", "interaction file");
  train.Bind("--data-format", "data.format", "movielens or tsv");
  train.Bind("--names", "data.names", "item titles, original-id<TAB>title");
  train.Bind("--m", "data.m", "simulation span per user");
  train.Bind("--seed", "seed", "random seed");
  train.app->add_option("--out", out_path, "run directory to write");

  Command recommend = MakeCommand(app, "recommend", "print a user's current top-K");
  recommend.app->add_option("--user", user, "original user id")->required();

  Command retro = MakeCommand(app, "explain-retro", "explain why items are recommended");
  retro.app->add_option("--user", user, "original user id")->required();
  retro.app->add_option("--item", item, "original item id; all of the top-K when omitted");
  retro.Bind("--method", "explain.method", "search, relax, random or similarity");
  retro.Bind("--seed", "seed", "seed of the random baseline");

  Command pro = MakeCommand(app, "explain-pro", "preview the effect of a new interaction");
  pro.app->add_option("--user", user, "original user id")->required();
  pro.app->add_option("--item", item, "original item id of the new interaction")->required();

  Command eval_retro = MakeCommand(app, "eval-retro", "complexity, accuracy and fidelity of explanations");
  eval_retro.Bind("--sample-size", "eval.sample_size", "users to sample");
  eval_retro.Bind("--method", "eval.methods", "comma-separated methods");
  eval_retro.Bind("--seed", "seed", "sampling and baseline seed");
  eval_retro.Bind("--jobs", "jobs", "worker threads");
  eval_retro.app->add_option("--out", out_path, "directory for the report files");

  Command eval_pro = MakeCommand(app, "eval-pro", "keep vs. revoke ranking accuracy on the simulation span");
  eval_pro.Bind("--m", "data.m", "expected simulation span; must match the run");
  eval_pro.Bind("--jobs", "jobs", "worker threads");
  eval_pro.app->add_option("--out", out_path, "directory for the report files");

  Command ablate = MakeCommand(app, "ablate", "sweep one explanation hyperparameter");
  ablate.app->add_option("--param", param, "gamma1, lambda, gamma2 or alpha1")->required();
  ablate.app->add_option("--values", values, "comma-separated values");
  ablate.Bind("--sample-size", "eval.sample_size", "users to sample");
  ablate.Bind("--seed", "seed", "sampling seed");
  ablate.Bind("--jobs", "jobs", "worker threads");
  ablate.app->add_option("--out", out_path, "directory for the sweep file");

  Command serve = MakeCommand(app, "serve", "run the HTTP control API");
  serve.Bind("--host", "serve.host", "bind address");
  serve.Bind("--port", "serve.port", "port");
  serve.Bind("--snapshot", "serve.snapshot", "session snapshot file");
  serve.Bind("--method", "explain.method", "default explanation method, search or relax");

  for (Command* c : {&recommend, &retro, &pro, &eval_retro, &eval_pro, &ablate, &serve}) {
    c->Bind("--model", "model.path", "run directory or model file");
  }
  for (Command* c : {&recommend, &retro, &pro, &serve}) c->Bind("--k", "explain.k", "list size");
  for (Command* c : {&eval_retro, &ablate}) c->Bind("--k", "eval.ks", "comma-separated list sizes");
  eval_pro.Bind("--k", "explain.k", "list size for added items");
  for (Command* c : {&retro, &pro}) {
    c->app->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0 && app.get_subcommands().empty()) err << '\n' << app.help();
    return code == 0 ? kExitOk : kExitUsage;
  }

  Log()->set_level(quiet ? spdlog::level::warn : spdlog::level::info);
  try {
    if (train.app->parsed()) return DoTrain(train.Resolve(), out_path, out);
    if (recommend.app->parsed()) return DoRecommend(recommend.Resolve(), user, out);
    if (retro.app->parsed()) return DoExplainRetro(retro.Resolve(), user, item, format, out);
    if (pro.app->parsed()) return DoExplainPro(pro.Resolve(), user, item, format, out);
    if (eval_retro.app->parsed()) return DoEvalRetro(eval_retro.Resolve(), out_path, out);
    if (eval_pro.app->parsed()) {
      const bool m_given = eval_pro.overrides.front().option->count() > 0;
      return DoEvalPro(eval_pro.Resolve(), out_path, m_given, out);
    }
    if (ablate.app->parsed()) return DoAblate(ablate.Resolve(), param, values, out_path, out);
    if (serve.app->parsed()) return DoServe(serve.Resolve(), out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace ucrec::cli
