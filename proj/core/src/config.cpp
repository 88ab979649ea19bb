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

#include "ucrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ucrec/error.hpp"

namespace ucrec {
namespace {

enum class Type { kString, kDouble, kSize, kBool, kKind, kMethod, kMethods, kSizes, kFormat };

struct KeySpec {
  const char* key;
  const char* value;
  Type type;
};

// Defaults follow the published training and explanation settings, with
// the desk-scale window, simulation size and sample size.
constexpr KeySpec kSpecs[] = {
    {"seed", "42", Type::kSize},
    {"jobs", "1", Type::kSize},
    {"data.path", "", Type::kString},
    {"model.path", "", Type::kString},
    {"data.format", "movielens", Type::kFormat},
    {"data.names", "", Type::kString},
    {"data.min_user", "20", Type::kSize},
    {"data.min_item", "10", Type::kSize},
    {"data.m", "10", Type::kSize},
    {"model.kind", "self-attention", Type::kKind},
    {"model.dim", "100", Type::kSize},
    {"model.window", "50", Type::kSize},
    {"train.batch_size", "128", Type::kSize},
    {"train.dropout", "0.2", Type::kDouble},
    {"train.learning_rate", "0.001", Type::kDouble},
    {"train.max_epochs", "200", Type::kSize},
    {"train.patience", "20", Type::kSize},
    {"train.eval_k", "10", Type::kSize},
    {"explain.k", "10", Type::kSize},
    {"explain.method", "search", Type::kMethod},
    {"explain.gamma1", "1", Type::kDouble},
    {"explain.lambda", "10", Type::kDouble},
    {"explain.gamma2", "1", Type::kDouble},
    {"explain.alpha1", "0.1", Type::kDouble},
    {"explain.learning_rate", "0.01", Type::kDouble},
    {"explain.steps", "500", Type::kSize},
    {"explain.threshold", "0.5", Type::kDouble},
    {"explain.literal_r2", "false", Type::kBool},
    {"explain.verb", "interacted with", Type::kString},
    {"eval.sample_size", "200", Type::kSize},
    {"eval.ks", "3,5,10", Type::kSizes},
    {"eval.methods", "search,relax,random,similarity", Type::kMethods},
    {"eval.metric_k", "10", Type::kSize},
    {"serve.host", "127.0.0.1", Type::kString},
    {"serve.port", "8080", Type::kSize},
    {"serve.idle_minutes", "30", Type::kDouble},
    {"serve.snapshot", "", Type::kString},
};

const KeySpec* FindSpec(std::string_view key) {
  for (const auto& s : kSpecs) {
    if (key == s.key) return &s;
  }
  return nullptr;
}

std::string_view Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> SplitList(std::string_view s) {
  std::vector<std::string> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const std::string_view part = Trim(s.substr(0, comma));
    if (!part.empty()) out.emplace_back(part);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

bool ParseSize(std::string_view s, std::size_t* out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool ParseDouble(std::string_view s, double* out) {
  // from_chars for double is not available everywhere yet.
  std::string copy(s);
  char* end = nullptr;
  *out = std::strtod(copy.c_str(), &end);
  return !copy.empty() && end == copy.c_str() + copy.size() && std::isfinite(*out);
}

bool ParseBool(std::string_view s, bool* out) {
  if (s == "true" || s == "1" || s == "yes") {
    *out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    *out = false;
    return true;
  }
  return false;
}

void Check(const KeySpec& spec, std::string_view value) {
  const auto bad = [&](const char* what) {
    throw ContractError(std::string(spec.key) + ": expected " + what + ", got '" + std::string(value) + "'");
  };
  std::size_t n = 0;
  double d = 0.0;
  bool b = false;
  switch (spec.type) {
    case Type::kString:
      return;
    case Type::kDouble:
      if (!ParseDouble(value, &d)) bad("a number");
      return;
    case Type::kSize:
      if (!ParseSize(value, &n)) bad("a non-negative integer");
      return;
    case Type::kBool:
      if (!ParseBool(value, &b)) bad("true or false");
      return;
    case Type::kKind:
      ParseScorerKind(value);
      return;
    case Type::kMethod:
      ParseMethod(value);
      return;
    case Type::kMethods:
      if (SplitList(value).empty()) bad("a comma-separated method list");
      for (const auto& m : SplitList(value)) ParseMethod(m);
      return;
    case Type::kSizes:
      if (SplitList(value).empty()) bad("a comma-separated list of integers");
      for (const auto& part : SplitList(value)) {
        if (!ParseSize(part, &n) || n == 0) bad("a comma-separated list of positive integers");
      }
      return;
    case Type::kFormat:
      data::ParseLogFormat(value);
      return;
  }
}

}  // namespace

Config::Config() {
  for (const auto& s : kSpecs) values_.emplace(s.key, s.value);
}

const std::vector<std::string>& Config::Keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : kSpecs) k.emplace_back(s.key);
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

Config Config::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  return Parse(in, path.string());
}

Config Config::Parse(std::istream& in, std::string_view source) {
  Config config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = Trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(std::string(source) + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      config.Set(Trim(text.substr(0, eq)), Trim(text.substr(eq + 1)));
    } catch (const ContractError& e) {
      throw DataError(std::string(source) + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

void Config::Set(std::string_view key, std::string_view value) {
  const KeySpec* spec = FindSpec(key);
  if (spec == nullptr) throw ContractError("unknown config key '" + std::string(key) + "'");
  try {
    Check(*spec, value);
  } catch (const ContractError&) {
    throw;
  } catch (const Error& e) {
    throw ContractError(std::string(key) + ": " + e.what());
  }
  values_.find(key)->second = std::string(value);
}

void Config::SetAssignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ContractError("expected key=value, got '" + std::string(assignment) + "'");
  Set(Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

const std::string& Config::Get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ContractError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

double Config::GetDouble(std::string_view key) const {
  double d = 0.0;
  if (!ParseDouble(Get(key), &d)) throw ContractError(std::string(key) + " is not a number");
  return d;
}

std::size_t Config::GetSize(std::string_view key) const {
  std::size_t n = 0;
  if (!ParseSize(Get(key), &n)) throw ContractError(std::string(key) + " is not a non-negative integer");
  return n;
}

std::uint64_t Config::GetSeed() const { return GetSize("seed"); }

bool Config::GetBool(std::string_view key) const {
  bool b = false;
  if (!ParseBool(Get(key), &b)) throw ContractError(std::string(key) + " is not a boolean");
  return b;
}

std::vector<std::string> Config::GetList(std::string_view key) const { return SplitList(Get(key)); }

void Config::Write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
}

TrainConfig Config::Training() const {
  TrainConfig c;
  c.kind = ParseScorerKind(Get("model.kind"));
  c.dim = GetSize("model.dim");
  c.window = GetSize("model.window");
  c.batch_size = GetSize("train.batch_size");
  c.dropout = GetDouble("train.dropout");
  c.learning_rate = GetDouble("train.learning_rate");
  c.max_epochs = GetSize("train.max_epochs");
  c.patience = GetSize("train.patience");
  c.eval_k = GetSize("train.eval_k");
  c.seed = GetSeed();
  return c;
}

RetroHyperparams Config::Hyperparams() const {
  RetroHyperparams h;
  h.gamma1 = GetDouble("explain.gamma1");
  h.lambda = GetDouble("explain.lambda");
  h.gamma2 = GetDouble("explain.gamma2");
  h.alpha1 = GetDouble("explain.alpha1");
  h.learning_rate = GetDouble("explain.learning_rate");
  h.steps = GetSize("explain.steps");
  h.threshold = GetDouble("explain.threshold");
  h.literal_r2 = GetBool("explain.literal_r2");
  return h;
}

eval::RetroEvalConfig Config::RetroEval() const {
  eval::RetroEvalConfig c;
  c.methods.clear();
  for (const auto& m : GetList("eval.methods")) c.methods.push_back(ParseMethod(m));
  c.ks.clear();
  for (const auto& k : GetList("eval.ks")) c.ks.push_back(std::stoul(k));
  c.sample_size = GetSize("eval.sample_size");
  c.seed = GetSeed();
  c.hyper = Hyperparams();
  c.jobs = GetSize("jobs");
  return c;
}

eval::ProspectiveConfig Config::Prospective() const {
  eval::ProspectiveConfig c;
  c.k = GetSize("explain.k");
  c.eval_k = GetSize("eval.metric_k");
  c.jobs = GetSize("jobs");
  return c;
}

}  // namespace ucrec
