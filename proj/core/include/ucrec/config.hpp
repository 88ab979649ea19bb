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

#ifndef UCREC_CONFIG_HPP_
#define UCREC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ucrec/engine.hpp"
#include "ucrec/eval.hpp"
#include "ucrec/train.hpp"

namespace ucrec {

// Flat `key = value` settings. Every key has a default; unknown keys are
// rejected. Lines starting with '#' are comments.
class Config {
 public:
  Config();

  static Config Load(const std::filesystem::path& path);
  static Config Parse(std::istream& in, std::string_view source);

  // Throws ContractError for unknown keys and ill-typed values.
  void Set(std::string_view key, std::string_view value);
  // Parses "key=value".
  void SetAssignment(std::string_view assignment);

  const std::string& Get(std::string_view key) const;
  std::string GetString(std::string_view key) const { return Get(key); }
  double GetDouble(std::string_view key) const;
  std::size_t GetSize(std::string_view key) const;
  std::uint64_t GetSeed() const;
  bool GetBool(std::string_view key) const;
  std::vector<std::string> GetList(std::string_view key) const;

  static const std::vector<std::string>& Keys();

  // Writes every key, sorted.
  void Write(std::ostream& out) const;

  TrainConfig Training() const;
  RetroHyperparams Hyperparams() const;
  eval::RetroEvalConfig RetroEval() const;
  eval::ProspectiveConfig Prospective() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace ucrec

#endif  // UCREC_CONFIG_HPP_
