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

#ifndef UCREC_MODEL_IO_HPP_
#define UCREC_MODEL_IO_HPP_

#include <filesystem>
#include <iosfwd>

#include "ucrec/model.hpp"

namespace ucrec {

// Single-file model format, version 1:
//
//   UCREC-MODEL 1
//   byte_order little-endian
//   scalar float64
//   kind <gru|self-attention|linear>
//   n_items <n>
//   dim <d>
//   window <T>
//   trained <0|1>
//   tensor <name> <rows> <cols>      (one line per tensor, in storage order)
//   data
//   <raw row-major float64 values of every tensor, in manifest order>
//
// The header is ASCII, one "key value" pair per line, so any language can
// parse the manifest before reading the payload.
inline constexpr int kModelFormatVersion = 1;

void WriteModel(const Model& model, std::ostream& out);
Model ReadModel(std::istream& in);

void SaveModel(const Model& model, const std::filesystem::path& path);
Model LoadModel(const std::filesystem::path& path);

}  // namespace ucrec

#endif  // UCREC_MODEL_IO_HPP_
