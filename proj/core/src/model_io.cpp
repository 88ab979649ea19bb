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

#include "ucrec/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ucrec/error.hpp"
#include "ucrec/io.hpp"

namespace ucrec {
namespace {

constexpr const char* kMagic = "UCREC-MODEL";

std::uint64_t ToLittleEndian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

std::string ExpectKey(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("model file truncated before '" + key + "'");
  std::istringstream fields(line);
  std::string got;
  std::string value;
  fields >> got;
  std::getline(fields >> std::ws, value);
  if (got != key) throw DataError("model file: expected '" + key + "', found '" + got + "'");
  return value;
}

std::size_t ToSize(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("model file: bad value for '" + key + "': '" + value + "'");
  }
}

}  // namespace

void WriteModel(const Model& model, std::ostream& out) {
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "byte_order little-endian\n";
  out << "scalar float64\n";
  out << "kind " << ToString(model.kind()) << '\n';
  out << "n_items " << model.n_items() << '\n';
  out << "dim " << model.dim() << '\n';
  out << "window " << model.window() << '\n';
  out << "trained " << (model.trained() ? 1 : 0) << '\n';
  for (const Tensor& t : model.tensors()) {
    out << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
  }
  out << "data\n";
  for (const Tensor& t : model.tensors()) {
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      const std::uint64_t bits = ToLittleEndian(std::bit_cast<std::uint64_t>(t.value.data()[i]));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

Model ReadModel(std::istream& in) {
  const std::string version = ExpectKey(in, kMagic);
  if (version != std::to_string(kModelFormatVersion)) {
    throw DataError("unsupported model format version '" + version + "'");
  }
  if (ExpectKey(in, "byte_order") != "little-endian") throw DataError("unsupported byte order");
  if (ExpectKey(in, "scalar") != "float64") throw DataError("unsupported scalar type");
  ModelShape shape;
  shape.kind = ParseScorerKind(ExpectKey(in, "kind"));
  shape.n_items = ToSize(ExpectKey(in, "n_items"), "n_items");
  shape.dim = ToSize(ExpectKey(in, "dim"), "dim");
  shape.window = ToSize(ExpectKey(in, "window"), "window");
  const bool trained = ToSize(ExpectKey(in, "trained"), "trained") != 0;
  Model model = Model::Zeros(shape);
  model.set_trained(trained);
  for (Tensor& t : model.tensors()) {
    std::istringstream fields(ExpectKey(in, "tensor"));
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    fields >> name >> rows >> cols;
    if (name != t.name || rows != t.value.rows() || cols != t.value.cols()) {
      throw DataError("model file: tensor manifest mismatch at '" + name + "' (expected " + t.name + ")");
    }
  }
  ExpectKey(in, "data");
  for (Tensor& t : model.tensors()) {
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      std::uint64_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) {
        throw DataError("model file truncated in tensor '" + t.name + "'");
      }
      t.value.data()[i] = std::bit_cast<double>(ToLittleEndian(bits));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("model file has trailing bytes");
  if (!model.AllFinite()) throw DataError("model file contains non-finite weights");
  return model;
}

void SaveModel(const Model& model, const std::filesystem::path& path) {
  WriteAtomically(path, [&](std::ostream& out) { WriteModel(model, out); });
}

Model LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return ReadModel(in);
}

}  // namespace ucrec
