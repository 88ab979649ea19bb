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

#ifndef UCREC_ERROR_HPP_
#define UCREC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ucrec {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition on shapes or modes
// (mask length, binary vs relaxed, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Item id outside the catalog.
class InvalidItemError : public Error {
 public:
  using Error::Error;
};

// The request is well-formed but its semantic precondition does not hold,
// e.g. the target item is not currently recommended.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable input data and files.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace ucrec

#endif  // UCREC_ERROR_HPP_
