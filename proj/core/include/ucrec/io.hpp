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

#ifndef UCREC_IO_HPP_
#define UCREC_IO_HPP_

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace ucrec {

// Writes to "<path>.tmp" and renames over `path` on success, so a failed
// writer never leaves a partial file behind.
void WriteAtomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

}  // namespace ucrec

#endif  // UCREC_IO_HPP_
