// Copyright 2026 The Mirabel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIRABEL_EMBEDDING_FILE_H_
#define MIRABEL_EMBEDDING_FILE_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mirabel/corpus.h"

namespace mirabel {

// Binary embedding file layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "MIRB"
//   4       2     format version (u16, currently 1)
//   6       4     dim (u32)
//   10      8     count (u64)
//   18      1     flags (u8, bit0 = normalized)
//   19      ...   count * dim little-endian f32, row-major
inline constexpr std::string_view kEmbeddingMagic = "MIRB";
inline constexpr uint16_t kEmbeddingFormatVersion = 1;
inline constexpr size_t kEmbeddingHeaderSize = 19;

std::string EncodeEmbeddings(const EmbeddingMatrix& matrix);
absl::StatusOr<EmbeddingMatrix> DecodeEmbeddings(std::string_view bytes);

// Writes through a temporary sibling file and renames it into place, so a
// failed write never leaves a partial file at `path`.
absl::Status SaveEmbeddings(const EmbeddingMatrix& matrix,
                            const std::string& path);
absl::StatusOr<EmbeddingMatrix> LoadEmbeddings(const std::string& path);

// Whole-file helpers shared by the file formats in this project.
absl::StatusOr<std::string> ReadFileToString(const std::string& path);
absl::Status WriteFileAtomically(const std::string& path,
                                 std::string_view contents);

}  // namespace mirabel

#endif  // MIRABEL_EMBEDDING_FILE_H_
