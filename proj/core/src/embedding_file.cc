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

#include "mirabel/embedding_file.h"

#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "absl/strings/str_cat.h"

namespace mirabel {
namespace {

template <typename T>
void PutLittleEndian(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(
        static_cast<char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T GetLittleEndian(std::string_view bytes, size_t offset) {
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

std::string EncodeEmbeddings(const EmbeddingMatrix& matrix) {
  std::string out;
  out.reserve(kEmbeddingHeaderSize + matrix.data().size() * 4);
  out.append(kEmbeddingMagic);
  PutLittleEndian<uint16_t>(out, kEmbeddingFormatVersion);
  PutLittleEndian<uint32_t>(out, static_cast<uint32_t>(matrix.dim()));
  PutLittleEndian<uint64_t>(out, matrix.count());
  out.push_back(static_cast<char>(matrix.normalized() ? 1 : 0));
  for (float v : matrix.data()) {
    PutLittleEndian<uint32_t>(out, std::bit_cast<uint32_t>(v));
  }
  return out;
}

absl::StatusOr<EmbeddingMatrix> DecodeEmbeddings(std::string_view bytes) {
  if (bytes.size() < kEmbeddingMagic.size() ||
      bytes.substr(0, kEmbeddingMagic.size()) != kEmbeddingMagic) {
    return absl::InvalidArgumentError("bad magic: not an embedding file");
  }
  if (bytes.size() < kEmbeddingHeaderSize) {
    return absl::DataLossError(absl::StrCat("truncated header: ", bytes.size(),
                                            " of ", kEmbeddingHeaderSize,
                                            " bytes"));
  }
  const auto version = GetLittleEndian<uint16_t>(bytes, 4);
  if (version != kEmbeddingFormatVersion) {
    return absl::InvalidArgumentError(
        absl::StrCat("unsupported embedding format version ", version));
  }
  const uint64_t dim = GetLittleEndian<uint32_t>(bytes, 6);
  const uint64_t count = GetLittleEndian<uint64_t>(bytes, 10);
  const auto flags = static_cast<uint8_t>(bytes[18]);
  if (dim == 0) return absl::InvalidArgumentError("embedding dim is 0");
  if ((flags & ~uint8_t{1}) != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown flag bits 0x", absl::Hex(flags)));
  }
  const uint64_t body = bytes.size() - kEmbeddingHeaderSize;
  const uint64_t row_bytes = dim * 4;
  if (body % row_bytes != 0) {
    return absl::DataLossError(absl::StrCat("truncated file: body of ", body,
                                            " bytes ends mid-row (row is ",
                                            row_bytes, " bytes)"));
  }
  if (body / row_bytes != count) {
    return absl::DataLossError(absl::StrCat("length mismatch: header declares ",
                                            count, " rows, body holds ",
                                            body / row_bytes));
  }
  std::vector<float> data(dim * count);
  for (size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(
        GetLittleEndian<uint32_t>(bytes, kEmbeddingHeaderSize + 4 * i));
  }
  return EmbeddingMatrix::FromData(dim, count, std::move(data), flags & 1);
}

absl::StatusOr<std::string> ReadFileToString(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open ", path, ": ", std::strerror(errno)));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return absl::DataLossError(absl::StrCat("read failed: ", path));
  return std::move(ss).str();
}

absl::Status WriteFileAtomically(const std::string& path,
                                 std::string_view contents) {
  const std::string tmp = absl::StrCat(path, ".tmp.", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::PermissionDeniedError(
          absl::StrCat("cannot create ", tmp, ": ", std::strerror(errno)));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      return absl::DataLossError(absl::StrCat("write failed: ", tmp));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    return absl::PermissionDeniedError(
        absl::StrCat("cannot move ", tmp, " to ", path));
  }
  return absl::OkStatus();
}

absl::Status SaveEmbeddings(const EmbeddingMatrix& matrix,
                            const std::string& path) {
  return WriteFileAtomically(path, EncodeEmbeddings(matrix));
}

absl::StatusOr<EmbeddingMatrix> LoadEmbeddings(const std::string& path) {
  auto bytes = ReadFileToString(path);
  if (!bytes.ok()) return bytes.status();
  auto m = DecodeEmbeddings(*bytes);
  if (!m.ok()) {
    return absl::Status(m.status().code(),
                        absl::StrCat(path, ": ", m.status().message()));
  }
  return m;
}

}  // namespace mirabel
