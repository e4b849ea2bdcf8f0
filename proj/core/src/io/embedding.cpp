/**
 * Copyright 2026 The nvcnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nvcnet/io/embedding.hpp"

#include <cstring>

#include "nvcnet/errors.hpp"
#include "nvcnet/io/binary.hpp"

namespace nvc::io {

namespace {
constexpr char kMagic[8] = {'N', 'V', 'C', 'E', 'M', 'B', '\0', '\1'};
}

void save_embedding(const std::string& path, const EmbeddingFile& emb) {
  BinaryWriter w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kEmbeddingVersion);
  w.u64(emb.config_digest);
  w.u32(static_cast<std::uint32_t>(emb.values.size()));
  w.floats(emb.values);
  w.close();
}

EmbeddingFile load_embedding(const std::string& path) {
  BinaryReader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("'" + path + "' is not an embedding file");
  const auto version = r.u32();
  if (version != kEmbeddingVersion) {
    throw IncompatibleError("'" + path + "': embedding format version " + std::to_string(version) + ", expected " +
                            std::to_string(kEmbeddingVersion));
  }
  EmbeddingFile emb;
  emb.config_digest = r.u64();
  const auto dim = r.u32();
  if (dim == 0 || dim > (1u << 20)) throw FormatError("'" + path + "': implausible dimension " + std::to_string(dim));
  emb.values = r.floats(dim);
  if (!r.at_end()) throw FormatError("'" + path + "': trailing bytes");
  return emb;
}

}  // namespace nvc::io
