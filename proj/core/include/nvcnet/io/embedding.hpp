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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nvc::io {

// Speaker embedding file, little-endian:
//   8 bytes  magic "NVCEMB\0\1"
//   u32      format version (1)
//   u64      model config digest
//   u32      d_spk
//   f32[d_spk]
struct EmbeddingFile {
  std::uint64_t config_digest = 0;
  std::vector<float> values;
};

inline constexpr std::uint32_t kEmbeddingVersion = 1;

void save_embedding(const std::string& path, const EmbeddingFile& emb);
EmbeddingFile load_embedding(const std::string& path);

}  // namespace nvc::io
