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

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace nvc::io {

enum class Split { kTrain, kTest };

struct ManifestEntry {
  std::string path;
  std::string speaker;
  Split split = Split::kTrain;
  std::size_t speaker_index = 0;
};

// One record per line: path <TAB> speaker <TAB> split, split being "train" or
// "test". Blank lines and lines starting with '#' are ignored. Speakers get
// dense branch indices in order of first appearance.
struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> speakers;

  std::size_t n_speakers() const { return speakers.size(); }
  std::size_t speaker_index(const std::string& name) const;
  std::vector<ManifestEntry> split(Split s) const;
  // Both splits nonempty.
  void require_trainable() const;
};

// Relative paths are resolved against `base_dir` when it is nonempty.
Manifest parse_manifest(std::istream& in, const std::string& base_dir = "");
Manifest load_manifest(const std::string& path);
void write_manifest(std::ostream& out, const Manifest& manifest);
void save_manifest(const std::string& path, const Manifest& manifest);

const char* split_name(Split s);

}  // namespace nvc::io
