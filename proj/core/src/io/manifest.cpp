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

#include "nvcnet/io/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "nvcnet/errors.hpp"

namespace nvc::io {

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

std::size_t Manifest::speaker_index(const std::string& name) const {
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    if (speakers[i] == name) return i;
  }
  throw DataError("unknown speaker '" + name + "'");
}

std::vector<ManifestEntry> Manifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

void Manifest::require_trainable() const {
  if (split(Split::kTrain).empty()) throw DataError("manifest has no train entries");
  if (split(Split::kTest).empty()) throw DataError("manifest has no test entries");
}

Manifest parse_manifest(std::istream& in, const std::string& base_dir) {
  Manifest m;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    const auto where = "manifest line " + std::to_string(lineno);
    if (fields.size() != 3) {
      throw FormatError(where + ": expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.path = fields[0];
    if (!base_dir.empty() && std::filesystem::path(e.path).is_relative()) {
      e.path = (std::filesystem::path(base_dir) / e.path).string();
    }
    e.speaker = fields[1];
    if (e.path.empty() || e.speaker.empty()) throw FormatError(where + ": empty path or speaker");
    if (fields[2] == "train") e.split = Split::kTrain;
    else if (fields[2] == "test") e.split = Split::kTest;
    else throw FormatError(where + ": split must be 'train' or 'test', got '" + fields[2] + "'");
    if (!seen.insert(e.path).second) throw DataError(where + ": duplicate path '" + e.path + "'");
    std::size_t idx = m.speakers.size();
    for (std::size_t i = 0; i < m.speakers.size(); ++i) {
      if (m.speakers[i] == e.speaker) idx = i;
    }
    if (idx == m.speakers.size()) m.speakers.push_back(e.speaker);
    e.speaker_index = idx;
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  return parse_manifest(in, std::filesystem::path(path).parent_path().string());
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  for (const auto& e : manifest.entries) out << e.path << '\t' << e.speaker << '\t' << split_name(e.split) << '\n';
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_manifest(out, manifest);
}

}  // namespace nvc::io
