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
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nvc::io {

// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Little-endian primitive stream used by checkpoint and embedding files.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);
  void bytes(const void* data, std::size_t size);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void floats(std::span<const float> v);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);
  void bytes(void* data, std::size_t size);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str(std::size_t max_size = 1u << 24);
  std::vector<float> floats(std::size_t count);
  bool at_end();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace nvc::io
