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

#include "nvcnet/io/binary.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "nvcnet/errors.hpp"

namespace nvc::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

BinaryWriter::BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

void BinaryWriter::bytes(const void* data, std::size_t size) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out_) throw IoError("write failed on '" + path_ + "'");
}

void BinaryWriter::u32(std::uint32_t v) { bytes(&v, sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { bytes(&v, sizeof v); }
void BinaryWriter::f64(double v) { bytes(&v, sizeof v); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  bytes(s.data(), s.size());
}

void BinaryWriter::floats(std::span<const float> v) { bytes(v.data(), v.size_bytes()); }

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw IoError("closing '" + path_ + "' failed");
}

BinaryReader::BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open '" + path + "' for reading");
}

void BinaryReader::bytes(void* data, std::size_t size) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (static_cast<std::size_t>(in_.gcount()) != size) throw FormatError("'" + path_ + "' is truncated");
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  bytes(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  bytes(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  bytes(&v, sizeof v);
  return v;
}

std::string BinaryReader::str(std::size_t max_size) {
  const auto n = u64();
  if (n > max_size) throw FormatError("'" + path_ + "': string field of " + std::to_string(n) + " bytes");
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

std::vector<float> BinaryReader::floats(std::size_t count) {
  std::vector<float> v(count);
  bytes(v.data(), count * sizeof(float));
  return v;
}

bool BinaryReader::at_end() { return in_.peek() == std::ifstream::traits_type::eof(); }

}  // namespace nvc::io
