/**
 * Copyright 2026 The GUSD Authors
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
#include "gusd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gusd {
namespace {

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(source_ + ": truncated while reading " + what + " at byte " + std::to_string(pos_));
    }
  }

 private:
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const std::vector<NamedTensor>& tensors) {
  std::string out(kTensorMagic, sizeof(kTensorMagic));
  for (const auto& t : tensors) {
    std::uint64_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.data.size()) throw ShapeError("tensor '" + t.name + "': dims do not match payload");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    for (float f : t.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.take(sizeof(kTensorMagic), "magic") != std::string(kTensorMagic, sizeof(kTensorMagic))) {
    throw FormatError(source + ": bad magic, expected GUSDTEN1");
  }
  std::vector<NamedTensor> out;
  while (!r.done()) {
    NamedTensor t;
    const auto name_len = r.get<std::uint32_t>("name length");
    t.name = r.take(name_len, "name");
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > 8) throw FormatError(source + ": implausible rank " + std::to_string(rank) + " for " + t.name);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      t.dims.push_back(r.get<std::uint64_t>("dims"));
      count *= t.dims.back();
    }
    r.need(count * 4, "tensor data");
    t.data.resize(count);
    for (auto& f : t.data) f = std::bit_cast<float>(r.get<std::uint32_t>("tensor data"));
    out.push_back(std::move(t));
  }
  return out;
}

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(path.string() + ": cannot open for writing");
  const std::string bytes = encode_tensors(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError(path.string() + ": write failed");
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_tensors(ss.str(), path.filename().string());
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("tensor container has no entry named '" + name + "'");
}

}  // namespace gusd
