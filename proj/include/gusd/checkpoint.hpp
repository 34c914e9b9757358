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
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gusd/nn.hpp"

namespace gusd {

/// One record of the "GUSDTEN1" container: name, dims, f32 payload.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

inline constexpr char kTensorMagic[8] = {'G', 'U', 'S', 'D', 'T', 'E', 'N', '1'};

/// Flat little-endian layout: magic, then per tensor
/// u32 name length, name bytes, u32 rank, u64 dims, f32 row-major data.
std::string encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(const std::string& bytes, const std::string& source);

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

template <typename T>
NamedTensor to_named(std::string name, const Matrix<T>& m) {
  NamedTensor t{std::move(name), {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}, {}};
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  return t;
}

/// Rank-1 tensors become a single row.
template <typename T>
Matrix<T> to_matrix(const NamedTensor& t) {
  Index rows = 1, cols = 1;
  if (t.dims.size() == 1) {
    cols = static_cast<Index>(t.dims[0]);
  } else if (t.dims.size() == 2) {
    rows = static_cast<Index>(t.dims[0]);
    cols = static_cast<Index>(t.dims[1]);
  } else if (!t.dims.empty()) {
    throw FormatError("tensor '" + t.name + "' has unsupported rank " + std::to_string(t.dims.size()));
  }
  Matrix<T> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(t.data[static_cast<std::size_t>(i)]);
  return m;
}

template <typename T>
std::vector<NamedTensor> to_named(const ParameterSet<T>& ps) {
  std::vector<NamedTensor> out;
  for (const auto& [name, t] : ps.items()) out.push_back(to_named(name, t.value()));
  return out;
}

template <typename T>
void save_parameters(const std::filesystem::path& path, const ParameterSet<T>& ps) {
  write_tensors(path, to_named(ps));
}

/// Loads every parameter by name; names and shapes must match exactly.
template <typename T>
void load_parameters(const std::filesystem::path& path, ParameterSet<T>& ps) {
  const auto tensors = read_tensors(path);
  if (tensors.size() != ps.size()) {
    throw FormatError(path.string() + ": expected " + std::to_string(ps.size()) + " tensors, found " +
                      std::to_string(tensors.size()));
  }
  for (const auto& [name, t] : ps.items()) {
    Matrix<T> m = to_matrix<T>(find_tensor(tensors, name));
    if (m.rows() != t.rows() || m.cols() != t.cols()) throw FormatError(path.string() + ": shape mismatch for " + name);
    Tensor<T> handle = t;
    handle.value_mut() = std::move(m);
  }
}

}  // namespace gusd
