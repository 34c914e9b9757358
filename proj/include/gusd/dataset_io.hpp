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

#include <filesystem>
#include <string>
#include <string_view>

#include "gusd/synthetic.hpp"

namespace gusd {

/// Writes nodes.jsonl, edges.jsonl, labels.jsonl, embeddings.bin and
/// manifest.json into `dir` (created if needed).
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

/// Reads a dataset directory. Malformed or truncated files raise FormatError
/// naming the file (and line for JSONL); a digest mismatch against
/// manifest.json is also a FormatError. Structural violations surface as
/// IntegrityError.
DatasetBundle load_bundle(const std::filesystem::path& dir, bool verify_digest = true);

/// Hex SHA-1 of `bytes`.
std::string sha1_hex(std::string_view bytes);

/// Git blob id: SHA-1 over "blob <size>\0" followed by the content.
std::string git_blob_id(std::string_view bytes);

/// Content digest of a dataset directory: SHA-1 over the sorted
/// "<name> <blob id>\n" lines of its data files (manifest excluded).
std::string dataset_digest(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gusd
