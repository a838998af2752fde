/* Copyright 2026 The docstream Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace docstream {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

// Hex FNV-1a of the file contents.
std::string file_fingerprint(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

// Calls fn(line, line_number) for every non-blank line (1-based numbering).
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

// Initializes the shared logger; level taken from DOCSTREAM_LOG
// (trace|debug|info|warn|error|off), default warn.
void init_logging();

}  // namespace docstream
