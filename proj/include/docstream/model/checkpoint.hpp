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
#include <string>

#include "docstream/model/params.hpp"

// Layout: 8-byte magic "DSCKPT\0\0", u32 version, u64 manifest length, the
// JSON manifest (tensor names, shapes, dtype, frozen flags, byte offsets,
// plus caller metadata), then the tensors as little-endian float32 in
// manifest order. Equal stores give identical bytes.
namespace docstream {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ParameterStore& store, const std::string& meta_json = "{}");
ParameterStore decode_checkpoint(const std::string& bytes, std::string* meta_json = nullptr);

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path,
                     const std::string& meta_json = "{}");
ParameterStore load_checkpoint(const std::filesystem::path& path, std::string* meta_json = nullptr);

}  // namespace docstream
