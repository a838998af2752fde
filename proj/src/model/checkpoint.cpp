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

#include "docstream/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <json.hpp>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"

namespace docstream {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename U>
U get_le(const std::string& in, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_checkpoint(const ParameterStore& store, const std::string& meta_json) {
  nlohmann::json manifest;
  manifest["dtype"] = "f32";
  manifest["meta"] = nlohmann::json::parse(meta_json);
  auto& list = manifest["tensors"];
  list = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : store.tensors()) {
    list.push_back({{"name", name},
                    {"shape", {t.value.rows, t.value.cols}},
                    {"frozen", t.frozen},
                    {"offset", offset}});
    offset += 4 * t.value.size();
  }
  const std::string header = manifest.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, header.size());
  out += header;
  out.reserve(out.size() + offset);
  for (const auto& [name, t] : store.tensors()) {
    for (double v : t.value.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

ParameterStore decode_checkpoint(const std::string& bytes, std::string* meta_json) {
  const std::size_t fixed = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < fixed || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("not a checkpoint file");
  }
  const auto version = get_le<std::uint32_t>(bytes, sizeof(kMagic));
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, sizeof(kMagic) + 4);
  if (header_len > bytes.size() - fixed) throw ValidationError("truncated checkpoint header");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(fixed, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
  if (manifest.value("dtype", "") != "f32") throw ValidationError("checkpoint dtype must be f32");
  const std::size_t payload = fixed + header_len;

  ParameterStore store;
  for (const auto& entry : manifest.at("tensors")) {
    const auto rows = entry.at("shape").at(0).get<std::size_t>();
    const auto cols = entry.at("shape").at(1).get<std::size_t>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    if (payload + offset + 4 * rows * cols > bytes.size()) {
      throw ValidationError("truncated checkpoint payload");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.data[i] = static_cast<double>(
          std::bit_cast<float>(get_le<std::uint32_t>(bytes, payload + offset + 4 * i)));
    }
    store.add(entry.at("name").get<std::string>(), std::move(m), entry.at("frozen").get<bool>());
  }
  if (meta_json) *meta_json = manifest.at("meta").dump();
  return store;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path,
                     const std::string& meta_json) {
  write_file_atomic(path, encode_checkpoint(store, meta_json));
}

ParameterStore load_checkpoint(const std::filesystem::path& path, std::string* meta_json) {
  return decode_checkpoint(read_file(path), meta_json);
}

}  // namespace docstream
