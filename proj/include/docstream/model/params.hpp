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

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "docstream/common/rng.hpp"
#include "docstream/corpus/task.hpp"
#include "docstream/kernels/matrix.hpp"

namespace docstream {

struct ModelConfig {
  static constexpr std::size_t kFfnMultiplier = 4;

  std::size_t d_model = 64;
  std::size_t num_heads = 4;
  std::size_t num_layers = 2;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 128;

  std::size_t d_ffn() const { return kFfnMultiplier * d_model; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct AdapterConfig {
  std::size_t rank = 8;
  bool internal_residual = true;
  bool zero_init_up = true;

  void validate(const ModelConfig& model) const;
  bool operator==(const AdapterConfig&) const = default;
};

struct Tensor {
  Matrix value;
  bool frozen = false;

  bool operator==(const Tensor&) const = default;
};

// Named tensors. Backbone names start with "embed.", "enc." or "dec.";
// adapter tensors live under "adapter.<task>.".
class ParameterStore {
 public:
  void add(const std::string& name, Matrix value, bool frozen = false);
  bool has(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(std::string_view prefix) const;
  std::vector<std::string> backbone_names() const;

  void set_frozen_prefix(std::string_view prefix, bool frozen);
  void set_backbone_frozen(bool frozen);
  void erase_prefix(std::string_view prefix);
  // Copies every tensor under prefix from other, replacing existing ones.
  void copy_prefix_from(const ParameterStore& other, std::string_view prefix);

  // Rounds every value through float, the precision checkpoints store.
  void snap_to_f32();

  std::size_t size() const { return tensors_.size(); }
  std::size_t parameter_count() const;
  const std::map<std::string, Tensor, std::less<>>& tensors() const { return tensors_; }

  bool operator==(const ParameterStore&) const = default;

 private:
  std::map<std::string, Tensor, std::less<>> tensors_;
};

bool is_backbone_name(std::string_view name);
std::string adapter_prefix(TaskId task);

// Sub-layers that carry an adapter, as "<stack>.<layer>.<sublayer>".
std::vector<std::string> adapter_sites(const ModelConfig& cfg);

// Scaled normal initialisation of the whole backbone, layer norms at
// scale 1 / shift 0.
void init_backbone(ParameterStore& store, const ModelConfig& cfg, Rng& rng);

// (Re)creates the adapter of task. W_down is N(0, 1/d), W_up is zero when
// zero_init_up, N(0, 1/r) otherwise.
void init_adapter(ParameterStore& store, const ModelConfig& cfg, const AdapterConfig& acfg,
                  TaskId task, Rng& rng);

}  // namespace docstream
