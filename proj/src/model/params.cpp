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

#include "docstream/model/params.hpp"

#include <cmath>

#include "docstream/common/error.hpp"

namespace docstream {

void ModelConfig::validate() const {
  if (d_model == 0 || num_heads == 0 || num_layers == 0 || vocab_size == 0 ||
      max_positions == 0) {
    throw ValidationError("model: all dimensions must be >= 1");
  }
  if (d_model % num_heads != 0) {
    throw ValidationError("model: d_model " + std::to_string(d_model) +
                          " is not divisible by num_heads " + std::to_string(num_heads));
  }
}

void AdapterConfig::validate(const ModelConfig& model) const {
  if (rank < 1 || rank >= model.d_model) {
    throw ValidationError("adapter: rank must satisfy 1 <= rank < d_model, got " +
                          std::to_string(rank));
  }
}

void ParameterStore::add(const std::string& name, Matrix value, bool frozen) {
  tensors_[name] = Tensor{std::move(value), frozen};
}

bool ParameterStore::has(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }

const Tensor& ParameterStore::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("unknown parameter \"" + std::string(name) + "\"");
  return it->second;
}

Tensor& ParameterStore::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("unknown parameter \"" + std::string(name) + "\"");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, t] : tensors_) out.push_back(name);
  return out;
}

std::vector<std::string> ParameterStore::names_with_prefix(std::string_view prefix) const {
  std::vector<std::string> out;
  for (auto it = tensors_.lower_bound(prefix);
       it != tensors_.end() && std::string_view(it->first).starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

std::vector<std::string> ParameterStore::backbone_names() const {
  std::vector<std::string> out;
  for (const auto& [name, t] : tensors_) {
    if (is_backbone_name(name)) out.push_back(name);
  }
  return out;
}

void ParameterStore::set_frozen_prefix(std::string_view prefix, bool frozen) {
  for (auto& [name, t] : tensors_) {
    if (std::string_view(name).starts_with(prefix)) t.frozen = frozen;
  }
}

void ParameterStore::set_backbone_frozen(bool frozen) {
  for (auto& [name, t] : tensors_) {
    if (is_backbone_name(name)) t.frozen = frozen;
  }
}

void ParameterStore::erase_prefix(std::string_view prefix) {
  for (auto it = tensors_.begin(); it != tensors_.end();) {
    if (std::string_view(it->first).starts_with(prefix)) {
      it = tensors_.erase(it);
    } else {
      ++it;
    }
  }
}

void ParameterStore::copy_prefix_from(const ParameterStore& other, std::string_view prefix) {
  erase_prefix(prefix);
  for (const auto& name : other.names_with_prefix(prefix)) tensors_[name] = other.at(name);
}

void ParameterStore::snap_to_f32() {
  for (auto& [name, t] : tensors_) {
    for (double& v : t.value.data) v = static_cast<double>(static_cast<float>(v));
  }
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.value.size();
  return n;
}

bool is_backbone_name(std::string_view name) {
  return name.starts_with("embed.") || name.starts_with("enc.") || name.starts_with("dec.");
}

std::string adapter_prefix(TaskId task) {
  return "adapter." + std::string(task_name(task)) + ".";
}

std::vector<std::string> adapter_sites(const ModelConfig& cfg) {
  std::vector<std::string> sites;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string enc = "enc." + std::to_string(l) + ".";
    sites.push_back(enc + "self_attn");
    sites.push_back(enc + "ffn");
  }
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string dec = "dec." + std::to_string(l) + ".";
    sites.push_back(dec + "self_attn");
    sites.push_back(dec + "cross_attn");
    sites.push_back(dec + "ffn");
  }
  return sites;
}

namespace {

Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = stddev * rng.normal();
  return m;
}

void add_attention(ParameterStore& store, const std::string& prefix, std::size_t d, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (const char* w : {"q", "k", "v", "o"}) store.add(prefix + "." + w, normal_matrix(d, d, s, rng));
}

void add_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t d) {
  store.add(prefix + ".scale", Matrix(1, d, 1.0));
  store.add(prefix + ".shift", Matrix(1, d, 0.0));
}

void add_ffn(ParameterStore& store, const std::string& prefix, std::size_t d, std::size_t f,
             Rng& rng) {
  store.add(prefix + ".w1", normal_matrix(d, f, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  store.add(prefix + ".b1", Matrix(1, f));
  store.add(prefix + ".w2", normal_matrix(f, d, 1.0 / std::sqrt(static_cast<double>(f)), rng));
  store.add(prefix + ".b2", Matrix(1, d));
}

}  // namespace

void init_backbone(ParameterStore& store, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  store.add("embed.tokens", normal_matrix(cfg.vocab_size, d, s, rng));
  store.add("embed.positions", normal_matrix(cfg.max_positions, d, s, rng));
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    add_attention(store, p + "self_attn", d, rng);
    add_layer_norm(store, p + "self_attn_ln", d);
    add_ffn(store, p + "ffn", d, cfg.d_ffn(), rng);
    add_layer_norm(store, p + "ffn_ln", d);
  }
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    add_attention(store, p + "self_attn", d, rng);
    add_layer_norm(store, p + "self_attn_ln", d);
    add_attention(store, p + "cross_attn", d, rng);
    add_layer_norm(store, p + "cross_attn_ln", d);
    add_ffn(store, p + "ffn", d, cfg.d_ffn(), rng);
    add_layer_norm(store, p + "ffn_ln", d);
  }
}

void init_adapter(ParameterStore& store, const ModelConfig& cfg, const AdapterConfig& acfg,
                  TaskId task, Rng& rng) {
  acfg.validate(cfg);
  const std::string prefix = adapter_prefix(task);
  store.erase_prefix(prefix);
  const std::size_t d = cfg.d_model;
  const std::size_t r = acfg.rank;
  for (const auto& site : adapter_sites(cfg)) {
    store.add(prefix + site + ".down",
              normal_matrix(d, r, 1.0 / std::sqrt(static_cast<double>(d)), rng));
    store.add(prefix + site + ".up",
              acfg.zero_init_up
                  ? Matrix(r, d)
                  : normal_matrix(r, d, 1.0 / std::sqrt(static_cast<double>(r)), rng));
  }
}

}  // namespace docstream
