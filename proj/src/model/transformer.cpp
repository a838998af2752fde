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

#include "docstream/model/transformer.hpp"

#include <cmath>
#include <numeric>

#include "docstream/common/error.hpp"

namespace docstream {

ad::Var multi_head_attention(ad::Tape& t, ad::Var h_q, ad::Var h_kv, const AttentionWeights& w,
                             std::size_t heads, bool causal) {
  if (t.value(h_q).cols != t.value(w.q).rows || t.value(h_kv).cols != t.value(w.k).rows) {
    throw Error("multi_head_attention: input width does not match projections");
  }
  const ad::Var q = ad::matmul(t, h_q, w.q);
  const ad::Var k = ad::matmul(t, h_kv, w.k);
  const ad::Var v = ad::matmul(t, h_kv, w.v);
  return ad::matmul(t, ad::attention(t, q, k, v, heads, causal), w.o);
}

ad::Var feed_forward(ad::Tape& t, ad::Var h, const FfnWeights& w) {
  const ad::Var hidden = ad::gelu(t, ad::add_row(t, ad::matmul(t, h, w.w1), w.b1));
  return ad::add_row(t, ad::matmul(t, hidden, w.w2), w.b2);
}

ad::Var rcln(ad::Tape& t, ad::Var h, ad::Var s, const LayerNormWeights& ln) {
  return ad::layer_norm(t, ad::add(t, s, h), ln.scale, ln.shift);
}

ad::Var adapter_apply(ad::Tape& t, ad::Var s, const AdapterWeights& w, const AdapterConfig& cfg) {
  const ad::Var core = ad::matmul(t, ad::matmul(t, s, w.down), w.up);
  return cfg.internal_residual ? ad::add(t, s, core) : core;
}

ad::Var inside_sublayer(ad::Tape& t, ad::Var h, ad::Var s, const AdapterWeights* adapter,
                        const AdapterConfig& cfg, const LayerNormWeights& ln) {
  if (adapter == nullptr) return rcln(t, h, s, ln);
  return rcln(t, h, adapter_apply(t, s, *adapter, cfg), ln);
}

Seq2Seq::Seq2Seq(ad::Tape& tape, const ParameterStore& store, const ModelConfig& cfg,
                 const AdapterConfig& acfg, std::optional<TaskId> adapter)
    : tape_(tape), store_(store), cfg_(cfg), acfg_(acfg), adapter_(adapter) {
  cfg_.validate();
  if (adapter_ && !store_.has(adapter_prefix(*adapter_) + adapter_sites(cfg_).front() + ".down")) {
    throw Error("no adapter stored for task " + std::string(task_name(*adapter_)));
  }
}

ad::Var Seq2Seq::param(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Tensor& tensor = store_.at(name);
  const ad::Var v = tape_.external(tensor.value, !tensor.frozen);
  bound_.emplace(name, v);
  return v;
}

ad::Var Seq2Seq::embed(std::span<const TokenId> ids) {
  if (ids.empty()) throw Error("cannot embed an empty sequence");
  if (ids.size() > cfg_.max_positions) {
    throw ValidationError("sequence of " + std::to_string(ids.size()) +
                          " tokens exceeds max_positions " + std::to_string(cfg_.max_positions));
  }
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
      throw ValidationError("token id " + std::to_string(id) + " outside the vocabulary");
    }
  }
  std::vector<int> positions(ids.size());
  std::iota(positions.begin(), positions.end(), 0);
  return ad::add(tape_, ad::gather_rows(tape_, param("embed.tokens"), ids),
                 ad::gather_rows(tape_, param("embed.positions"), positions));
}

AttentionWeights Seq2Seq::attention_weights(const std::string& prefix) {
  return {param(prefix + ".q"), param(prefix + ".k"), param(prefix + ".v"), param(prefix + ".o")};
}

FfnWeights Seq2Seq::ffn_weights(const std::string& prefix) {
  return {param(prefix + ".w1"), param(prefix + ".b1"), param(prefix + ".w2"),
          param(prefix + ".b2")};
}

LayerNormWeights Seq2Seq::ln_weights(const std::string& prefix) {
  return {param(prefix + ".scale"), param(prefix + ".shift")};
}

std::optional<AdapterWeights> Seq2Seq::adapter_weights(const std::string& site) {
  if (!adapter_) return std::nullopt;
  const std::string p = adapter_prefix(*adapter_) + site;
  return AdapterWeights{param(p + ".down"), param(p + ".up")};
}

ad::Var Seq2Seq::wrap(const std::string& site, ad::Var h, ad::Var s) {
  const auto adapter = adapter_weights(site);
  return inside_sublayer(tape_, h, s, adapter ? &*adapter : nullptr, acfg_, ln_weights(site + "_ln"));
}

ad::Var Seq2Seq::encode(std::span<const TokenId> query) {
  ad::Var h = embed(query);
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    h = wrap(p + "self_attn", h,
             multi_head_attention(tape_, h, h, attention_weights(p + "self_attn"), cfg_.num_heads,
                                  false));
    h = wrap(p + "ffn", h, feed_forward(tape_, h, ffn_weights(p + "ffn")));
  }
  return h;
}

ad::Var Seq2Seq::decode(ad::Var memory, std::span<const TokenId> decoder_input) {
  ad::Var h = embed(decoder_input);
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    h = wrap(p + "self_attn", h,
             multi_head_attention(tape_, h, h, attention_weights(p + "self_attn"), cfg_.num_heads,
                                  true));
    h = wrap(p + "cross_attn", h,
             multi_head_attention(tape_, h, memory, attention_weights(p + "cross_attn"),
                                  cfg_.num_heads, false));
    h = wrap(p + "ffn", h, feed_forward(tape_, h, ffn_weights(p + "ffn")));
  }
  return h;
}

ad::Var Seq2Seq::logits(ad::Var hidden) {
  return ad::matmul_nt(tape_, hidden, param("embed.tokens"));
}

std::map<std::string, Matrix> Seq2Seq::gradients() const {
  std::map<std::string, Matrix> out;
  for (const auto& [name, v] : bound_) {
    if (!tape_.requires_grad(v)) continue;
    const Matrix& g = tape_.grad(v);
    out.emplace(name, g.size() == 0 ? Matrix(tape_.value(v).rows, tape_.value(v).cols) : g);
  }
  return out;
}

std::optional<TaskId> active_adapter(const ParameterStore& store, std::optional<TaskId> task) {
  if (!task) return std::nullopt;
  if (store.names_with_prefix(adapter_prefix(*task)).empty()) return std::nullopt;
  return task;
}

LossResult seq2seq_loss(const ParameterStore& store, const ModelConfig& cfg,
                        const AdapterConfig& acfg, std::optional<TaskId> adapter,
                        std::span<const TokenId> query, std::span<const TokenId> target,
                        double label_smoothing, bool want_grads) {
  if (target.size() < 2 || target.front() != kBosId || target.back() != kEosId) {
    throw ValidationError("target must be wrapped in [BOS] ... [EOS]");
  }
  ad::Tape tape(want_grads);
  Seq2Seq net(tape, store, cfg, acfg, adapter);
  const ad::Var memory = net.encode(query);
  const auto decoder_input = target.first(target.size() - 1);
  const auto labels = target.subspan(1);
  const ad::Var loss =
      ad::cross_entropy(tape, net.logits(net.decode(memory, decoder_input)), labels, label_smoothing);
  LossResult result;
  result.loss = tape.value(loss).data[0];
  result.tokens = labels.size();
  if (!std::isfinite(result.loss)) throw DivergenceError("non-finite loss");
  if (want_grads) {
    tape.backward(loss);
    result.grads = net.gradients();
  }
  return result;
}

Matrix forward_logits(const ParameterStore& store, const ModelConfig& cfg,
                      const AdapterConfig& acfg, std::optional<TaskId> adapter,
                      std::span<const TokenId> query, std::span<const TokenId> decoder_input) {
  ad::Tape tape(false);
  Seq2Seq net(tape, store, cfg, acfg, adapter);
  return tape.value(net.logits(net.decode(net.encode(query), decoder_input)));
}

Inference::Inference(const ParameterStore& store, const ModelConfig& cfg,
                     const AdapterConfig& acfg, std::optional<TaskId> adapter)
    : store_(store), cfg_(cfg), acfg_(acfg), adapter_(adapter) {}

Matrix Inference::encode(std::span<const TokenId> query) const {
  ad::Tape tape(false);
  Seq2Seq net(tape, store_, cfg_, acfg_, adapter_);
  return tape.value(net.encode(query));
}

std::vector<double> Inference::next_log_probs(const Matrix& memory,
                                              std::span<const TokenId> prefix) const {
  std::vector<TokenId> input;
  input.reserve(prefix.size() + 1);
  input.push_back(kBosId);
  input.insert(input.end(), prefix.begin(), prefix.end());
  ad::Tape tape(false);
  Seq2Seq net(tape, store_, cfg_, acfg_, adapter_);
  const ad::Var mem = tape.external(memory, false);
  const ad::Var hidden = net.decode(mem, input);
  const ad::Var last = ad::slice_rows(tape, hidden, input.size() - 1, 1);
  const Matrix& logits = tape.value(net.logits(last));
  std::vector<double> out(logits.cols);
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits.data) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits.data) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = logits.data[c] - log_z;
  return out;
}

}  // namespace docstream
