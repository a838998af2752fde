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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "docstream/model/autodiff.hpp"
#include "docstream/model/params.hpp"
#include "docstream/model/tokenizer.hpp"

// Post-LN encoder-decoder with output projection tied to the token
// embeddings. Every sub-layer S is wrapped as LN(Adapter(S(h)) + h) when a
// task adapter is active and as LN(S(h) + h) otherwise.
namespace docstream {

struct AttentionWeights {
  ad::Var q, k, v, o;
};
struct FfnWeights {
  ad::Var w1, b1, w2, b2;
};
struct LayerNormWeights {
  ad::Var scale, shift;
};
struct AdapterWeights {
  ad::Var down, up;
};

// h_q: n x d; h_kv: m x d. Self-attention passes the same var twice.
ad::Var multi_head_attention(ad::Tape& t, ad::Var h_q, ad::Var h_kv, const AttentionWeights& w,
                             std::size_t heads, bool causal);
// GELU(h W1 + b1) W2 + b2
ad::Var feed_forward(ad::Tape& t, ad::Var h, const FfnWeights& w);
// LN(s + h)
ad::Var rcln(ad::Tape& t, ad::Var h, ad::Var s, const LayerNormWeights& ln);
// (s W_down) W_up, plus s when internal_residual.
ad::Var adapter_apply(ad::Tape& t, ad::Var s, const AdapterWeights& w, const AdapterConfig& cfg);
// LN(Adapter(s) + h); plain rcln when adapter is null.
ad::Var inside_sublayer(ad::Tape& t, ad::Var h, ad::Var s, const AdapterWeights* adapter,
                        const AdapterConfig& cfg, const LayerNormWeights& ln);

// Builds the network on a tape. Store tensors are bound lazily without
// copying, each at most once; frozen ones never require a gradient.
class Seq2Seq {
 public:
  Seq2Seq(ad::Tape& tape, const ParameterStore& store, const ModelConfig& cfg,
          const AdapterConfig& acfg, std::optional<TaskId> adapter);

  ad::Var encode(std::span<const TokenId> query);
  // Decoder hidden states for the (BOS-prefixed) decoder input.
  ad::Var decode(ad::Var memory, std::span<const TokenId> decoder_input);
  ad::Var logits(ad::Var hidden);

  // Gradients of the bound, unfrozen tensors after tape.backward().
  std::map<std::string, Matrix> gradients() const;

 private:
  ad::Var param(const std::string& name);
  ad::Var embed(std::span<const TokenId> ids);
  AttentionWeights attention_weights(const std::string& prefix);
  FfnWeights ffn_weights(const std::string& prefix);
  LayerNormWeights ln_weights(const std::string& prefix);
  std::optional<AdapterWeights> adapter_weights(const std::string& site);
  ad::Var wrap(const std::string& site, ad::Var h, ad::Var s);

  ad::Tape& tape_;
  const ParameterStore& store_;
  ModelConfig cfg_;
  AdapterConfig acfg_;
  std::optional<TaskId> adapter_;
  std::unordered_map<std::string, ad::Var> bound_;
};

// The adapter to activate for task: the task itself when store holds its
// adapter, none otherwise.
std::optional<TaskId> active_adapter(const ParameterStore& store, std::optional<TaskId> task);

struct LossResult {
  double loss = 0.0;        // mean over target tokens
  std::size_t tokens = 0;   // number of predicted tokens
  std::map<std::string, Matrix> grads;
};

// Teacher-forced token cross-entropy of target (wrapped in BOS ... EOS)
// given query. Throws DivergenceError on a non-finite loss.
LossResult seq2seq_loss(const ParameterStore& store, const ModelConfig& cfg,
                        const AdapterConfig& acfg, std::optional<TaskId> adapter,
                        std::span<const TokenId> query, std::span<const TokenId> target,
                        double label_smoothing = 0.0, bool want_grads = true);

// Logits for every decoder position (no gradients).
Matrix forward_logits(const ParameterStore& store, const ModelConfig& cfg,
                      const AdapterConfig& acfg, std::optional<TaskId> adapter,
                      std::span<const TokenId> query, std::span<const TokenId> decoder_input);

// Gradient-free forward for decoding: encode once, then score prefixes.
class Inference {
 public:
  Inference(const ParameterStore& store, const ModelConfig& cfg, const AdapterConfig& acfg,
            std::optional<TaskId> adapter);

  Matrix encode(std::span<const TokenId> query) const;
  // Log-probabilities of the next token after BOS + prefix.
  std::vector<double> next_log_probs(const Matrix& memory, std::span<const TokenId> prefix) const;

  const ModelConfig& config() const { return cfg_; }

 private:
  const ParameterStore& store_;
  ModelConfig cfg_;
  AdapterConfig acfg_;
  std::optional<TaskId> adapter_;
};

}  // namespace docstream
