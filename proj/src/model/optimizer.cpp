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

#include "docstream/model/optimizer.hpp"

#include <cmath>

#include "docstream/common/error.hpp"

namespace docstream {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("trainer: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("trainer: Adam betas must lie in [0, 1)");
  }
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) {
    throw ValidationError("trainer: warmup_ratio must lie in [0, 1)");
  }
  if (weight_decay < 0.0 || clip_norm < 0.0 || !(eps > 0.0)) {
    throw ValidationError("trainer: weight_decay and clip_norm must be >= 0, eps > 0");
  }
}

AdamW::AdamW(const OptimizerConfig& cfg, std::size_t total_steps)
    : cfg_(cfg),
      total_(std::max<std::size_t>(total_steps, 1)),
      warmup_(static_cast<std::size_t>(std::floor(cfg.warmup_ratio * static_cast<double>(total_)))) {
  cfg_.validate();
}

double AdamW::lr_at(std::size_t step) const {
  if (step < warmup_) {
    return cfg_.lr * static_cast<double>(step + 1) / static_cast<double>(warmup_);
  }
  if (step >= total_) return cfg_.lr / static_cast<double>(total_ - warmup_);
  return cfg_.lr * static_cast<double>(total_ - step) / static_cast<double>(total_ - warmup_);
}

double clip_grad_norm(std::map<std::string, Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.data) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, g] : grads) {
      for (double& v : g.data) v *= s;
    }
  }
  return norm;
}

void AdamW::step(ParameterStore& store, std::map<std::string, Matrix>& grads) {
  for (const auto& [name, g] : grads) {
    for (double v : g.data) {
      if (!std::isfinite(v)) {
        throw DivergenceError("non-finite gradient for " + name + " at step " +
                              std::to_string(steps_));
      }
    }
  }
  if (cfg_.clip_norm > 0.0) clip_grad_norm(grads, cfg_.clip_norm);

  const double lr = lr_at(steps_);
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (const auto& [name, g] : grads) {
    Tensor& t = store.at(name);
    if (t.frozen) continue;
    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) {
      it->second.m = Matrix(g.rows, g.cols);
      it->second.v = Matrix(g.rows, g.cols);
    }
    Moments& mo = it->second;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const double gi = g.data[i];
      mo.m.data[i] = cfg_.beta1 * mo.m.data[i] + (1.0 - cfg_.beta1) * gi;
      mo.v.data[i] = cfg_.beta2 * mo.v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = mo.m.data[i] / bc1;
      const double vhat = mo.v.data[i] / bc2;
      double& w = t.value.data[i];
      w -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w);
    }
  }
}

}  // namespace docstream
