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

#include "docstream/model/params.hpp"

namespace docstream {

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double warmup_ratio = 0.1;
  // Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;

  void validate() const;
};

// Adam with decoupled weight decay, linear warmup over warmup_ratio of
// total_steps, then linear decay.
class AdamW {
 public:
  AdamW(const OptimizerConfig& cfg, std::size_t total_steps);

  double lr_at(std::size_t step) const;

  // Updates every unfrozen tensor that has a gradient; frozen tensors are
  // never written. Throws DivergenceError on non-finite gradients.
  void step(ParameterStore& store, std::map<std::string, Matrix>& grads);

  std::size_t steps_taken() const { return steps_; }

 private:
  struct Moments {
    Matrix m, v;
  };
  OptimizerConfig cfg_;
  std::size_t total_;
  std::size_t warmup_;
  std::size_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

// Scales grads in place so their global L2 norm is at most max_norm;
// returns the norm before clipping.
double clip_grad_norm(std::map<std::string, Matrix>& grads, double max_norm);

}  // namespace docstream
