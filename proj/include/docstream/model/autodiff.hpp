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
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "docstream/kernels/matrix.hpp"

// Matrix-level reverse-mode differentiation. A Tape records every value an
// expression produces together with a closure that pushes the output
// gradient back to the inputs; backward() replays the closures in reverse.
namespace docstream::ad {

struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const { return id != kNone; }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  // Owned leaf.
  Var leaf(Matrix value, bool requires_grad = false);
  // Leaf that reads external storage without copying; the storage must
  // outlive the tape.
  Var external(const Matrix& storage, bool requires_grad);

  // Records an op output. fn is dropped when no parent needs a gradient.
  Var push(Matrix value, std::span<const Var> parents, BackwardFn fn);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  // Gradient of v after backward(); empty matrix when none flowed.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  // Adds g into the gradient of v (no-op when v does not require grad).
  void accumulate(Var v, const Matrix& g);
  // Mutable gradient buffer of v, zero-initialised on first use.
  Matrix& grad_buffer(Var v);

  // loss must be 1x1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix own;
    const Matrix* ext = nullptr;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

Var matmul(Tape& t, Var a, Var b);        // A * B
Var matmul_nt(Tape& t, Var a, Var b);     // A * B^T
Var add(Tape& t, Var a, Var b);           // same shape
Var add_row(Tape& t, Var a, Var bias);    // bias is 1 x cols, broadcast over rows
Var gelu(Tape& t, Var a);                 // exact erf form
Var layer_norm(Tape& t, Var x, Var scale, Var shift, double eps = 1e-5);
// Scaled dot-product attention with heads laid out as column blocks.
// q: n x d, k and v: m x d. causal masks key j > query i (needs n == m).
Var attention(Tape& t, Var q, Var k, Var v, std::size_t heads, bool causal);
Var gather_rows(Tape& t, Var table, std::span<const int> ids);
Var slice_rows(Tape& t, Var a, std::size_t start, std::size_t count);
// Mean token cross-entropy of logits (n x V) against targets, with label
// smoothing eps spread uniformly over the vocabulary. Returns 1 x 1.
Var cross_entropy(Tape& t, Var logits, std::span<const int> targets, double eps = 0.0);

}  // namespace docstream::ad
