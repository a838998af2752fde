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
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace docstream {

// FNV-1a, 64 bit. Used for seeds, trigram buckets and file fingerprints, so
// the value must never change between releases.
std::uint64_t stable_hash(std::string_view bytes);

// Derives a child seed from a parent seed and a namespace path. Every
// random stream in the pipeline is obtained this way so that a session can
// be replayed without replaying the sessions before it.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view ns,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 with portable sampling helpers. The std distributions are
// implementation-defined, so none of them are used here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  double normal();

  // k distinct indices from [0, n) in sampled order (partial Fisher-Yates).
  std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k);

  // Index drawn from a discrete distribution given by probabilities.
  std::size_t categorical(std::span<const double> probs);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace docstream
