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

#include <json.hpp>

#include "docstream/decoder/trie.hpp"
#include "docstream/model/params.hpp"
#include "docstream/pseudoquery/generators.hpp"
#include "docstream/rehearsal/rehearsal.hpp"
#include "docstream/trainer/trainer.hpp"

namespace docstream {

struct PathsConfig {
  std::filesystem::path corpus;
  std::filesystem::path benchmark;  // directory written by build-benchmark
  std::filesystem::path out;
};

// The run configuration file is JSON with sections model, generator,
// trainer, rehearsal, decode and paths plus top-level seed and mode.
// Unknown keys are rejected so typos do not pass silently.
struct RunConfig {
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::corpusbrainpp;
  ModelConfig model;  // vocab_size is filled from the vocabulary
  AdapterConfig adapter;
  GeneratorSuite generator;
  TrainerConfig trainer;
  RehearsalConfig rehearsal;
  BeamConfig decode;
  PathsConfig paths;

  void validate() const;
};

// Relative paths resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

// Values used at full scale (BART-large sized model, 1024 clusters,
// 3e-5 / 1e-5 learning rates, 8192-token batches, 384-token inputs,
// label smoothing 0.1, clip 0.1).
RunConfig large_scale_preset();

}  // namespace docstream
