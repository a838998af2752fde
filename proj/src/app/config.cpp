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

#include "docstream/app/config.hpp"

#include <set>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"

namespace docstream {

using nlohmann::json;

namespace {

// Reads keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config: " + name_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: " + where(key) + " has the wrong type");
    }
  }

  void get_size(const char* key, std::size_t& out) {
    std::int64_t v = static_cast<std::int64_t>(out);
    get(key, v);
    if (v < 0) throw ValidationError("config: " + where(key) + " must be >= 0");
    out = static_cast<std::size_t>(v);
  }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ValidationError("config: unknown key " + where(key));
    }
  }

 private:
  std::string where(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_optimizer(Section& s, OptimizerConfig& o) {
  s.get("lr", o.lr);
  s.get("beta1", o.beta1);
  s.get("beta2", o.beta2);
  s.get("eps", o.eps);
  s.get("weight_decay", o.weight_decay);
  s.get("warmup_ratio", o.warmup_ratio);
  s.get("clip_norm", o.clip_norm);
}

void read_generator_objective(Section s, GeneratorConfig& g) {
  if (s.has("l")) {
    std::string all;
    try {
      s.get("l", g.l);
    } catch (const ValidationError&) {
      s.get("l", all);
      if (all != "all") throw ValidationError("config: generator l must be an integer or \"all\"");
      g.l = kAllItems;
    }
  }
  s.get("n", g.n);
  s.get("k_relations", g.k_relations);
  s.finish();
}

json objective_json(const GeneratorConfig& g) {
  json j;
  if (g.l == kAllItems) {
    j["l"] = "all";
  } else {
    j["l"] = g.l;
  }
  j["n"] = g.n;
  j["k_relations"] = g.k_relations;
  return j;
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"lr", o.lr},           {"beta1", o.beta1},
          {"beta2", o.beta2},     {"eps", o.eps},
          {"weight_decay", o.weight_decay}, {"warmup_ratio", o.warmup_ratio},
          {"clip_norm", o.clip_norm}};
}

json phase_json(const PhaseConfig& p) {
  json j = optimizer_json(p.optimizer);
  j["epochs"] = p.epochs;
  j["max_steps"] = p.max_steps;
  j["max_tokens_per_batch"] = p.max_tokens_per_batch;
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

constexpr std::array<std::pair<const char*, Objective>, 8> kObjectiveKeys = {{
    {"iss", Objective::iss},
    {"lps", Objective::lps},
    {"hip", Objective::hip},
    {"fact_checking", Objective::fact_checking},
    {"entity_linking", Objective::entity_linking},
    {"slot_filling", Objective::slot_filling},
    {"open_qa", Objective::open_qa},
    {"dialogue", Objective::dialogue},
}};

GeneratorConfig& objective_slot(GeneratorSuite& s, Objective o) {
  switch (o) {
    case Objective::iss: return s.iss;
    case Objective::lps: return s.lps;
    case Objective::hip: return s.hip;
    case Objective::fact_checking: return s.fact_checking;
    case Objective::entity_linking: return s.entity_linking;
    case Objective::slot_filling: return s.slot_filling;
    case Objective::open_qa: return s.open_qa;
    case Objective::dialogue: return s.dialogue;
  }
  throw Error("unknown objective");
}

}  // namespace

void RunConfig::validate() const {
  ModelConfig m = model;
  if (m.vocab_size == 0) m.vocab_size = 1;
  m.validate();
  adapter.validate(m);
  trainer.validate();
  rehearsal.validate();
  decode.validate();
  for (const auto& [key, o] : kObjectiveKeys) generator.for_objective(o).validate();
  if (trainer.max_input_tokens > model.max_positions ||
      trainer.max_target_tokens + 1 > model.max_positions) {
    throw ValidationError("config: trainer input/target budgets exceed model.max_positions");
  }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Section root(j, "");
  root.get("seed", cfg.seed);
  if (root.has("mode")) {
    std::string mode;
    root.get("mode", mode);
    cfg.mode = parse_mode(mode);
  }
  if (root.has("model")) {
    Section s = root.sub("model");
    s.get_size("d_model", cfg.model.d_model);
    s.get_size("num_heads", cfg.model.num_heads);
    s.get_size("num_layers", cfg.model.num_layers);
    s.get_size("max_positions", cfg.model.max_positions);
    if (s.has("adapter")) {
      Section a = s.sub("adapter");
      a.get_size("rank", cfg.adapter.rank);
      a.get("internal_residual", cfg.adapter.internal_residual);
      a.get("zero_init_up", cfg.adapter.zero_init_up);
      a.finish();
    }
    s.finish();
  }
  if (root.has("generator")) {
    Section s = root.sub("generator");
    std::array<double, 5> o_dist{};
    bool has_o = s.has("o_distribution");
    std::vector<std::string> wh;
    bool has_wh = s.has("interrogatives");
    int per_doc = -1;
    s.get("o_distribution", o_dist);
    s.get("interrogatives", wh);
    s.get("pairs_per_doc", per_doc);
    for (const auto& [key, o] : kObjectiveKeys) {
      GeneratorConfig& g = objective_slot(cfg.generator, o);
      if (has_o) g.o_distribution = o_dist;
      if (has_wh) g.interrogatives = wh;
      if (per_doc >= 0) g.pairs_per_doc = per_doc;
      if (s.has(key)) read_generator_objective(s.sub(key), g);
    }
    s.finish();
  }
  if (root.has("trainer")) {
    Section s = root.sub("trainer");
    for (auto [key, phase] : {std::pair{"pretrain", &cfg.trainer.pretrain},
                              std::pair{"finetune", &cfg.trainer.finetune},
                              std::pair{"continual", &cfg.trainer.continual}}) {
      if (!s.has(key)) continue;
      Section p = s.sub(key);
      p.get("epochs", phase->epochs);
      p.get_size("max_steps", phase->max_steps);
      p.get_size("max_tokens_per_batch", phase->max_tokens_per_batch);
      read_optimizer(p, phase->optimizer);
      p.finish();
    }
    s.get_size("max_tokens_per_batch", cfg.trainer.max_tokens_per_batch);
    s.get_size("max_input_tokens", cfg.trainer.max_input_tokens);
    s.get_size("max_target_tokens", cfg.trainer.max_target_tokens);
    s.get("label_smoothing", cfg.trainer.label_smoothing);
    s.get("parallel_tasks", cfg.trainer.parallel_tasks);
    s.finish();
  }
  if (root.has("rehearsal")) {
    Section s = root.sub("rehearsal");
    s.get_size("n_per_doc", cfg.rehearsal.n_per_doc);
    s.get_size("k_clusters", cfg.rehearsal.k_clusters);
    s.get("max_iters", cfg.rehearsal.max_iters);
    s.get_size("embedding_dim", cfg.rehearsal.embedding_dim);
    s.get("dump_clusters", cfg.rehearsal.dump_clusters);
    s.finish();
  }
  if (root.has("decode")) {
    Section s = root.sub("decode");
    s.get_size("beam_width", cfg.decode.beam_width);
    s.get_size("max_steps", cfg.decode.max_steps);
    s.get("allow_multi_docid", cfg.decode.allow_multi_docid);
    s.finish();
  }
  if (root.has("paths")) {
    Section s = root.sub("paths");
    std::string corpus, benchmark, out;
    s.get("corpus", corpus);
    s.get("benchmark", benchmark);
    s.get("out", out);
    cfg.paths.corpus = resolve(base_dir, corpus);
    cfg.paths.benchmark = resolve(base_dir, benchmark);
    cfg.paths.out = resolve(base_dir, out);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& cfg) {
  json gen;
  const GeneratorConfig& any = cfg.generator.for_objective(Objective::iss);
  gen["o_distribution"] = any.o_distribution;
  gen["interrogatives"] = any.interrogatives;
  gen["pairs_per_doc"] = any.pairs_per_doc;
  for (const auto& [key, o] : kObjectiveKeys) gen[key] = objective_json(cfg.generator.for_objective(o));
  return {
      {"seed", cfg.seed},
      {"mode", std::string(mode_name(cfg.mode))},
      {"model",
       {{"d_model", cfg.model.d_model},
        {"num_heads", cfg.model.num_heads},
        {"num_layers", cfg.model.num_layers},
        {"max_positions", cfg.model.max_positions},
        {"adapter",
         {{"rank", cfg.adapter.rank},
          {"internal_residual", cfg.adapter.internal_residual},
          {"zero_init_up", cfg.adapter.zero_init_up}}}}},
      {"generator", gen},
      {"trainer",
       {{"pretrain", phase_json(cfg.trainer.pretrain)},
        {"finetune", phase_json(cfg.trainer.finetune)},
        {"continual", phase_json(cfg.trainer.continual)},
        {"max_tokens_per_batch", cfg.trainer.max_tokens_per_batch},
        {"max_input_tokens", cfg.trainer.max_input_tokens},
        {"max_target_tokens", cfg.trainer.max_target_tokens},
        {"label_smoothing", cfg.trainer.label_smoothing},
        {"parallel_tasks", cfg.trainer.parallel_tasks}}},
      {"rehearsal",
       {{"n_per_doc", cfg.rehearsal.n_per_doc},
        {"k_clusters", cfg.rehearsal.k_clusters},
        {"max_iters", cfg.rehearsal.max_iters},
        {"embedding_dim", cfg.rehearsal.embedding_dim},
        {"dump_clusters", cfg.rehearsal.dump_clusters}}},
      {"decode",
       {{"beam_width", cfg.decode.beam_width},
        {"max_steps", cfg.decode.max_steps},
        {"allow_multi_docid", cfg.decode.allow_multi_docid}}},
      {"paths",
       {{"corpus", cfg.paths.corpus.string()},
        {"benchmark", cfg.paths.benchmark.string()},
        {"out", cfg.paths.out.string()}}},
  };
}

RunConfig large_scale_preset() {
  RunConfig cfg;
  cfg.model.d_model = 1024;
  cfg.model.num_heads = 16;
  cfg.model.num_layers = 12;
  cfg.model.max_positions = 1024;
  cfg.adapter.rank = 64;
  for (PhaseConfig* p : {&cfg.trainer.pretrain, &cfg.trainer.finetune}) {
    p->optimizer.lr = 3e-5;
    p->optimizer.weight_decay = 0.01;
    p->optimizer.clip_norm = 0.1;
  }
  cfg.trainer.pretrain.max_tokens_per_batch = 8192;
  cfg.trainer.finetune.max_tokens_per_batch = 4096;
  cfg.trainer.continual.optimizer.lr = 1e-5;
  cfg.trainer.max_tokens_per_batch = 8192;
  cfg.trainer.max_input_tokens = 384;
  cfg.trainer.label_smoothing = 0.1;
  cfg.rehearsal.k_clusters = 1024;
  cfg.rehearsal.max_iters = 20;
  cfg.decode.beam_width = 10;
  cfg.decode.max_steps = 15;
  return cfg;
}

}  // namespace docstream
