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

#include "docstream/trainer/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <exception>
#include <numeric>

#include "docstream/common/error.hpp"
#include "docstream/common/rng.hpp"
#include "docstream/model/transformer.hpp"

namespace docstream {

namespace {

constexpr std::array<std::pair<TrainMode, std::string_view>, 9> kModes = {{
    {TrainMode::corpusbrainpp, "corpusbrainpp"},
    {TrainMode::direct, "direct"},
    {TrainMode::sequential, "sequential"},
    {TrainMode::no_adapter_st, "no_adapter_st"},
    {TrainMode::no_adapter_mt, "no_adapter_mt"},
    {TrainMode::ori_pt, "ori_pt"},
    {TrainMode::random_rehearsal, "random_rehearsal"},
    {TrainMode::no_rehearsal, "no_rehearsal"},
    {TrainMode::individual, "individual"},
}};

constexpr std::array<Objective, 3> kBackboneObjectives = {Objective::iss, Objective::lps,
                                                          Objective::hip};

void append_log(std::vector<LogEntry>& log, int session, const std::string& phase,
                const std::string& scope, const PhaseStats& stats) {
  for (std::size_t s = 0; s < stats.losses.size(); ++s) {
    log.push_back({session, phase, scope, s, stats.losses[s]});
  }
}

void add_scaled(std::map<std::string, Matrix>& acc, std::map<std::string, Matrix>& grads,
                double w) {
  for (auto& [name, g] : grads) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      for (double& v : g.data) v *= w;
      acc.emplace(name, std::move(g));
    } else {
      auto& dst = it->second.data;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * g.data[i];
    }
  }
}

std::vector<const Document*> resolve_docs(const Corpus& corpus, const std::vector<Docid>& ids) {
  std::vector<const Document*> docs;
  docs.reserve(ids.size());
  for (const Docid& id : ids) {
    const Document* d = corpus.find(id);
    if (d == nullptr) throw Error("document \"" + id.str() + "\" is not in the corpus");
    docs.push_back(d);
  }
  return docs;
}

std::size_t task_index(TaskId task) {
  return static_cast<std::size_t>(std::find(kAllTasks.begin(), kAllTasks.end(), task) -
                                  kAllTasks.begin());
}

// Backbone tensors of store with the given adapter added.
ParameterStore adapter_workspace(const ParameterStore& store, const ParameterStore& adapter) {
  ParameterStore work;
  for (const auto& name : store.backbone_names()) {
    const Tensor& t = store.at(name);
    work.add(name, t.value, t.frozen);
  }
  for (const auto& [name, t] : adapter.tensors()) work.add(name, t.value, t.frozen);
  return work;
}

template <typename Fn>
void for_each_task(bool parallel, Fn&& fn) {
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(kAllTasks.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(docstream_task_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string_view mode_name(TrainMode mode) {
  for (const auto& [m, name] : kModes) {
    if (m == mode) return name;
  }
  return "?";
}

TrainMode parse_mode(std::string_view name) {
  for (const auto& [m, n] : kModes) {
    if (n == name) return m;
  }
  std::string valid;
  for (const auto& [m, n] : kModes) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw ValidationError("unknown mode \"" + std::string(name) + "\"; valid modes: " + valid);
}

bool mode_uses_adapters(TrainMode mode) {
  switch (mode) {
    case TrainMode::corpusbrainpp:
    case TrainMode::ori_pt:
    case TrainMode::random_rehearsal:
    case TrainMode::no_rehearsal:
    case TrainMode::individual:
      return true;
    default:
      return false;
  }
}

void TrainerConfig::validate() const {
  for (const PhaseConfig* p : {&pretrain, &finetune, &continual}) {
    if (p->epochs < 0) throw ValidationError("trainer: epochs must be >= 0");
    p->optimizer.validate();
  }
  if (max_tokens_per_batch < 1) throw ValidationError("trainer: max_tokens_per_batch must be >= 1");
  if (max_input_tokens < 1) throw ValidationError("trainer: max_input_tokens must be >= 1");
  if (max_target_tokens < 2) throw ValidationError("trainer: max_target_tokens must be >= 2");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ValidationError("trainer: label_smoothing must lie in [0, 1)");
  }
}

std::optional<TrainExample> make_example(const Vocabulary& vocab,
                                         const std::vector<std::string>& query_tokens,
                                         const std::vector<Docid>& targets,
                                         const TrainerConfig& cfg) {
  TrainExample ex;
  ex.input = encode_input(vocab, query_tokens, cfg.max_input_tokens);
  if (ex.input.empty()) return std::nullopt;
  ex.target.push_back(kBosId);
  std::size_t generated = 0;  // tokens after BOS, EOS excluded
  for (const Docid& d : targets) {
    const auto ids = vocab.encode(d.str());
    if (ids.empty()) return std::nullopt;
    const std::size_t extra = ids.size() + (generated > 0 ? 1 : 0);
    if (generated + extra + 1 > cfg.max_target_tokens) break;
    if (generated > 0) ex.target.push_back(kSepId);
    ex.target.insert(ex.target.end(), ids.begin(), ids.end());
    generated += extra;
  }
  if (generated == 0) return std::nullopt;
  ex.target.push_back(kEosId);
  return ex;
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<TrainExample>& examples,
                                                   const std::vector<std::size_t>& order,
                                                   std::size_t max_tokens) {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  std::size_t tokens = 0;
  for (std::size_t idx : order) {
    const std::size_t n = examples[idx].input.size() + examples[idx].target.size();
    if (!cur.empty() && tokens + n > max_tokens) {
      batches.push_back(std::move(cur));
      cur.clear();
      tokens = 0;
    }
    cur.push_back(idx);
    tokens += n;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

PhaseStats train_examples(ParameterStore& store, const ModelConfig& model,
                          const AdapterConfig& acfg, std::optional<TaskId> adapter,
                          const std::vector<TrainExample>& examples, const PhaseConfig& phase,
                          const TrainerConfig& cfg, std::uint64_t seed) {
  PhaseStats stats;
  if (examples.empty() || phase.epochs == 0) return stats;

  std::vector<std::vector<std::size_t>> schedule;
  for (int epoch = 0; epoch < phase.epochs; ++epoch) {
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "trainer.shuffle", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    const std::size_t budget =
        phase.max_tokens_per_batch > 0 ? phase.max_tokens_per_batch : cfg.max_tokens_per_batch;
    for (auto& b : make_batches(examples, order, budget)) {
      schedule.push_back(std::move(b));
    }
  }
  if (phase.max_steps > 0 && schedule.size() > phase.max_steps) schedule.resize(phase.max_steps);

  AdamW opt(phase.optimizer, schedule.size());
  for (const auto& batch : schedule) {
    std::size_t batch_tokens = 0;
    for (std::size_t idx : batch) batch_tokens += examples[idx].target.size() - 1;
    std::map<std::string, Matrix> grads;
    double loss = 0.0;
    try {
      for (std::size_t idx : batch) {
        LossResult r = seq2seq_loss(store, model, acfg, adapter, examples[idx].input,
                                    examples[idx].target, cfg.label_smoothing);
        const double w = static_cast<double>(r.tokens) / static_cast<double>(batch_tokens);
        loss += w * r.loss;
        add_scaled(grads, r.grads, w);
      }
      opt.step(store, grads);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at training step " +
                            std::to_string(stats.steps) + " (last loss " +
                            (stats.losses.empty() ? std::string("n/a")
                                                  : std::to_string(stats.losses.back())) +
                            ")");
    }
    stats.losses.push_back(loss);
    ++stats.steps;
  }
  return stats;
}

void TrainContext::validate() const {
  if (corpus == nullptr || plan == nullptr || vocab == nullptr) {
    throw Error("training context lacks corpus, plan or vocabulary");
  }
  model.validate();
  if (model.vocab_size != vocab->size()) {
    throw ValidationError("model vocab_size " + std::to_string(model.vocab_size) +
                          " differs from the vocabulary size " + std::to_string(vocab->size()));
  }
  adapter.validate(model);
  trainer.validate();
  if (trainer.max_input_tokens > model.max_positions ||
      trainer.max_target_tokens + 1 > model.max_positions) {
    throw ValidationError("trainer: input/target budgets exceed model max_positions");
  }
  rehearsal.validate();
}

std::uint64_t session_seed(std::uint64_t run_seed, int t) {
  return derive_seed(run_seed, "trainer.session", static_cast<std::uint64_t>(t));
}

std::vector<TrainExample> objective_examples(const TrainContext& ctx,
                                             const std::vector<Docid>& docs, Objective objective,
                                             std::uint64_t seed) {
  const auto pairs = generate_for_documents(resolve_docs(*ctx.corpus, docs), objective,
                                            ctx.generators, ctx.detector, seed);
  std::vector<TrainExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (auto ex = make_example(*ctx.vocab, p.query, p.targets, ctx.trainer)) {
      out.push_back(std::move(*ex));
    }
  }
  return out;
}

std::vector<TrainExample> query_examples(const TrainContext& ctx,
                                         const std::vector<QueryExample>& queries) {
  std::vector<TrainExample> out;
  for (const auto& q : queries) {
    const DatasetInfo* info = find_dataset(q.dataset);
    if (info != nullptr && !info->has_train_split) continue;
    if (auto ex = make_example(*ctx.vocab, tokenize_words(q.query_text), q.provenance, ctx.trainer)) {
      out.push_back(std::move(*ex));
    }
  }
  return out;
}

SessionState pretrain_backbone(const TrainContext& ctx) {
  ctx.validate();
  SessionState state;
  state.t = 0;
  state.phase = Phase::pretrained;
  state.seed = session_seed(ctx.seed, 0);
  Rng init(derive_seed(state.seed, "model.init"));
  init_backbone(state.params, ctx.model, init);

  const auto& d0 = ctx.plan->partitions.at(0);
  std::vector<TrainExample> examples;
  for (Objective o : kBackboneObjectives) {
    auto part = objective_examples(ctx, d0, o, derive_seed(state.seed, objective_name(o)));
    examples.insert(examples.end(), part.begin(), part.end());
  }
  const PhaseStats stats =
      train_examples(state.params, ctx.model, ctx.adapter, std::nullopt, examples,
                     ctx.trainer.pretrain, ctx.trainer, derive_seed(state.seed, "trainer.pretrain"));
  append_log(state.log, 0, "pretrain", "backbone", stats);
  spdlog::info("pretrain: {} examples, {} steps, final loss {:.4f}", examples.size(), stats.steps,
               stats.losses.empty() ? 0.0 : stats.losses.back());
  for (const Docid& d : d0) state.trie.insert(d, *ctx.vocab);
  return state;
}

SessionState finetune_backbone(SessionState state, const TrainContext& ctx) {
  ctx.validate();
  if (state.t != 0 || state.phase != Phase::pretrained) {
    throw Error("fine-tuning needs the pre-trained session-0 state");
  }
  const auto examples = query_examples(ctx, ctx.plan->train_pairs_r0);
  if (examples.empty()) throw ValidationError("R_0 holds no usable training pairs");
  const PhaseStats stats =
      train_examples(state.params, ctx.model, ctx.adapter, std::nullopt, examples,
                     ctx.trainer.finetune, ctx.trainer, derive_seed(state.seed, "trainer.finetune"));
  append_log(state.log, 0, "finetune", "backbone", stats);
  spdlog::info("finetune: {} examples, {} steps, final loss {:.4f}", examples.size(), stats.steps,
               stats.losses.empty() ? 0.0 : stats.losses.back());
  state.params.set_backbone_frozen(true);
  state.params.snap_to_f32();
  state.phase = Phase::finetuned;
  return state;
}

SessionState initial_phase(const TrainContext& ctx) {
  return finetune_backbone(pretrain_backbone(ctx), ctx);
}

std::vector<Docid> rehearsal_exemplars(const SessionState& prev, int t, TrainMode mode,
                                       const TrainContext& ctx, ClusterModel* clusters) {
  switch (mode) {
    case TrainMode::direct:
    case TrainMode::sequential:
    case TrainMode::no_rehearsal:
      return {};
    default:
      break;
  }
  const std::vector<Docid> old = prev.trie.members();
  const auto& fresh = ctx.plan->partitions.at(static_cast<std::size_t>(t));
  if (old.empty() || fresh.empty() || ctx.rehearsal.n_per_doc == 0) return {};
  std::size_t k = ctx.rehearsal.k_clusters == 0 ? default_k_clusters(old.size())
                                                : ctx.rehearsal.k_clusters;
  if (k > old.size()) {
    spdlog::warn("k_clusters {} exceeds the {} old documents; using {}", k, old.size(), old.size());
    k = old.size();
  }
  const std::uint64_t seed = derive_seed(session_seed(ctx.seed, t), "rehearsal");
  ClusterModel model =
      cluster_docids(old, k, ctx.rehearsal.max_iters, seed, ctx.rehearsal.embedding_dim);
  const auto picked = select_exemplars(model, fresh, ctx.rehearsal.n_per_doc, seed);
  if (clusters) *clusters = std::move(model);
  if (mode == TrainMode::random_rehearsal) {
    return select_random_exemplars(old, picked.size(), seed);
  }
  return picked;
}

ParameterStore initial_adapter(const SessionState& prev, int t, TrainMode mode, TaskId task,
                               const TrainContext& ctx) {
  const std::string prefix = adapter_prefix(task);
  ParameterStore out;
  if (t >= 2 && mode != TrainMode::individual && !prev.params.names_with_prefix(prefix).empty()) {
    out.copy_prefix_from(prev.params, prefix);
    return out;
  }
  Rng rng(derive_seed(session_seed(ctx.seed, t), "adapter.init", task_index(task)));
  init_adapter(out, ctx.model, ctx.adapter, task, rng);
  return out;
}

SessionState continual_update(const SessionState& prev, int t, TrainMode mode,
                              const TrainContext& ctx) {
  ctx.validate();
  if (t < 1 || t > ctx.plan->T) {
    throw ValidationError("session " + std::to_string(t) + " outside 1.." +
                          std::to_string(ctx.plan->T));
  }
  if (prev.t != t - 1) {
    throw Error("session " + std::to_string(t) + " needs the state of session " +
                std::to_string(t - 1) + ", got " + std::to_string(prev.t));
  }
  if (prev.phase == Phase::pretrained) throw Error("continual learning needs a fine-tuned model");
  if (prev.phase == Phase::continual && prev.mode != mode) {
    throw Error("session state was produced by mode " + std::string(mode_name(prev.mode)) +
                ", not " + std::string(mode_name(mode)));
  }
  if (mode_uses_adapters(mode)) {
    for (const auto& name : prev.params.backbone_names()) {
      if (!prev.params.at(name).frozen) {
        throw Error("mode " + std::string(mode_name(mode)) + " needs a frozen backbone; " + name +
                    " is trainable");
      }
    }
  }

  SessionState state = prev;
  state.t = t;
  state.phase = Phase::continual;
  state.mode = mode;
  state.seed = session_seed(ctx.seed, t);
  state.clusters.reset();
  ClusterModel clusters;
  state.exemplars = rehearsal_exemplars(prev, t, mode, ctx, &clusters);
  if (mode_uses_adapters(mode) && mode != TrainMode::no_rehearsal && clusters.k() > 0) {
    state.clusters = std::move(clusters);
  }

  const auto& fresh = ctx.plan->partitions.at(static_cast<std::size_t>(t));
  std::vector<Docid> docs = fresh;
  docs.insert(docs.end(), state.exemplars.begin(), state.exemplars.end());
  const TrainerConfig& tc = ctx.trainer;

  auto task_scope = [](TaskId task) { return std::string(task_name(task)); };

  switch (mode) {
    case TrainMode::direct:
      break;
    case TrainMode::sequential: {
      std::vector<TrainExample> examples;
      for (Objective o : kBackboneObjectives) {
        auto part = objective_examples(ctx, fresh, o, derive_seed(state.seed, objective_name(o)));
        examples.insert(examples.end(), part.begin(), part.end());
      }
      state.params.set_backbone_frozen(false);
      const auto stats = train_examples(state.params, ctx.model, ctx.adapter, std::nullopt,
                                        examples, tc.continual, tc,
                                        derive_seed(state.seed, "trainer.continual"));
      state.params.set_backbone_frozen(true);
      append_log(state.log, t, "continual", "backbone", stats);
      break;
    }
    case TrainMode::no_adapter_mt: {
      std::vector<TrainExample> examples;
      for (TaskId task : kAllTasks) {
        const Objective o = objective_for(task);
        auto part = objective_examples(ctx, docs, o, derive_seed(state.seed, objective_name(o)));
        examples.insert(examples.end(), part.begin(), part.end());
      }
      state.params.set_backbone_frozen(false);
      const auto stats = train_examples(state.params, ctx.model, ctx.adapter, std::nullopt,
                                        examples, tc.continual, tc,
                                        derive_seed(state.seed, "trainer.continual"));
      state.params.set_backbone_frozen(true);
      append_log(state.log, t, "continual", "backbone", stats);
      break;
    }
    case TrainMode::no_adapter_st: {
      std::vector<ParameterStore> stores(kAllTasks.size());
      std::vector<PhaseStats> stats(kAllTasks.size());
      for_each_task(tc.parallel_tasks, [&](std::size_t i) {
        const TaskId task = kAllTasks[i];
        auto it = prev.task_params.find(task);
        stores[i] = it != prev.task_params.end() ? it->second : prev.params;
        const Objective o = objective_for(task);
        const auto examples =
            objective_examples(ctx, docs, o, derive_seed(state.seed, objective_name(o)));
        stores[i].set_backbone_frozen(false);
        stats[i] = train_examples(stores[i], ctx.model, ctx.adapter, std::nullopt, examples,
                                  tc.continual, tc,
                                  derive_seed(state.seed, "trainer.continual", i));
        stores[i].set_backbone_frozen(true);
      });
      for (std::size_t i = 0; i < kAllTasks.size(); ++i) {
        state.task_params[kAllTasks[i]] = std::move(stores[i]);
        append_log(state.log, t, "continual", task_scope(kAllTasks[i]), stats[i]);
      }
      break;
    }
    default: {
      std::vector<ParameterStore> stores(kAllTasks.size());
      std::vector<PhaseStats> stats(kAllTasks.size());
      for_each_task(tc.parallel_tasks, [&](std::size_t i) {
        const TaskId task = kAllTasks[i];
        stores[i] = adapter_workspace(prev.params, initial_adapter(prev, t, mode, task, ctx));
        std::vector<TrainExample> examples;
        if (mode == TrainMode::ori_pt) {
          for (Objective o : kBackboneObjectives) {
            auto part = objective_examples(
                ctx, docs, o, derive_seed(state.seed, objective_name(o), i));
            examples.insert(examples.end(), part.begin(), part.end());
          }
        } else {
          const Objective o = objective_for(task);
          examples = objective_examples(ctx, docs, o, derive_seed(state.seed, objective_name(o)));
        }
        stats[i] = train_examples(stores[i], ctx.model, ctx.adapter, task, examples,
                                  tc.continual, tc,
                                  derive_seed(state.seed, "trainer.continual", i));
      });
      for (std::size_t i = 0; i < kAllTasks.size(); ++i) {
        state.params.copy_prefix_from(stores[i], adapter_prefix(kAllTasks[i]));
        append_log(state.log, t, "continual", task_scope(kAllTasks[i]), stats[i]);
      }
      break;
    }
  }

  for (const Docid& d : fresh) state.trie.insert(d, *ctx.vocab);
  state.params.snap_to_f32();
  for (auto& [task, store] : state.task_params) store.snap_to_f32();
  return state;
}

}  // namespace docstream
