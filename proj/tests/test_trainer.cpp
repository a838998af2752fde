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

#include <doctest.h>

#include <memory>
#include <set>

#include "docstream/app/pipeline.hpp"
#include "docstream/common/error.hpp"
#include "docstream/trainer/trainer.hpp"

using namespace docstream;

namespace {

// A tiny end-to-end setup; ctx points into inputs, so it lives on the heap.
struct Toy {
  ExperimentInputs inputs;
  RunConfig cfg;
  TrainContext ctx;
};

std::unique_ptr<Toy> make_toy(std::uint64_t seed = 1) {
  const Corpus corpus = make_synthetic_corpus({.num_docs = 16, .seed = seed});
  const auto queries = make_synthetic_queries(corpus, {.seed = seed + 1});
  SessionPlan plan = build_session_plan(corpus, queries.train, queries.dev, 2, 0.5, seed);
  auto toy = std::make_unique<Toy>(Toy{prepare_inputs(corpus, std::move(plan)), {}, {}});
  RunConfig& c = toy->cfg;
  c.seed = seed;
  c.model.d_model = 16;
  c.model.num_heads = 2;
  c.model.num_layers = 1;
  c.model.max_positions = 64;
  c.adapter.rank = 4;
  for (PhaseConfig* p : {&c.trainer.pretrain, &c.trainer.finetune, &c.trainer.continual}) {
    p->epochs = 1;
    p->max_steps = 3;
  }
  c.rehearsal.k_clusters = 2;
  toy->ctx = make_context(c, toy->inputs);
  return toy;
}

bool backbone_equal(const ParameterStore& a, const ParameterStore& b) {
  const auto names = a.backbone_names();
  if (names != b.backbone_names()) return false;
  for (const auto& n : names) {
    if (!(a.at(n).value == b.at(n).value)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("training examples") {
  Vocabulary v;
  v.add_text("who founded Nelson Mandela Mandla");
  v.finalize();
  TrainerConfig cfg;
  const std::vector<std::string> q{"who", "founded"};
  const std::vector<Docid> two{Docid("Nelson Mandela"), Docid("Mandla Mandela")};
  const auto ex = make_example(v, q, two, cfg);
  REQUIRE(ex);
  const std::vector<TokenId> want{kBosId,          v.id("Nelson"), v.id("Mandela"), kSepId,
                                  v.id("Mandla"), v.id("Mandela"), kEosId};
  CHECK(ex->target == want);
  CHECK(ex->input == v.encode("who founded"));
  cfg.max_target_tokens = 6;
  CHECK(make_example(v, q, two, cfg)->target == want);
  cfg.max_target_tokens = 5;
  const std::vector<TokenId> first{kBosId, v.id("Nelson"), v.id("Mandela"), kEosId};
  CHECK(make_example(v, q, two, cfg)->target == first);
  cfg.max_target_tokens = 2;
  CHECK(!make_example(v, q, two, cfg));
  cfg.max_target_tokens = 15;
  CHECK(!make_example(v, {}, two, cfg));
  cfg.max_input_tokens = 1;
  CHECK(make_example(v, q, two, cfg)->input.size() == 1);
  cfg.max_target_tokens = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("token-count batches") {
  std::vector<TrainExample> ex(5);
  const std::size_t lens[5] = {3, 4, 10, 2, 2};
  for (std::size_t i = 0; i < 5; ++i) {
    ex[i].input.assign(lens[i], 7);
    ex[i].target = {kBosId, kEosId};
  }
  const auto b = make_batches(ex, {0, 1, 2, 3, 4}, 11);
  CHECK(b == std::vector<std::vector<std::size_t>>{{0, 1}, {2}, {3, 4}});
  const auto big = make_batches(ex, {2, 0}, 4);
  CHECK(big == std::vector<std::vector<std::size_t>>{{2}, {0}});
}

TEST_CASE("zero steps leave parameters untouched") {
  auto toy = make_toy();
  const auto& ctx = toy->ctx;
  ParameterStore s;
  Rng rng(1);
  init_backbone(s, ctx.model, rng);
  const ParameterStore before = s;
  const auto examples = query_examples(ctx, ctx.plan->train_pairs_r0);
  REQUIRE(!examples.empty());
  PhaseConfig none;
  none.epochs = 0;
  CHECK(train_examples(s, ctx.model, ctx.adapter, std::nullopt, examples, none, ctx.trainer, 3).steps == 0);
  CHECK(s == before);
  PhaseConfig some;
  some.max_steps = 2;
  CHECK(train_examples(s, ctx.model, ctx.adapter, std::nullopt, examples, some, ctx.trainer, 3).steps == 2);
  CHECK(!(s == before));
}

TEST_CASE("datasets without a train split yield no examples") {
  auto toy = make_toy();
  QueryExample q;
  q.query_id = "x";
  q.dataset = "ELI5";
  q.task = TaskId::open_qa;
  q.query_text = "why";
  q.provenance = {toy->ctx.plan->partitions[0].front()};
  CHECK(query_examples(toy->ctx, {q}).empty());
  q.dataset = "NQ";
  CHECK(query_examples(toy->ctx, {q}).size() == 1);
}

TEST_CASE("modes") {
  CHECK(parse_mode("corpusbrainpp") == TrainMode::corpusbrainpp);
  CHECK(parse_mode("no_rehearsal") == TrainMode::no_rehearsal);
  try {
    parse_mode("bogus");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    for (const char* m : {"direct", "sequential", "individual", "ori_pt"}) {
      CHECK(std::string(e.what()).find(m) != std::string::npos);
    }
  }
  CHECK(mode_uses_adapters(TrainMode::random_rehearsal));
  CHECK(!mode_uses_adapters(TrainMode::sequential));
  CHECK(!mode_uses_adapters(TrainMode::no_adapter_st));
}

TEST_CASE("sessions") {
  auto toy = make_toy();
  const auto& ctx = toy->ctx;
  const SessionState s0 = initial_phase(ctx);
  const auto& d0 = ctx.plan->partitions[0];
  const auto& d1 = ctx.plan->partitions[1];

  SUBCASE("initial phase is deterministic and freezes the backbone") {
    CHECK(initial_phase(ctx).params == s0.params);
    CHECK(s0.phase == Phase::finetuned);
    CHECK(s0.trie.size() == d0.size());
    for (const auto& n : s0.params.backbone_names()) CHECK(s0.params.at(n).frozen);
    auto other = make_toy(2);
    CHECK(!(initial_phase(other->ctx).params == s0.params));
  }

  SUBCASE("direct grows only the prefix tree") {
    const SessionState s1 = continual_update(s0, 1, TrainMode::direct, ctx);
    CHECK(s1.params == s0.params);
    CHECK(s1.trie.size() == d0.size() + d1.size());
    for (const auto& d : d1) CHECK(s1.trie.contains(d));
    CHECK(s1.exemplars.empty());
  }

  SUBCASE("sequential retrains the backbone") {
    const SessionState s1 = continual_update(s0, 1, TrainMode::sequential, ctx);
    CHECK(!backbone_equal(s1.params, s0.params));
    CHECK(s1.params.names_with_prefix("adapter.").empty());
  }

  SUBCASE("adapters leave the backbone bit-identical") {
    const SessionState s1 = continual_update(s0, 1, TrainMode::corpusbrainpp, ctx);
    CHECK(backbone_equal(s1.params, s0.params));
    for (TaskId task : kAllTasks) CHECK(!s1.params.names_with_prefix(adapter_prefix(task)).empty());
    CHECK(continual_update(s0, 1, TrainMode::corpusbrainpp, ctx).params == s1.params);

    const std::set<Docid> old(d0.begin(), d0.end()), fresh(d1.begin(), d1.end());
    CHECK(!s1.exemplars.empty());
    for (const auto& d : s1.exemplars) {
      CHECK(old.contains(d));
      CHECK(!fresh.contains(d));
    }
    REQUIRE(s1.clusters);
    CHECK(s1.clusters->k() == 2);

    const SessionState s2 = continual_update(s1, 2, TrainMode::corpusbrainpp, ctx);
    CHECK(backbone_equal(s2.params, s0.params));
    CHECK(s2.trie.size() == d0.size() + d1.size() + ctx.plan->partitions[2].size());
    for (TaskId task : kAllTasks) {
      ParameterStore inherited = initial_adapter(s1, 2, TrainMode::corpusbrainpp, task, ctx);
      ParameterStore restated;
      restated.copy_prefix_from(s1.params, adapter_prefix(task));
      CHECK(inherited == restated);
      const ParameterStore fresh_init = initial_adapter(s1, 2, TrainMode::individual, task, ctx);
      CHECK(!(fresh_init == restated));
      CHECK(fresh_init == initial_adapter(s1, 2, TrainMode::individual, task, ctx));
      for (const auto& n : fresh_init.names()) {
        if (n.ends_with(".up")) CHECK(fresh_init.at(n).value == Matrix(fresh_init.at(n).value.rows, fresh_init.at(n).value.cols));
      }
    }
    CHECK_THROWS_AS(continual_update(s1, 2, TrainMode::direct, ctx), Error);
    CHECK_THROWS_AS(continual_update(s1, 1, TrainMode::corpusbrainpp, ctx), Error);
    CHECK_THROWS_AS(continual_update(s2, 3, TrainMode::corpusbrainpp, ctx), ValidationError);
  }

  SUBCASE("rehearsal variants") {
    const auto cluster_based = rehearsal_exemplars(s0, 1, TrainMode::corpusbrainpp, ctx);
    const auto random = rehearsal_exemplars(s0, 1, TrainMode::random_rehearsal, ctx);
    CHECK(random.size() == cluster_based.size());
    for (const auto& d : random) CHECK(std::find(d0.begin(), d0.end(), d) != d0.end());
    CHECK(rehearsal_exemplars(s0, 1, TrainMode::no_rehearsal, ctx).empty());
    CHECK(rehearsal_exemplars(s0, 1, TrainMode::sequential, ctx).empty());
  }

  SUBCASE("separate task backbones") {
    const SessionState s1 = continual_update(s0, 1, TrainMode::no_adapter_st, ctx);
    CHECK(s1.task_params.size() == kAllTasks.size());
    CHECK(s1.params == s0.params);
    for (const auto& [task, store] : s1.task_params) CHECK(!backbone_equal(store, s0.params));
  }

  CHECK_THROWS_AS(continual_update(pretrain_backbone(ctx), 1, TrainMode::direct, ctx), Error);
}

}  // TEST_SUITE
