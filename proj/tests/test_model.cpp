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

#include <cmath>
#include <functional>
#include <numeric>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "docstream/common/rng.hpp"
#include "docstream/model/autodiff.hpp"
#include "docstream/model/checkpoint.hpp"
#include "docstream/model/optimizer.hpp"
#include "docstream/model/params.hpp"
#include "docstream/model/tokenizer.hpp"
#include "docstream/model/transformer.hpp"
#include "fixtures.hpp"

using namespace docstream;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Scalar r^T f(x) c, so every output entry contributes with its own weight.
double reduced(const std::vector<Matrix>& inputs, const Builder& f, std::vector<Matrix>* grads) {
  ad::Tape t;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(t.leaf(m, grads != nullptr));
  const ad::Var out = f(t, vars);
  const Matrix& o = t.value(out);
  Rng rng(12345);
  Matrix r = random_matrix(1, o.rows, rng), c = random_matrix(o.cols, 1, rng);
  const ad::Var loss = ad::matmul(t, ad::matmul(t, t.leaf(r), out), t.leaf(c));
  const double value = t.value(loss).data[0];
  if (grads) {
    t.backward(loss);
    grads->clear();
    for (std::size_t i = 0; i < vars.size(); ++i) {
      Matrix g = t.grad(vars[i]);
      if (g.size() == 0) g = Matrix(inputs[i].rows, inputs[i].cols);
      grads->push_back(std::move(g));
    }
  }
  return value;
}

double max_relative_error(std::vector<Matrix> inputs, const Builder& f) {
  std::vector<Matrix> grads;
  reduced(inputs, f, &grads);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double orig = inputs[i].data[k];
      inputs[i].data[k] = orig + h;
      const double up = reduced(inputs, f, nullptr);
      inputs[i].data[k] = orig - h;
      const double down = reduced(inputs, f, nullptr);
      inputs[i].data[k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[i].data[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

ModelConfig tiny_model(std::size_t vocab = 20) {
  ModelConfig m;
  m.d_model = 8;
  m.num_heads = 2;
  m.num_layers = 1;
  m.vocab_size = vocab;
  m.max_positions = 16;
  return m;
}

ParameterStore tiny_store(const ModelConfig& m, std::uint64_t seed) {
  ParameterStore s;
  Rng rng(seed);
  init_backbone(s, m, rng);
  return s;
}

}  // namespace

TEST_SUITE("tokenizer") {

TEST_CASE("word splitting") {
  CHECK(tokenize_words("Hello, world!") == std::vector<std::string>{"Hello", ",", "world", "!"});
  CHECK(tokenize_words("a [SEP] b [START_ENT] c [END_ENT]") ==
        std::vector<std::string>{"a", "[SEP]", "b", "[START_ENT]", "c", "[END_ENT]"});
  CHECK(tokenize_words("  ").empty());
  CHECK(join_tokens(tokenize_words("x y")) == "x y");
}

TEST_CASE("vocabulary") {
  Vocabulary v;
  v.add_text("zeta alpha beta alpha");
  v.finalize();
  CHECK(v.size() == kNumSpecials + 3);
  CHECK(v.id("[PAD]") == kPadId);
  CHECK(v.id("[SEP]") == kSepId);
  CHECK(v.id("alpha") < v.id("beta"));
  CHECK(v.id("beta") < v.id("zeta"));
  CHECK(v.id("missing") == kUnkId);
  CHECK(v.decode(v.encode("alpha zeta")) == "alpha zeta");
  const auto dir = fixtures::temp_dir("vocab");
  v.save(dir / "v.txt");
  const Vocabulary back = Vocabulary::load(dir / "v.txt");
  CHECK(back.size() == v.size());
  CHECK(back.encode("zeta beta") == v.encode("zeta beta"));
}

}  // TEST_SUITE

TEST_SUITE("autodiff") {

TEST_CASE("op gradients match finite differences") {
  Rng rng(1);
  CHECK(max_relative_error({random_matrix(3, 4, rng), random_matrix(4, 2, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::matmul(t, v[0], v[1]); }) < 1e-6);
  CHECK(max_relative_error({random_matrix(3, 4, rng), random_matrix(5, 4, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::matmul_nt(t, v[0], v[1]); }) < 1e-6);
  CHECK(max_relative_error({random_matrix(3, 4, rng), random_matrix(3, 4, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::add(t, v[0], v[1]); }) < 1e-6);
  CHECK(max_relative_error({random_matrix(3, 4, rng), random_matrix(1, 4, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::add_row(t, v[0], v[1]); }) < 1e-6);
  CHECK(max_relative_error({random_matrix(3, 4, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::gelu(t, v[0]); }) < 1e-5);
  CHECK(max_relative_error({random_matrix(3, 6, rng), random_matrix(1, 6, rng), random_matrix(1, 6, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::layer_norm(t, v[0], v[1], v[2]); }) <
        1e-5);
  for (bool causal : {false, true}) {
    CHECK(max_relative_error(
              {random_matrix(4, 6, rng), random_matrix(4, 6, rng), random_matrix(4, 6, rng)},
              [causal](ad::Tape& t, const auto& v) { return ad::attention(t, v[0], v[1], v[2], 2, causal); }) <
          1e-5);
  }
  CHECK(max_relative_error({random_matrix(2, 6, rng), random_matrix(5, 6, rng), random_matrix(5, 6, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::attention(t, v[0], v[1], v[2], 3, false); }) <
        1e-5);
  const std::vector<int> ids{2, 0, 2, 1};
  CHECK(max_relative_error({random_matrix(3, 4, rng)},
                           [&](ad::Tape& t, const auto& v) { return ad::gather_rows(t, v[0], ids); }) < 1e-6);
  CHECK(max_relative_error({random_matrix(5, 3, rng)},
                           [](ad::Tape& t, const auto& v) { return ad::slice_rows(t, v[0], 1, 3); }) < 1e-6);
  const std::vector<int> targets{1, 4, 0};
  for (double eps : {0.0, 0.1}) {
    CHECK(max_relative_error({random_matrix(3, 5, rng)},
                             [&](ad::Tape& t, const auto& v) { return ad::cross_entropy(t, v[0], targets, eps); }) <
          1e-5);
  }
}

TEST_CASE("cross entropy values") {
  ad::Tape t;
  const ad::Var z = t.leaf(Matrix(2, 4, 0.0));
  const std::vector<int> targets{0, 3};
  CHECK(t.value(ad::cross_entropy(t, z, targets)).data[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  Matrix logits(1, 3);
  logits.data = {1.0, 2.0, 3.0};
  const ad::Var y = t.leaf(logits);
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  const std::vector<int> one{2};
  CHECK(t.value(ad::cross_entropy(t, y, one)).data[0] == doctest::Approx(lse - 3.0).epsilon(1e-14));
  const double smooth = 0.9 * (lse - 3.0) + 0.1 * (lse - 2.0);
  CHECK(t.value(ad::cross_entropy(t, y, one, 0.1)).data[0] == doctest::Approx(smooth).epsilon(1e-14));
}

TEST_CASE("backward needs a scalar") {
  ad::Tape t;
  const ad::Var x = t.leaf(Matrix(2, 2, 1.0), true);
  CHECK_THROWS(t.backward(x));
}

}  // TEST_SUITE

TEST_SUITE("sublayers") {

TEST_CASE("single-position attention ignores queries and keys") {
  Rng rng(2);
  const Matrix h = random_matrix(1, 4, rng);
  const Matrix wv = random_matrix(4, 4, rng), wo = random_matrix(4, 4, rng);
  Matrix expect(1, 4);
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t a = 0; a < 4; ++a) {
      double hv = 0;
      for (std::size_t b = 0; b < 4; ++b) hv += h(0, b) * wv(b, a);
      expect(0, j) += hv * wo(a, j);
    }
  }
  for (int trial = 0; trial < 3; ++trial) {
    ad::Tape t;
    const AttentionWeights w{t.leaf(random_matrix(4, 4, rng)), t.leaf(random_matrix(4, 4, rng)), t.leaf(wv),
                             t.leaf(wo)};
    const ad::Var hv = t.leaf(h);
    const Matrix& out = t.value(multi_head_attention(t, hv, hv, w, 2, false));
    REQUIRE(out.rows == 1);
    for (std::size_t j = 0; j < 4; ++j) CHECK(out(0, j) == doctest::Approx(expect(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("causal attention does not look ahead") {
  Rng rng(3);
  Matrix h = random_matrix(4, 6, rng);
  std::vector<Matrix> w;
  for (int i = 0; i < 4; ++i) w.push_back(random_matrix(6, 6, rng));
  auto run = [&](const Matrix& input) {
    ad::Tape t;
    const AttentionWeights aw{t.leaf(w[0]), t.leaf(w[1]), t.leaf(w[2]), t.leaf(w[3])};
    const ad::Var x = t.leaf(input);
    return t.value(multi_head_attention(t, x, x, aw, 2, true));
  };
  const Matrix base = run(h);
  CHECK(base.rows == 4);
  CHECK(base.cols == 6);
  for (std::size_t j = 0; j < 4; ++j) {
    Matrix changed = h;
    for (std::size_t r = j + 1; r < 4; ++r) {
      for (std::size_t c = 0; c < 6; ++c) changed(r, c) += 5.0;
    }
    const Matrix out = run(changed);
    for (std::size_t r = 0; r <= j; ++r) {
      for (std::size_t c = 0; c < 6; ++c) CHECK(out(r, c) == base(r, c));
    }
  }
}

TEST_CASE("feed-forward") {
  Rng rng(4);
  const Matrix h = random_matrix(3, 4, rng);
  SUBCASE("zero weights give zero") {
    ad::Tape t;
    const FfnWeights w{t.leaf(Matrix(4, 16)), t.leaf(Matrix(1, 16)), t.leaf(Matrix(16, 4)), t.leaf(Matrix(1, 4))};
    const Matrix& out = t.value(feed_forward(t, t.leaf(h), w));
    for (double v : out.data) CHECK(v == 0.0);
  }
  SUBCASE("hand computation and row permutation") {
    const Matrix w1 = random_matrix(4, 16, rng), b1 = random_matrix(1, 16, rng);
    const Matrix w2 = random_matrix(16, 4, rng), b2 = random_matrix(1, 4, rng);
    auto ffn = [&](const Matrix& x) {
      ad::Tape t;
      const FfnWeights w{t.leaf(w1), t.leaf(b1), t.leaf(w2), t.leaf(b2)};
      return t.value(feed_forward(t, t.leaf(x), w));
    };
    const Matrix out = ffn(h);
    for (std::size_t r = 0; r < 3; ++r) {
      std::vector<double> hidden(16);
      for (std::size_t j = 0; j < 16; ++j) {
        double a = b1(0, j);
        for (std::size_t k = 0; k < 4; ++k) a += h(r, k) * w1(k, j);
        hidden[j] = 0.5 * a * (1.0 + std::erf(a / std::sqrt(2.0)));
      }
      for (std::size_t c = 0; c < 4; ++c) {
        double y = b2(0, c);
        for (std::size_t j = 0; j < 16; ++j) y += hidden[j] * w2(j, c);
        CHECK(out(r, c) == doctest::Approx(y).epsilon(1e-12));
      }
    }
    Matrix swapped = h;
    for (std::size_t c = 0; c < 4; ++c) std::swap(swapped(0, c), swapped(2, c));
    const Matrix out2 = ffn(swapped);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(out2(0, c) == out(2, c));
      CHECK(out2(2, c) == out(0, c));
      CHECK(out2(1, c) == out(1, c));
    }
  }
}

TEST_CASE("layer norm and the residual wrapper") {
  Rng rng(5);
  const Matrix h = random_matrix(3, 6, rng, 3.0);
  ad::Tape t;
  const LayerNormWeights unit{t.leaf(Matrix(1, 6, 1.0)), t.leaf(Matrix(1, 6, 0.0))};
  const Matrix normed = t.value(ad::layer_norm(t, t.leaf(h), unit.scale, unit.shift));
  for (std::size_t r = 0; r < 3; ++r) {
    double mean = 0, var = 0, raw_mean = 0, raw_var = 0;
    for (std::size_t c = 0; c < 6; ++c) raw_mean += h(r, c) / 6;
    for (std::size_t c = 0; c < 6; ++c) raw_var += (h(r, c) - raw_mean) * (h(r, c) - raw_mean) / 6;
    for (std::size_t c = 0; c < 6; ++c) {
      mean += normed(r, c) / 6;
      const double expect = (h(r, c) - raw_mean) / std::sqrt(raw_var + 1e-5);
      CHECK(normed(r, c) == doctest::Approx(expect).epsilon(1e-12));
    }
    for (std::size_t c = 0; c < 6; ++c) var += (normed(r, c) - mean) * (normed(r, c) - mean) / 6;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
  const Matrix& wrapped = t.value(rcln(t, t.leaf(h), t.leaf(Matrix(3, 6)), unit));
  CHECK(wrapped == normed);
}

TEST_CASE("adapter core") {
  Rng rng(6);
  const Matrix s = random_matrix(3, 8, rng);
  const Matrix down = random_matrix(8, 2, rng);
  AdapterConfig cfg;
  cfg.rank = 2;
  {
    ad::Tape t;
    const AdapterWeights w{t.leaf(down), t.leaf(Matrix(2, 8))};
    CHECK(t.value(adapter_apply(t, t.leaf(s), w, cfg)) == s);
    cfg.internal_residual = false;
    for (double v : t.value(adapter_apply(t, t.leaf(s), w, cfg)).data) CHECK(v == 0.0);
  }
  // Rank of the composed map: apply the core to the identity and eliminate.
  ad::Tape t;
  const AdapterWeights w{t.leaf(down), t.leaf(random_matrix(2, 8, rng))};
  Matrix eye(8, 8);
  for (std::size_t i = 0; i < 8; ++i) eye(i, i) = 1.0;
  Matrix m = t.value(adapter_apply(t, t.leaf(eye), w, cfg));
  std::size_t rank = 0;
  for (std::size_t col = 0; col < 8 && rank < 8; ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank; r < 8; ++r) {
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    }
    if (std::abs(m(pivot, col)) < 1e-9) continue;
    for (std::size_t c = 0; c < 8; ++c) std::swap(m(rank, c), m(pivot, c));
    for (std::size_t r = rank + 1; r < 8; ++r) {
      const double f = m(r, col) / m(rank, col);
      for (std::size_t c = 0; c < 8; ++c) m(r, c) -= f * m(rank, c);
    }
    ++rank;
  }
  CHECK(rank == 2);
}

TEST_CASE("inside sublayer") {
  Rng rng(7);
  const Matrix h = random_matrix(3, 8, rng), s = random_matrix(3, 8, rng);
  const Matrix scale = random_matrix(1, 8, rng), shift = random_matrix(1, 8, rng);
  ad::Tape t;
  const LayerNormWeights ln{t.leaf(scale), t.leaf(shift)};
  const Matrix base = t.value(rcln(t, t.leaf(h), t.leaf(s), ln));
  AdapterConfig cfg;
  const AdapterWeights zero{t.leaf(random_matrix(8, 8, rng)), t.leaf(Matrix(8, 8))};
  CHECK(t.value(inside_sublayer(t, t.leaf(h), t.leaf(s), &zero, cfg, ln)) == base);
  CHECK(t.value(inside_sublayer(t, t.leaf(h), t.leaf(s), nullptr, cfg, ln)) == base);
  const AdapterWeights live{t.leaf(random_matrix(8, 8, rng)), t.leaf(random_matrix(8, 8, rng))};
  CHECK(!(t.value(inside_sublayer(t, t.leaf(h), t.leaf(s), &live, cfg, ln)) == base));
}

}  // TEST_SUITE

TEST_SUITE("seq2seq") {

TEST_CASE("parameter layout") {
  const ModelConfig m = tiny_model();
  ParameterStore s = tiny_store(m, 1);
  CHECK(s.has("embed.tokens"));
  CHECK(s.at("embed.tokens").value.rows == m.vocab_size);
  CHECK(s.at("enc.0.ffn.w1").value.cols == m.d_ffn());
  CHECK(s.at("dec.0.cross_attn.q").value.rows == m.d_model);
  CHECK(s.at("enc.0.self_attn_ln.scale").value == Matrix(1, m.d_model, 1.0));
  CHECK(adapter_sites(m).size() == 5);
  CHECK(s.backbone_names().size() == s.size());
  AdapterConfig a;
  a.rank = 2;
  Rng rng(2);
  init_adapter(s, m, a, TaskId::dialogue, rng);
  CHECK(s.names_with_prefix("adapter.dialogue.").size() == 10);
  CHECK(s.backbone_names().size() == s.size() - 10);
  CHECK(s.at("adapter.dialogue.enc.0.ffn.up").value == Matrix(2, m.d_model));
  CHECK(s.at("adapter.dialogue.enc.0.ffn.down").value.cols == 2);
  s.set_backbone_frozen(true);
  CHECK(s.at("embed.tokens").frozen);
  CHECK(!s.at("adapter.dialogue.dec.0.ffn.up").frozen);
  ParameterStore other;
  other.copy_prefix_from(s, "adapter.dialogue.");
  CHECK(other.size() == 10);
  s.erase_prefix("adapter.");
  CHECK(s.names_with_prefix("adapter.").empty());
  ModelConfig bad = m;
  bad.num_heads = 3;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  a.rank = 0;
  CHECK_THROWS_AS(a.validate(m), ValidationError);
}

TEST_CASE("uniform output gives ln V") {
  const ModelConfig m = tiny_model(13);
  ParameterStore s = tiny_store(m, 2);
  s.at("embed.tokens").value.fill(0.0);
  const std::vector<TokenId> query{7, 8, 9}, target{kBosId, 10, 11, kEosId};
  const auto r = seq2seq_loss(s, m, {}, std::nullopt, query, target);
  CHECK(r.loss == doctest::Approx(std::log(13.0)).epsilon(1e-12));
  CHECK(r.tokens == 3);
  CHECK_THROWS_AS(seq2seq_loss(s, m, {}, std::nullopt, query, std::vector<TokenId>{10, kEosId}),
                  ValidationError);
}

TEST_CASE("model gradients match finite differences") {
  const ModelConfig m = tiny_model(12);
  ParameterStore s = tiny_store(m, 3);
  AdapterConfig a;
  a.rank = 2;
  a.zero_init_up = false;
  Rng rng(4);
  init_adapter(s, m, a, TaskId::open_qa, rng);
  const std::vector<TokenId> query{7, 8, 9, 10}, target{kBosId, 11, kSepId, 8, kEosId};
  const auto r = seq2seq_loss(s, m, a, TaskId::open_qa, query, target, 0.1);
  Rng pick(5);
  const auto names = s.names();
  double worst = 0;
  for (int i = 0; i < 60; ++i) {
    const std::string& name = names[pick.uniform_index(names.size())];
    Matrix& value = s.at(name).value;
    const std::size_t k = pick.uniform_index(value.size());
    const double orig = value.data[k], h = 1e-6;
    value.data[k] = orig + h;
    const double up = seq2seq_loss(s, m, a, TaskId::open_qa, query, target, 0.1, false).loss;
    value.data[k] = orig - h;
    const double down = seq2seq_loss(s, m, a, TaskId::open_qa, query, target, 0.1, false).loss;
    value.data[k] = orig;
    const double numeric = (up - down) / (2 * h);
    const double analytic = r.grads.at(name).data[k];
    worst = std::max(worst, std::abs(numeric - analytic) /
                                std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("frozen tensors get no gradient") {
  const ModelConfig m = tiny_model();
  ParameterStore s = tiny_store(m, 6);
  Rng rng(1);
  AdapterConfig a;
  a.rank = 2;
  init_adapter(s, m, a, TaskId::fact_checking, rng);
  s.set_backbone_frozen(true);
  const std::vector<TokenId> query{7, 8}, target{kBosId, 9, kEosId};
  const auto r = seq2seq_loss(s, m, a, TaskId::fact_checking, query, target);
  CHECK(!r.grads.empty());
  for (const auto& [name, g] : r.grads) CHECK(name.starts_with("adapter.fact_checking."));
  CHECK_THROWS(seq2seq_loss(s, m, a, TaskId::dialogue, query, target));
  CHECK(active_adapter(s, TaskId::dialogue) == std::nullopt);
  CHECK(active_adapter(s, TaskId::fact_checking) == TaskId::fact_checking);
}

TEST_CASE("inputs are range checked") {
  const ModelConfig m = tiny_model(12);
  const ParameterStore s = tiny_store(m, 7);
  std::vector<TokenId> too_long(17, 8);
  const std::vector<TokenId> target{kBosId, 9, kEosId};
  CHECK_THROWS_AS(seq2seq_loss(s, m, {}, std::nullopt, too_long, target), ValidationError);
  const std::vector<TokenId> oov{12};
  CHECK_THROWS_AS(seq2seq_loss(s, m, {}, std::nullopt, oov, target), ValidationError);
}

TEST_CASE("incremental inference matches the full forward pass") {
  const ModelConfig m = tiny_model(15);
  const ParameterStore s = tiny_store(m, 8);
  const std::vector<TokenId> query{7, 9, 11}, prefix{12, 13};
  std::vector<TokenId> dec{kBosId};
  dec.insert(dec.end(), prefix.begin(), prefix.end());
  const Matrix logits = forward_logits(s, m, {}, std::nullopt, query, dec);
  const Inference inf(s, m, {}, std::nullopt);
  const auto lp = inf.next_log_probs(inf.encode(query), prefix);
  REQUIRE(lp.size() == m.vocab_size);
  double mx = -1e300;
  for (std::size_t v = 0; v < m.vocab_size; ++v) mx = std::max(mx, logits(2, v));
  double z = 0;
  for (std::size_t v = 0; v < m.vocab_size; ++v) z += std::exp(logits(2, v) - mx);
  for (std::size_t v = 0; v < m.vocab_size; ++v) {
    CHECK(lp[v] == doctest::Approx(logits(2, v) - mx - std::log(z)).epsilon(1e-12));
  }
}

TEST_CASE("a single pair is memorised in 200 steps") {
  const ModelConfig m = tiny_model(16);
  ParameterStore s = tiny_store(m, 9);
  const std::vector<TokenId> query{7, 8, 9}, target{kBosId, 10, 11, 12, kEosId};
  OptimizerConfig oc;
  oc.lr = 1e-2;
  AdamW opt(oc, 200);
  double loss = 0;
  for (int step = 0; step < 200; ++step) {
    auto r = seq2seq_loss(s, m, {}, std::nullopt, query, target);
    loss = r.loss;
    opt.step(s, r.grads);
  }
  CHECK(loss < 0.1);
}

}  // TEST_SUITE

TEST_SUITE("optimizer") {

TEST_CASE("learning-rate schedule") {
  OptimizerConfig oc;
  oc.lr = 1.0;
  oc.warmup_ratio = 0.1;
  const AdamW opt(oc, 100);
  CHECK(opt.lr_at(0) == doctest::Approx(0.1));
  CHECK(opt.lr_at(9) == doctest::Approx(1.0));
  CHECK(opt.lr_at(10) == doctest::Approx(1.0));
  CHECK(opt.lr_at(55) < opt.lr_at(20));
  CHECK(opt.lr_at(99) > 0.0);
  OptimizerConfig bad;
  bad.lr = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("one AdamW step by hand") {
  ParameterStore s;
  Matrix w(1, 2);
  w.data = {1.0, -2.0};
  s.add("w", w);
  s.add("frozen", w, true);
  OptimizerConfig oc;
  oc.lr = 0.1;
  oc.warmup_ratio = 0.0;
  oc.weight_decay = 0.5;
  AdamW opt(oc, 1);
  std::map<std::string, Matrix> g;
  Matrix gw(1, 2);
  gw.data = {0.5, 0.25};
  g["w"] = gw;
  g["frozen"] = gw;
  opt.step(s, g);
  const double lr = opt.lr_at(0);
  for (int i = 0; i < 2; ++i) {
    const double gi = gw.data[i];
    const double mhat = gi, vhat = gi * gi;
    const double expect = w.data[i] - lr * (mhat / (std::sqrt(vhat) + 1e-8) + 0.5 * w.data[i]);
    CHECK(s.at("w").value.data[i] == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(s.at("frozen").value == w);
}

TEST_CASE("non-finite gradients are reported") {
  ParameterStore s;
  s.add("w", Matrix(1, 1, 1.0));
  AdamW opt({}, 2);
  std::map<std::string, Matrix> g{{"w", Matrix(1, 1, std::nan(""))}};
  CHECK_THROWS_AS(opt.step(s, g), DivergenceError);
}

TEST_CASE("gradient clipping") {
  std::map<std::string, Matrix> g{{"a", Matrix(1, 1, 3.0)}, {"b", Matrix(1, 1, 4.0)}};
  CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g["a"].data[0] == doctest::Approx(0.6));
  CHECK(g["b"].data[0] == doctest::Approx(0.8));
  clip_grad_norm(g, 10.0);
  CHECK(g["a"].data[0] == doctest::Approx(0.6));
}

}  // TEST_SUITE

TEST_SUITE("checkpoint") {

TEST_CASE("round trip and byte stability") {
  const ModelConfig m = tiny_model();
  ParameterStore s = tiny_store(m, 10);
  s.at("enc.0.ffn.w1").frozen = true;
  s.snap_to_f32();
  const std::string bytes = encode_checkpoint(s, R"({"session":3})");
  CHECK(bytes.substr(0, 6) == "DSCKPT");
  std::string meta;
  const ParameterStore back = decode_checkpoint(bytes, &meta);
  CHECK(back == s);
  CHECK(meta.find("\"session\":3") != std::string::npos);
  CHECK(encode_checkpoint(tiny_store(m, 10), "{}") == encode_checkpoint(tiny_store(m, 10), "{}"));

  const auto dir = fixtures::temp_dir("ckpt");
  save_checkpoint(s, dir / "m.ckpt");
  CHECK(load_checkpoint(dir / "m.ckpt") == s);
  CHECK(read_file(dir / "m.ckpt") == encode_checkpoint(s));
}

TEST_CASE("snapping rounds through float") {
  ParameterStore s;
  s.add("x", Matrix(1, 1, 0.1));
  s.snap_to_f32();
  CHECK(s.at("x").value.data[0] == static_cast<double>(0.1f));
}

TEST_CASE("corrupt files are rejected") {
  const std::string good = encode_checkpoint(tiny_store(tiny_model(), 11));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), Error);
  std::string bad_version = good;
  bad_version[8] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), Error);
  CHECK_THROWS_AS(decode_checkpoint(good.substr(0, good.size() - 4)), Error);
  CHECK_THROWS_AS(decode_checkpoint("DSC"), Error);
}

}  // TEST_SUITE
