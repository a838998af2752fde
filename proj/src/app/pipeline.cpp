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

#include "docstream/app/pipeline.hpp"

#include <chrono>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "docstream/common/rng.hpp"
#include "docstream/model/checkpoint.hpp"

namespace docstream {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::pretrained: return "pretrained";
    case Phase::finetuned: return "finetuned";
    case Phase::continual: return "continual";
  }
  return "?";
}

Phase parse_phase(const std::string& s) {
  if (s == "pretrained") return Phase::pretrained;
  if (s == "finetuned") return Phase::finetuned;
  if (s == "continual") return Phase::continual;
  throw ValidationError("unknown phase " + s);
}

json model_json(const ModelConfig& m) {
  return {{"d_model", m.d_model},       {"num_heads", m.num_heads},
          {"num_layers", m.num_layers}, {"vocab_size", m.vocab_size},
          {"max_positions", m.max_positions}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.d_model = j.at("d_model").get<std::size_t>();
  m.num_heads = j.at("num_heads").get<std::size_t>();
  m.num_layers = j.at("num_layers").get<std::size_t>();
  m.vocab_size = j.at("vocab_size").get<std::size_t>();
  m.max_positions = j.at("max_positions").get<std::size_t>();
  return m;
}

json adapter_json(const AdapterConfig& a) {
  return {{"rank", a.rank},
          {"internal_residual", a.internal_residual},
          {"zero_init_up", a.zero_init_up}};
}

AdapterConfig adapter_from_json(const json& j) {
  AdapterConfig a;
  a.rank = j.at("rank").get<std::size_t>();
  a.internal_residual = j.at("internal_residual").get<bool>();
  a.zero_init_up = j.at("zero_init_up").get<bool>();
  return a;
}

std::string session_dir_name(int t) { return "sessions/t" + std::to_string(t); }

std::string log_csv(const std::vector<LogEntry>& log, int session) {
  std::string out = "session,phase,scope,step,loss\n";
  for (const auto& e : log) {
    if (e.session != session) continue;
    out += fmt::format("{},{},{},{},{:.17g}\n", e.session, e.phase, e.scope, e.step, e.loss);
  }
  return out;
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string config_fingerprint(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("paths");
  return hex64(stable_hash(j.dump()));
}

}  // namespace

Vocabulary build_vocabulary(const Corpus& corpus, const SessionPlan& plan) {
  Vocabulary vocab;
  for (const auto& doc : corpus.documents()) {
    vocab.add_text(doc.docid.str());
    for (const auto& para : doc.paragraphs) {
      for (const auto& sentence : para) vocab.add_text(sentence);
    }
    for (const auto& a : doc.anchors) vocab.add_text(a.surface_text);
  }
  auto add_queries = [&](const std::vector<QueryExample>& qs) {
    for (const auto& q : qs) {
      vocab.add_text(q.query_text);
      for (const auto& d : q.provenance) vocab.add_text(d.str());
    }
  };
  add_queries(plan.train_pairs_r0);
  for (const auto& [key, qs] : plan.test_sets) add_queries(qs);
  vocab.finalize();
  return vocab;
}

ExperimentInputs prepare_inputs(Corpus corpus, SessionPlan plan) {
  ExperimentInputs in;
  in.corpus = std::move(corpus);
  in.plan = std::move(plan);
  in.vocab = build_vocabulary(in.corpus, in.plan);
  in.detector = train_default_detector(in.plan.train_pairs_r0, &in.corpus);
  return in;
}

TrainContext make_context(const RunConfig& cfg, const ExperimentInputs& inputs) {
  TrainContext ctx;
  ctx.corpus = &inputs.corpus;
  ctx.plan = &inputs.plan;
  ctx.vocab = &inputs.vocab;
  ctx.detector = &inputs.detector;
  ctx.model = cfg.model;
  ctx.model.vocab_size = inputs.vocab.size();
  ctx.adapter = cfg.adapter;
  ctx.generators = cfg.generator;
  ctx.trainer = cfg.trainer;
  ctx.rehearsal = cfg.rehearsal;
  ctx.seed = cfg.seed;
  ctx.validate();
  return ctx;
}

RetrievalModel retrieval_model(const SessionState& state, const TrainContext& ctx,
                               const BeamConfig& beam) {
  RetrievalModel rm;
  rm.shared = &state.params;
  for (const auto& [task, store] : state.task_params) rm.per_task[task] = &store;
  rm.model = ctx.model;
  rm.adapter = ctx.adapter;
  rm.vocab = ctx.vocab;
  rm.trie = &state.trie;
  rm.beam = beam;
  rm.max_input_tokens = ctx.trainer.max_input_tokens;
  return rm;
}

void run_sessions(const RunConfig& cfg, const TrainContext& ctx, PerformanceMatrix& m,
                  int first, int last, std::optional<SessionState> start,
                  const SessionHook& hook) {
  const int T = ctx.plan->T;
  if (first < 0 || last > T || first > last + 1) {
    throw ValidationError(fmt::format("bad session range {}..{} for T={}", first, last, T));
  }
  if (first > 0 && !start) throw Error("resuming needs the state of the previous session");
  if (first == 0 && start) throw Error("a fresh run starts without a state");
  SessionState state = start ? std::move(*start) : SessionState{};
  for (int t = first; t <= last; ++t) {
    const auto begin = std::chrono::steady_clock::now();
    state = t == 0 ? initial_phase(ctx) : continual_update(state, t, cfg.mode, ctx);
    const RetrievalModel rm = retrieval_model(state, ctx, cfg.decode);
    evaluate_session(m, t, *ctx.plan, rm);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    spdlog::info("session {} done in {:.1f}s", t, secs);
    if (hook) hook(state, m);
  }
}

void save_session(const SessionState& state, const fs::path& dir, const RunConfig& cfg,
                  const Vocabulary& vocab) {
  fs::create_directories(dir);
  ModelConfig model = cfg.model;
  model.vocab_size = vocab.size();
  const json meta = {{"session", state.t},
                     {"phase", std::string(phase_name(state.phase))},
                     {"mode", std::string(mode_name(state.mode))},
                     {"model", model_json(model)},
                     {"adapter", adapter_json(cfg.adapter)}};
  json artifacts = json::object();
  auto record = [&](const std::string& name) { artifacts[name] = file_fingerprint(dir / name); };

  save_checkpoint(state.params, dir / "model.ckpt", meta.dump());
  record("model.ckpt");
  json tasks = json::array();
  for (const auto& [task, store] : state.task_params) {
    const std::string name = "model." + std::string(task_name(task)) + ".ckpt";
    save_checkpoint(store, dir / name, meta.dump());
    record(name);
    tasks.push_back(std::string(task_name(task)));
  }
  state.trie.save(dir / "trie.txt");
  record("trie.txt");
  vocab.save(dir / "vocab.txt");
  record("vocab.txt");
  write_file_atomic(dir / "log.csv", log_csv(state.log, state.t));
  record("log.csv");
  std::string ex;
  for (const auto& d : state.exemplars) ex += d.str() + "\n";
  write_file_atomic(dir / "exemplars.txt", ex);
  record("exemplars.txt");
  if (cfg.rehearsal.dump_clusters && state.clusters) {
    write_cluster_dump(*state.clusters, dir / "clusters");
    record("clusters/clusters.csv");
    record("clusters/centroids.csv");
  }

  json manifest = meta;
  manifest["seed"] = state.seed;
  manifest["task_models"] = tasks;
  manifest["decode"] = {{"beam_width", cfg.decode.beam_width},
                        {"max_steps", cfg.decode.max_steps},
                        {"allow_multi_docid", cfg.decode.allow_multi_docid}};
  manifest["max_input_tokens"] = cfg.trainer.max_input_tokens;
  manifest["artifacts"] = artifacts;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedSession load_session(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw ValidationError("no session checkpoint in " + dir.string());
  }
  const json j = parse_json_file(dir / "manifest.json");
  LoadedSession out;
  try {
    out.model = model_from_json(j.at("model"));
    out.adapter = adapter_from_json(j.at("adapter"));
    const json& d = j.at("decode");
    out.decode.beam_width = d.at("beam_width").get<std::size_t>();
    out.decode.max_steps = d.at("max_steps").get<std::size_t>();
    out.decode.allow_multi_docid = d.at("allow_multi_docid").get<bool>();
    out.max_input_tokens = j.at("max_input_tokens").get<std::size_t>();
    out.state.t = j.at("session").get<int>();
    out.state.phase = parse_phase(j.at("phase").get<std::string>());
    out.state.mode = parse_mode(j.at("mode").get<std::string>());
    out.state.seed = j.at("seed").get<std::uint64_t>();
    out.vocab = Vocabulary::load(dir / "vocab.txt");
    out.state.params = load_checkpoint(dir / "model.ckpt");
    for (const auto& name : j.at("task_models")) {
      const TaskId task = require_task(name.get<std::string>());
      out.state.task_params[task] =
          load_checkpoint(dir / ("model." + name.get<std::string>() + ".ckpt"));
    }
  } catch (const json::exception& e) {
    throw ValidationError(dir.string() + "/manifest.json: " + e.what());
  }
  out.state.trie = DocidTrie::load(dir / "trie.txt", out.vocab);
  if (out.vocab.size() != out.model.vocab_size) {
    throw ValidationError(dir.string() + ": vocabulary size does not match the model");
  }
  return out;
}

std::string directory_fingerprint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) acc += f.generic_string() + ":" + file_fingerprint(dir / f) + "\n";
  return hex64(stable_hash(acc));
}

RunOutcome run_experiment(const RunConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (cfg.paths.corpus.empty() || cfg.paths.benchmark.empty() || cfg.paths.out.empty()) {
    throw ValidationError("paths.corpus, paths.benchmark and paths.out must be set");
  }
  if (!fs::exists(cfg.paths.corpus)) {
    throw ValidationError("corpus not found: " + cfg.paths.corpus.string());
  }
  if (!fs::exists(cfg.paths.benchmark / "plan.json")) {
    throw ValidationError("no benchmark in " + cfg.paths.benchmark.string() +
                          " (run build-benchmark first)");
  }
  const fs::path out = cfg.paths.out;
  const fs::path manifest_path = out / "manifest.json";

  json manifest = {{"tool_version", std::string(kToolVersion)},
                   {"config_path", opts.config_path.string()},
                   {"mode", std::string(mode_name(cfg.mode))},
                   {"seed", cfg.seed},
                   {"corpus_fingerprint", file_fingerprint(cfg.paths.corpus)},
                   {"benchmark_fingerprint", directory_fingerprint(cfg.paths.benchmark)},
                   {"config_fingerprint", config_fingerprint(cfg)},
                   {"sessions", json::array()},
                   {"artifacts", json::object()},
                   {"complete", false}};

  RunOutcome outcome;
  int first = 0;
  std::optional<SessionState> start;
  if (fs::exists(manifest_path)) {
    if (!opts.resume) {
      throw ValidationError(out.string() + " already holds a run; pass --resume or choose another --out");
    }
    const json old = parse_json_file(manifest_path);
    for (const char* key : {"mode", "seed", "corpus_fingerprint", "benchmark_fingerprint",
                            "config_fingerprint"}) {
      if (old.value(key, json()) != manifest[key]) {
        throw ValidationError(fmt::format("refusing to resume: {} differs from the recorded run", key));
      }
    }
    manifest["sessions"] = old.at("sessions");
    outcome.last_session = static_cast<int>(manifest["sessions"].size()) - 1;
    if (outcome.last_session >= 0) {
      PerformanceMatrix all = PerformanceMatrix::from_csv(read_file(out / "matrix.csv"));
      for (const auto& [key, v] : all.entries()) {
        const auto& [t, i, dataset] = key;
        if (t <= outcome.last_session) outcome.matrix.set(t, i, dataset, v);
      }
      start = load_session(out / session_dir_name(outcome.last_session)).state;
      first = outcome.last_session + 1;
    }
    spdlog::info("resuming after session {}", outcome.last_session);
  } else if (opts.resume) {
    throw ValidationError("nothing to resume in " + out.string());
  }

  ExperimentInputs inputs =
      prepare_inputs(load_corpus(cfg.paths.corpus), load_session_plan(cfg.paths.benchmark));
  const TrainContext ctx = make_context(cfg, inputs);
  const int T = inputs.plan.T;
  manifest["T"] = T;
  fs::create_directories(out);
  inputs.vocab.save(out / "vocab.txt");
  manifest["artifacts"]["vocab.txt"] = file_fingerprint(out / "vocab.txt");

  auto write_manifest = [&] { write_file_atomic(manifest_path, manifest.dump(2) + "\n"); };

  const int last =
      std::max(first - 1, opts.stop_after >= 0 ? std::min(opts.stop_after, T) : T);
  PerformanceMatrix& m = outcome.matrix;
  std::string timing = "session,seconds\n";
  auto clock = std::chrono::steady_clock::now();
  run_sessions(cfg, ctx, m, first, last, std::move(start),
               [&](const SessionState& state, const PerformanceMatrix& matrix) {
                 const fs::path dir = out / session_dir_name(state.t);
                 save_session(state, dir, cfg, inputs.vocab);
                 const json session_manifest = parse_json_file(dir / "manifest.json");
                 json artifacts = json::object();
                 for (const auto& [name, fp] : session_manifest.at("artifacts").items()) {
                   artifacts[session_dir_name(state.t) + "/" + name] = fp;
                 }
                 artifacts[session_dir_name(state.t) + "/manifest.json"] =
                     file_fingerprint(dir / "manifest.json");
                 manifest["sessions"].push_back(
                     {{"t", state.t}, {"dir", session_dir_name(state.t)}, {"artifacts", artifacts}});
                 write_file_atomic(out / "matrix.csv", matrix.to_csv());
                 manifest["artifacts"]["matrix.csv"] = file_fingerprint(out / "matrix.csv");
                 write_manifest();
                 const auto now = std::chrono::steady_clock::now();
                 timing += fmt::format("{},{:.3f}\n", state.t,
                                       std::chrono::duration<double>(now - clock).count());
                 clock = now;
                 outcome.last_session = state.t;
               });
  if (first <= last) write_file_atomic(out / "timing.csv", timing);

  if (outcome.last_session == T) {
    const std::string report =
        text_report(m, T, fmt::format("docstream run: mode {}, seed {}", mode_name(cfg.mode), cfg.seed));
    write_file_atomic(out / "report.txt", report);
    manifest["artifacts"]["report.txt"] = file_fingerprint(out / "report.txt");
    manifest["artifacts"]["matrix.csv"] = file_fingerprint(out / "matrix.csv");
    manifest["complete"] = true;
    outcome.complete = true;
  }
  write_manifest();
  return outcome;
}

std::vector<std::string> verify_run_manifest(const fs::path& out) {
  const json manifest = parse_json_file(out / "manifest.json");
  std::vector<std::string> bad;
  auto check = [&](const std::string& name, const json& fp) {
    const fs::path p = out / name;
    if (!fs::exists(p) || file_fingerprint(p) != fp.get<std::string>()) bad.push_back(name);
  };
  for (const auto& [name, fp] : manifest.at("artifacts").items()) check(name, fp);
  for (const auto& s : manifest.at("sessions")) {
    for (const auto& [name, fp] : s.at("artifacts").items()) check(name, fp);
  }
  return bad;
}

SessionPlan build_benchmark(const BenchmarkOptions& opts) {
  if (!(opts.base_fraction > 0.0 && opts.base_fraction < 1.0)) {
    throw ValidationError(fmt::format("base fraction must lie in (0, 1), got {}", opts.base_fraction));
  }
  if (opts.T < 1) throw ValidationError("T must be >= 1");
  if (!fs::exists(opts.corpus)) throw ValidationError("corpus not found: " + opts.corpus.string());
  if (opts.out.empty()) throw ValidationError("an output directory is required");
  const Corpus corpus = load_corpus(opts.corpus);
  std::vector<QueryExample> train, dev;
  json source;
  if (opts.train_queries.empty() && opts.dev_queries.empty()) {
    auto synth = make_synthetic_queries(corpus, opts.synthetic);
    train = std::move(synth.train);
    dev = std::move(synth.dev);
    source = {{"synthetic_seed", opts.synthetic.seed},
              {"train_per_doc", opts.synthetic.train_per_doc},
              {"dev_per_doc", opts.synthetic.dev_per_doc}};
  } else {
    if (opts.train_queries.empty() || opts.dev_queries.empty()) {
      throw ValidationError("give both train and dev query files, or neither");
    }
    for (const auto& p : {opts.train_queries, opts.dev_queries}) {
      if (!fs::exists(p)) throw ValidationError("query file not found: " + p.string());
    }
    train = load_queries(opts.train_queries);
    dev = load_queries(opts.dev_queries);
    source = {{"train_fingerprint", file_fingerprint(opts.train_queries)},
              {"dev_fingerprint", file_fingerprint(opts.dev_queries)}};
  }
  SessionPlan plan = build_session_plan(corpus, train, dev, opts.T, opts.base_fraction, opts.seed);
  save_session_plan(plan, opts.out);
  json files = json::object();
  for (const auto& e : fs::recursive_directory_iterator(opts.out)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), opts.out).generic_string();
    if (rel == "manifest.json") continue;
    files[rel] = file_fingerprint(e.path());
  }
  const json manifest = {{"tool_version", std::string(kToolVersion)},
                         {"corpus_fingerprint", file_fingerprint(opts.corpus)},
                         {"T", opts.T},
                         {"base_fraction", opts.base_fraction},
                         {"seed", opts.seed},
                         {"queries", source},
                         {"files", files}};
  write_file_atomic(opts.out / "manifest.json", manifest.dump(2) + "\n");
  return plan;
}

std::vector<QueryHit> query_session(const fs::path& session_dir, TaskId task,
                                    const std::string& text) {
  const LoadedSession s = load_session(session_dir);
  RetrievalModel rm;
  rm.shared = &s.state.params;
  for (const auto& [t, store] : s.state.task_params) rm.per_task[t] = &store;
  rm.model = s.model;
  rm.adapter = s.adapter;
  rm.vocab = &s.vocab;
  rm.trie = &s.state.trie;
  rm.beam = s.decode;
  rm.max_input_tokens = s.max_input_tokens;
  const RankedResult r = retrieve(rm, task, text);
  std::vector<QueryHit> hits;
  for (const auto& b : r.beams) hits.push_back({sequence_docids(s.state.trie, b.tokens), b.log_prob});
  return hits;
}

std::string format_hits(const std::vector<QueryHit>& hits) {
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::string titles;
    for (const auto& d : hits[i].docids) {
      if (!titles.empty()) titles += " | ";
      titles += d.str();
    }
    out += fmt::format("{}\t{:.4f}\t{}\n", i + 1, hits[i].log_prob, titles);
  }
  return out;
}

std::string report_run(const fs::path& out) {
  if (!fs::exists(out / "matrix.csv")) throw ValidationError("no matrix.csv in " + out.string());
  const PerformanceMatrix m = PerformanceMatrix::from_csv(read_file(out / "matrix.csv"));
  std::string title = "docstream run";
  if (fs::exists(out / "manifest.json")) {
    const json j = parse_json_file(out / "manifest.json");
    title = fmt::format("docstream run: mode {}, seed {}", j.value("mode", std::string("?")),
                        j.value("seed", std::uint64_t{0}));
  }
  if (m.last_session() < 0) throw ValidationError("matrix.csv is empty");
  return text_report(m, m.last_session(), title);
}

}  // namespace docstream
