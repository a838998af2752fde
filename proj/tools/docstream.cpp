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

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "docstream/app/pipeline.hpp"
#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "docstream/common/rng.hpp"

using namespace docstream;

namespace {

int run_main(int argc, char** argv) {
  CLI::App app{"docstream: continual generative retrieval"};
  app.require_subcommand(1);

  SyntheticCorpusConfig synth;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth-corpus", "write a seeded synthetic corpus");
  c_synth->add_option("--docs", synth.num_docs, "number of documents")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  c_synth->add_option("--out", synth_out, "output corpus file")->required();

  BenchmarkOptions bench;
  std::string bench_corpus, bench_train, bench_dev, bench_out;
  auto* c_bench = app.add_subcommand("build-benchmark", "split a corpus into sessions");
  c_bench->add_option("--corpus", bench_corpus, "corpus file")->required();
  c_bench->add_option("--train", bench_train, "train queries (JSONL)");
  c_bench->add_option("--dev", bench_dev, "dev queries (JSONL)");
  c_bench->add_option("-T,--sessions", bench.T, "number of continual sessions")->capture_default_str();
  c_bench->add_option("--fraction", bench.base_fraction, "share of documents in D_0")
      ->capture_default_str();
  c_bench->add_option("--seed", bench.seed, "random seed")->capture_default_str();
  c_bench->add_option("--queries-per-doc", bench.synthetic.train_per_doc,
                      "synthetic train queries per document and dataset")
      ->capture_default_str();
  c_bench->add_option("--out", bench_out, "benchmark directory")->required();

  std::string config_path, out_dir, mode;
  std::optional<std::uint64_t> seed;
  bool resume = false;
  int stop_after = -1;
  auto* c_run = app.add_subcommand("run", "train and evaluate every session");
  c_run->add_option("--config", config_path, "run configuration (JSON)")->required();
  c_run->add_option("--seed", seed, "override the configured seed");
  c_run->add_option("--mode", mode, "override the configured training mode");
  c_run->add_option("--out", out_dir, "override the output directory");
  c_run->add_flag("--resume", resume, "continue an interrupted run");
  c_run->add_option("--stop-after", stop_after, "stop after this session");

  std::string session_dir, task, text;
  auto* c_query = app.add_subcommand("query", "answer one query with a session checkpoint");
  c_query->add_option("--session", session_dir, "session directory (sessions/t<k>)")->required();
  c_query->add_option("--task", task, "task name")->required();
  c_query->add_option("text", text, "query text")->required();

  std::string report_dir;
  auto* c_report = app.add_subcommand("report", "print the summary of a run directory");
  c_report->add_option("--out", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*c_synth) {
    save_corpus(make_synthetic_corpus(synth), synth_out);
  } else if (*c_bench) {
    bench.corpus = bench_corpus;
    bench.train_queries = bench_train;
    bench.dev_queries = bench_dev;
    bench.out = bench_out;
    bench.synthetic.seed = derive_seed(bench.seed, "synthetic.queries");
    const SessionPlan plan = build_benchmark(bench);
    for (std::size_t t = 0; t < plan.partitions.size(); ++t) {
      std::cout << "D_" << t << ": " << plan.partitions[t].size() << " documents\n";
    }
  } else if (*c_run) {
    RunConfig cfg = load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (!out_dir.empty()) cfg.paths.out = out_dir;
    RunOptions opts;
    opts.config_path = config_path;
    opts.resume = resume;
    opts.stop_after = stop_after;
    const RunOutcome outcome = run_experiment(cfg, opts);
    if (outcome.complete) {
      std::cout << read_file(cfg.paths.out / "report.txt");
    } else {
      std::cout << "stopped after session " << outcome.last_session << "\n";
    }
  } else if (*c_query) {
    const TaskId t = require_task(task);
    std::cout << format_hits(query_session(session_dir, t, text));
  } else if (*c_report) {
    std::cout << report_run(report_dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  try {
    return run_main(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
