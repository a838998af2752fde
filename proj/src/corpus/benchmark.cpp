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

#include "docstream/corpus/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>
#include <unordered_map>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "docstream/common/rng.hpp"

namespace docstream {

using nlohmann::json;

std::vector<QueryExample> load_queries(const std::filesystem::path& path) {
  std::vector<QueryExample> out;
  for_each_line(path, [&](std::string_view line, std::size_t n) {
    try {
      json j = json::parse(line);
      QueryExample q;
      q.query_id = j.at("query_id").get<std::string>();
      q.dataset = j.at("dataset").get<std::string>();
      q.task = require_task(j.at("task").get<std::string>());
      if (task_of_dataset(q.dataset) != q.task) {
        throw ValidationError("dataset " + q.dataset + " does not belong to task " +
                              std::string(task_name(q.task)));
      }
      q.query_text = j.at("query").get<std::string>();
      for (const auto& p : j.at("provenance")) {
        q.provenance.emplace_back(p.get<std::string>());
      }
      if (q.provenance.empty()) throw ValidationError("empty provenance");
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": malformed query: " + e.what(), n);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(path.string() + ": " + e.what(), n);
    }
  });
  return out;
}

void save_queries(const std::vector<QueryExample>& queries,
                  const std::filesystem::path& path) {
  std::string out;
  for (const auto& q : queries) {
    json prov = json::array();
    for (const auto& p : q.provenance) prov.push_back(p.str());
    json j = {{"query_id", q.query_id},
              {"dataset", q.dataset},
              {"task", std::string(task_name(q.task))},
              {"query", q.query_text},
              {"provenance", prov}};
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

Partitions split_sessions(const Corpus& corpus, int T, double base_fraction,
                          std::uint64_t seed) {
  if (T < 1) throw ValidationError("T must be >= 1");
  if (!(base_fraction > 0.0 && base_fraction < 1.0)) {
    throw ValidationError("base_fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  if (n < static_cast<std::size_t>(T) + 1) {
    throw ValidationError("corpus has " + std::to_string(n) +
                          " documents; need at least T+1 = " +
                          std::to_string(T + 1));
  }
  const auto base = static_cast<std::size_t>(std::llround(base_fraction * n));
  if (base == 0) throw ValidationError("base partition would be empty");

  std::vector<Docid> ids = corpus.docids();
  Rng rng(derive_seed(seed, "corpus.split"));
  rng.shuffle(ids);

  Partitions parts(static_cast<std::size_t>(T) + 1);
  parts[0].assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(base));
  const std::size_t rest = n - base;
  const std::size_t each = rest / T;
  const std::size_t extra = rest % T;
  std::size_t pos = base;
  for (int t = 1; t <= T; ++t) {
    std::size_t size = each + (static_cast<std::size_t>(t - 1) < extra ? 1 : 0);
    parts[t].assign(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                    ids.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return parts;
}

namespace {

class PartitionIndex {
 public:
  explicit PartitionIndex(const Partitions& parts) {
    for (std::size_t t = 0; t < parts.size(); ++t) {
      for (const auto& d : parts[t]) session_.emplace(d.str(), static_cast<int>(t));
    }
  }

  int availability(const QueryExample& ex) const {
    int worst = -1;
    for (const auto& doc : ex.provenance) {
      auto it = session_.find(doc.str());
      if (it == session_.end()) return -1;
      worst = std::max(worst, it->second);
    }
    return worst;
  }

 private:
  std::unordered_map<std::string, int> session_;
};

}  // namespace

int availability_session(const QueryExample& ex, const Partitions& parts) {
  return PartitionIndex(parts).availability(ex);
}

std::vector<QueryExample> filter_examples(const std::vector<QueryExample>& examples,
                                          const Partitions& parts, int session) {
  PartitionIndex index(parts);
  std::vector<QueryExample> out;
  for (const auto& ex : examples) {
    if (index.availability(ex) == session) out.push_back(ex);
  }
  return out;
}

std::vector<Docid> SessionPlan::pool(int session) const {
  std::vector<Docid> out;
  for (int t = 0; t <= session && t < static_cast<int>(partitions.size()); ++t) {
    out.insert(out.end(), partitions[t].begin(), partitions[t].end());
  }
  return out;
}

std::vector<QueryExample> SessionPlan::test_queries(int session) const {
  std::vector<QueryExample> out;
  for (const auto& [key, qs] : test_sets) {
    if (key.first == session) out.insert(out.end(), qs.begin(), qs.end());
  }
  return out;
}

std::vector<std::string> SessionPlan::datasets() const {
  std::set<std::string> names;
  for (const auto& [key, qs] : test_sets) names.insert(key.second);
  // Keep the canonical KILT order, unknown names last.
  std::vector<std::string> out;
  for (const auto& d : kDatasets) {
    if (names.erase(std::string(d.name))) out.emplace_back(d.name);
  }
  out.insert(out.end(), names.begin(), names.end());
  return out;
}

SessionPlan build_session_plan(const Corpus& corpus,
                               const std::vector<QueryExample>& train,
                               const std::vector<QueryExample>& dev, int T,
                               double base_fraction, std::uint64_t seed) {
  SessionPlan plan;
  plan.T = T;
  plan.base_fraction = base_fraction;
  plan.seed = seed;
  plan.partitions = split_sessions(corpus, T, base_fraction, seed);
  plan.train_pairs_r0 = filter_examples(train, plan.partitions, 0);
  for (int i = 0; i <= T; ++i) {
    for (auto& ex : filter_examples(dev, plan.partitions, i)) {
      plan.test_sets[{i, ex.dataset}].push_back(std::move(ex));
    }
  }
  return plan;
}

void save_session_plan(const SessionPlan& plan, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "partitions");
  json parts_j = json::array();
  for (std::size_t t = 0; t < plan.partitions.size(); ++t) {
    std::string body;
    json titles = json::array();
    for (const auto& d : plan.partitions[t]) {
      body += d.str();
      body += '\n';
      titles.push_back(d.str());
    }
    const std::string name = "partitions/d" + std::to_string(t) + ".txt";
    write_file_atomic(dir / name, body);
    parts_j.push_back(titles);
  }
  save_queries(plan.train_pairs_r0, dir / "r0.jsonl");
  json tests = json::object();
  for (int i = 0; i <= plan.T; ++i) {
    const std::string name = "q" + std::to_string(i) + ".jsonl";
    save_queries(plan.test_queries(i), dir / name);
    tests[std::to_string(i)] = name;
  }
  json j = {{"T", plan.T},
            {"base_fraction", plan.base_fraction},
            {"seed", plan.seed},
            {"partitions", parts_j},
            {"train_file", "r0.jsonl"},
            {"test_files", tests}};
  write_file_atomic(dir / "plan.json", j.dump(2) + "\n");
}

SessionPlan load_session_plan(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "plan.json"));
  } catch (const json::exception& e) {
    throw ValidationError("malformed plan.json: " + std::string(e.what()));
  }
  SessionPlan plan;
  plan.T = j.at("T").get<int>();
  plan.base_fraction = j.at("base_fraction").get<double>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& titles : j.at("partitions")) {
    std::vector<Docid> part;
    for (const auto& t : titles) part.emplace_back(t.get<std::string>());
    plan.partitions.push_back(std::move(part));
  }
  plan.train_pairs_r0 = load_queries(dir / j.at("train_file").get<std::string>());
  for (auto& [key, file] : j.at("test_files").items()) {
    const int i = std::stoi(key);
    for (auto& ex : load_queries(dir / file.get<std::string>())) {
      plan.test_sets[{i, ex.dataset}].push_back(std::move(ex));
    }
  }
  return plan;
}

}  // namespace docstream
