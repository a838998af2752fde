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

#include "docstream/eval/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "docstream/common/error.hpp"
#include "docstream/corpus/task.hpp"

namespace docstream {

double r_precision(const std::vector<Docid>& provenance, const std::vector<Docid>& ranked) {
  if (provenance.empty()) throw ValidationError("r_precision: empty provenance");
  const std::set<Docid> gold(provenance.begin(), provenance.end());
  const std::size_t R = gold.size();
  std::size_t r = 0;
  for (std::size_t k = 0; k < std::min(R, ranked.size()); ++k) {
    if (gold.contains(ranked[k])) ++r;
  }
  return static_cast<double>(r) / static_cast<double>(R);
}

void PerformanceMatrix::set(int t, int i, const std::string& dataset, double value) {
  if (i < 0 || t < i) {
    throw Error(fmt::format("performance cell ({}, {}) is undefined: need 0 <= i <= t", t, i));
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(fmt::format("performance value {} outside [0, 1]", value));
  }
  entries_[{t, i, dataset}] = value;
}

std::optional<double> PerformanceMatrix::get(int t, int i, const std::string& dataset) const {
  auto it = entries_.find({t, i, dataset});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool PerformanceMatrix::has(int t, int i) const { return !datasets_at(t, i).empty(); }

std::vector<std::string> PerformanceMatrix::datasets_at(int t, int i) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound({t, i, std::string()});
       it != entries_.end() && std::get<0>(it->first) == t && std::get<1>(it->first) == i; ++it) {
    out.push_back(std::get<2>(it->first));
  }
  return out;
}

std::vector<std::string> PerformanceMatrix::datasets() const {
  std::set<std::string> s;
  for (const auto& [key, v] : entries_) s.insert(std::get<2>(key));
  return {s.begin(), s.end()};
}

int PerformanceMatrix::last_session() const {
  int t = -1;
  for (const auto& [key, v] : entries_) t = std::max(t, std::get<0>(key));
  return t;
}

double PerformanceMatrix::averaged(int t, int i) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ds : datasets_at(t, i)) {
    sum += *get(t, i, ds);
    ++n;
  }
  if (n == 0) throw Error(fmt::format("performance cell ({}, {}) is missing", t, i));
  return sum / static_cast<double>(n);
}

std::string PerformanceMatrix::to_csv() const {
  std::string out = "t,i,dataset,value\n";
  for (const auto& [key, v] : entries_) {
    out += fmt::format("{},{},{},{:.17g}\n", std::get<0>(key), std::get<1>(key), std::get<2>(key), v);
  }
  return out;
}

PerformanceMatrix PerformanceMatrix::from_csv(const std::string& text) {
  PerformanceMatrix m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 4) throw ParseError("expected 4 columns t,i,dataset,value", lineno);
    try {
      m.set(std::stoi(f[0]), std::stoi(f[1]), f[2], std::stod(f[3]));
    } catch (const std::logic_error&) {
      throw ParseError("bad number in matrix row", lineno);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return m;
}

double vp(const PerformanceMatrix& m, int t, const VpScope& scope) {
  if (scope.kind == VpScope::Kind::dataset) {
    const auto v = m.get(t, t, scope.name);
    if (!v) throw Error(fmt::format("missing entry P[{}][{}][{}]", t, t, scope.name));
    return *v;
  }
  std::optional<TaskId> task;
  if (scope.kind == VpScope::Kind::task) task = require_task(scope.name);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ds : m.datasets_at(t, t)) {
    if (task) {
      const DatasetInfo* info = find_dataset(ds);
      if (info == nullptr || info->task != *task) continue;
    }
    sum += *m.get(t, t, ds);
    ++n;
  }
  if (n == 0) {
    throw Error(fmt::format("no entries P[{}][{}][.] for scope {}", t, t,
                            scope.name.empty() ? "all" : scope.name));
  }
  return sum / static_cast<double>(n);
}

SummaryMetrics summary_metrics(const PerformanceMatrix& m, int T) {
  if (T < 1) throw Error("summary metrics need at least one incremental session");
  std::vector<std::string> missing;
  for (int i = 0; i <= T; ++i) {
    const auto expected = m.datasets_at(i, i);
    for (int t = i; t <= T; ++t) {
      if (!m.has(t, i)) {
        missing.push_back(fmt::format("({}, {})", t, i));
      } else if (m.datasets_at(t, i) != expected) {
        throw Error(fmt::format("cell ({}, {}) covers different datasets than ({}, {})", t, i, i, i));
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : " ") + s;
    throw Error("performance matrix incomplete, missing " + list);
  }
  SummaryMetrics s;
  for (int i = 0; i <= T; ++i) s.ap += m.averaged(T, i);
  s.ap /= static_cast<double>(T + 1);
  for (int i = 0; i < T; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int t = i; t < T; ++t) best = std::max(best, m.averaged(t, i) - m.averaged(T, i));
    s.bwt += best;
  }
  s.bwt /= static_cast<double>(T);
  for (int t = 1; t <= T; ++t) s.fwt += m.averaged(t, t);
  s.fwt /= static_cast<double>(T);
  return s;
}

std::string text_report(const PerformanceMatrix& m, int T, const std::string& title) {
  std::string out;
  if (!title.empty()) out += title + "\n";
  std::vector<std::string> task_cols;
  for (TaskId task : kAllTasks) task_cols.emplace_back(task_name(task));

  out += fmt::format("{:<8}{:>8}", "session", "VP");
  for (const auto& c : task_cols) out += fmt::format("{:>16}", c);
  out += "\n";
  for (int t = 0; t <= T; ++t) {
    if (!m.has(t, t)) {
      out += fmt::format("{:<8}{:>8}\n", t, "-");
      continue;
    }
    out += fmt::format("{:<8}{:>8.2f}", t, 100.0 * vp(m, t, VpScope::all()));
    for (const auto& c : task_cols) {
      try {
        out += fmt::format("{:>16.2f}", 100.0 * vp(m, t, VpScope::task(c)));
      } catch (const Error&) {
        out += fmt::format("{:>16}", "-");
      }
    }
    out += "\n";
  }
  if (T >= 1) {
    try {
      const SummaryMetrics s = summary_metrics(m, T);
      out += fmt::format("AP  {:.2f}\nBWT {:.2f}  (forgetting; lower is better)\nFWT {:.2f}\n",
                         100.0 * s.ap, 100.0 * s.bwt, 100.0 * s.fwt);
    } catch (const Error& e) {
      out += std::string("summary unavailable: ") + e.what() + "\n";
    }
  }
  return out;
}

}  // namespace docstream
