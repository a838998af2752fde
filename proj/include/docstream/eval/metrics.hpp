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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "docstream/corpus/corpus.hpp"

namespace docstream {

// r / R with R = |provenance| and r the provenance members among the top
// R ranked docids.
double r_precision(const std::vector<Docid>& provenance, const std::vector<Docid>& ranked);

// P[t][i][dataset]: model after session t on the test set of session i.
// Only i <= t cells exist; absent cells stay absent.
class PerformanceMatrix {
 public:
  void set(int t, int i, const std::string& dataset, double value);
  std::optional<double> get(int t, int i, const std::string& dataset) const;
  bool has(int t, int i) const;
  // Datasets with a value in cell (t, i), sorted.
  std::vector<std::string> datasets_at(int t, int i) const;
  std::vector<std::string> datasets() const;
  int last_session() const;  // -1 when empty

  // Mean over the datasets present in (t, i). Throws when none is.
  double averaged(int t, int i) const;

  std::size_t size() const { return entries_.size(); }
  const std::map<std::tuple<int, int, std::string>, double>& entries() const { return entries_; }

  // Columns t,i,dataset,value; rows in (t, i, dataset) order; values %.17g.
  std::string to_csv() const;
  static PerformanceMatrix from_csv(const std::string& text);
  bool operator==(const PerformanceMatrix&) const = default;

 private:
  std::map<std::tuple<int, int, std::string>, double> entries_;
};

struct VpScope {
  enum class Kind { dataset, task, all } kind = Kind::all;
  std::string name;  // dataset or task name

  static VpScope dataset(std::string n) { return {Kind::dataset, std::move(n)}; }
  static VpScope task(std::string n) { return {Kind::task, std::move(n)}; }
  static VpScope all() { return {}; }
};

// Dataset scope reads P[t][t][name]; task and all scopes average the
// datasets of cell (t, t) that fall in scope. Throws when nothing does.
double vp(const PerformanceMatrix& m, int t, const VpScope& scope);

struct SummaryMetrics {
  double ap = 0.0;
  double bwt = 0.0;
  double fwt = 0.0;
};

// Over sessions 0..T with P_{t,i} the dataset average of cell (t, i).
// AP = mean_i P_{T,i}; BWT = mean_{i<T} max_{t<T} (P_{t,i} - P_{T,i});
// FWT = mean_{t>=1} P_{t,t}. BWT is a forgetting measure: lower is better.
// Throws when a cell is missing, when T < 1, or when column i does not
// cover the same datasets in every row.
SummaryMetrics summary_metrics(const PerformanceMatrix& m, int T);

// Plain-text table: VP per session and the three summary numbers.
std::string text_report(const PerformanceMatrix& m, int T, const std::string& title = "");

}  // namespace docstream
