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
#include <vector>

#include "docstream/corpus/corpus.hpp"
#include "docstream/kernels/matrix.hpp"

namespace docstream {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

struct RehearsalConfig {
  std::size_t n_per_doc = 1;
  std::size_t k_clusters = 0;  // 0: default_k_clusters(population)
  int max_iters = 20;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  // Writes clusters.csv / centroids.csv into each session directory.
  bool dump_clusters = false;

  void validate() const;
};

// Hashed character-trigram counts of "#title#", L2-normalised.
std::vector<double> embed_docid(const Docid& docid, std::size_t dim = kDefaultEmbeddingDim);
Matrix embed_docids(const std::vector<Docid>& docids, std::size_t dim = kDefaultEmbeddingDim);

struct ClusterModel {
  Matrix centroids;                    // k x dim
  std::vector<std::size_t> assignment; // per point
  std::vector<Docid> docids;           // per point; empty for raw point sets
  double inertia = 0.0;
  // Inertia after each Lloyd update, first entry after the first update.
  std::vector<double> inertia_history;
  int iterations = 0;
  bool converged = false;

  std::size_t k() const { return centroids.rows; }
  std::vector<std::vector<std::size_t>> members() const;
};

// Lloyd iterations from k-means++ seeding. Stops when an assignment step
// changes nothing or after max_iters updates. A cluster left empty is
// re-seeded with the point farthest from its centroid among clusters
// holding more than one point.
ClusterModel kmeans(const Matrix& points, std::size_t k, int max_iters, std::uint64_t seed);

ClusterModel cluster_docids(const std::vector<Docid>& docids, std::size_t k, int max_iters,
                            std::uint64_t seed, std::size_t dim = kDefaultEmbeddingDim);

// min(32, population / 4), at least 1.
std::size_t default_k_clusters(std::size_t population);

// For each new document in order: nearest centroid, then min(n_per_doc,
// remaining) members of that cluster drawn without replacement. Members
// drawn for one new document are not available to later ones in the same
// call. Result is sorted and duplicate-free.
std::vector<Docid> select_exemplars(const ClusterModel& model, const std::vector<Docid>& new_docs,
                                    std::size_t n_per_doc, std::uint64_t seed,
                                    std::vector<std::string>* warnings = nullptr);

// count old docids drawn uniformly without replacement, sorted.
std::vector<Docid> select_random_exemplars(const std::vector<Docid>& old_docs, std::size_t count,
                                           std::uint64_t seed);

// clusters.csv (docid,cluster) and centroids.csv (cluster,v0,v1,...).
void write_cluster_dump(const ClusterModel& model, const std::filesystem::path& dir);

}  // namespace docstream
