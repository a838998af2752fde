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

#include "docstream/rehearsal/rehearsal.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "docstream/common/rng.hpp"
#include "docstream/kernels/kernels.hpp"

namespace docstream {

void RehearsalConfig::validate() const {
  if (max_iters < 1) throw ValidationError("rehearsal: max_iters must be >= 1");
  if (embedding_dim < 1) throw ValidationError("rehearsal: embedding_dim must be >= 1");
}

std::vector<double> embed_docid(const Docid& docid, std::size_t dim) {
  if (dim == 0) throw ValidationError("embedding dimension must be >= 1");
  const std::string s = "#" + docid.str() + "#";
  std::vector<double> v(dim, 0.0);
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
    v[stable_hash(std::string_view(s).substr(i, 3)) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

Matrix embed_docids(const std::vector<Docid>& docids, std::size_t dim) {
  Matrix m(docids.size(), dim);
  for (std::size_t i = 0; i < docids.size(); ++i) {
    const auto v = embed_docid(docids[i], dim);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

std::vector<std::vector<std::size_t>> ClusterModel::members() const {
  std::vector<std::vector<std::size_t>> out(k());
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Matrix plus_plus_seeds(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows;
  Matrix centroids(k, points.cols);
  std::vector<bool> chosen(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.uniform_index(n);
  for (std::size_t c = 0; c < k; ++c) {
    chosen[pick] = true;
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    if (c + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], dist2(points.row(i), centroids.row(c)));
      if (!chosen[i]) total += best[i];
    }
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        pick = i;
        u -= best[i];
        if (u < 0.0) break;
      }
    } else {
      // Remaining points coincide with chosen ones: pick any unchosen index.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      pick = rest[rng.uniform_index(rest.size())];
    }
  }
  return centroids;
}

void reseed_empty(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& assignment) {
  const std::size_t k = centroids.rows;
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assignment) ++counts[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = points.rows;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      if (counts[assignment[i]] < 2) continue;
      const double d = dist2(points.row(i), centroids.row(assignment[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --counts[assignment[far]];
    assignment[far] = c;
    counts[c] = 1;
    std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(c).begin());
  }
}

void update_centroids(const Matrix& points, Matrix& centroids,
                      const std::vector<std::size_t>& assignment) {
  std::vector<std::size_t> counts(centroids.rows, 0);
  centroids.fill(0.0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    auto c = centroids.row(assignment[i]);
    auto p = points.row(i);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += p[j];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    for (double& v : centroids.row(c)) v /= static_cast<double>(counts[c]);
  }
}

}  // namespace

ClusterModel kmeans(const Matrix& points, std::size_t k, int max_iters, std::uint64_t seed) {
  if (points.rows == 0) throw ValidationError("kmeans: no points");
  if (k < 1 || k > points.rows) {
    throw ValidationError("kmeans: k_clusters " + std::to_string(k) + " must lie in [1, " +
                          std::to_string(points.rows) + "]");
  }
  if (max_iters < 1) throw ValidationError("kmeans: max_iters must be >= 1");
  Rng rng(derive_seed(seed, "rehearsal.kmeans"));

  ClusterModel model;
  model.centroids = plus_plus_seeds(points, k, rng);
  std::vector<std::size_t> next(points.rows);
  std::vector<double> d2(points.rows);
  for (int iter = 0; iter < max_iters; ++iter) {
    kernels::assign_nearest(points, model.centroids, next, d2);
    if (iter > 0 && next == model.assignment) {
      model.converged = true;
      break;
    }
    model.assignment = next;
    reseed_empty(points, model.centroids, model.assignment);
    update_centroids(points, model.centroids, model.assignment);
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      inertia += dist2(points.row(i), model.centroids.row(model.assignment[i]));
    }
    model.inertia = inertia;
    model.inertia_history.push_back(inertia);
    model.iterations = iter + 1;
  }
  return model;
}

ClusterModel cluster_docids(const std::vector<Docid>& docids, std::size_t k, int max_iters,
                            std::uint64_t seed, std::size_t dim) {
  ClusterModel model = kmeans(embed_docids(docids, dim), k, max_iters, seed);
  model.docids = docids;
  return model;
}

std::size_t default_k_clusters(std::size_t population) {
  return std::max<std::size_t>(1, std::min<std::size_t>(32, population / 4));
}

std::vector<Docid> select_exemplars(const ClusterModel& model, const std::vector<Docid>& new_docs,
                                    std::size_t n_per_doc, std::uint64_t seed,
                                    std::vector<std::string>* warnings) {
  if (model.docids.size() != model.assignment.size()) {
    throw Error("select_exemplars: cluster model has no docids");
  }
  std::vector<Docid> picked;
  if (n_per_doc == 0 || new_docs.empty()) return picked;

  auto pools = model.members();
  std::vector<bool> originally_empty(pools.size());
  for (std::size_t c = 0; c < pools.size(); ++c) originally_empty[c] = pools[c].empty();

  const std::size_t dim = model.centroids.cols;
  Rng rng(derive_seed(seed, "rehearsal.exemplars"));
  for (const Docid& doc : new_docs) {
    const auto v = embed_docid(doc, dim);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best_nonempty = pools.size();
    double best_nonempty_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.k(); ++c) {
      const double d = dist2(v, model.centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
      if (!originally_empty[c] && d < best_nonempty_d) {
        best_nonempty_d = d;
        best_nonempty = c;
      }
    }
    if (originally_empty[best]) {
      const std::string msg = "cluster " + std::to_string(best) + " nearest to \"" + doc.str() +
                              "\" is empty; using cluster " + std::to_string(best_nonempty);
      spdlog::warn("{}", msg);
      if (warnings) warnings->push_back(msg);
      best = best_nonempty;
      if (best == pools.size()) continue;
    }
    auto& pool = pools[best];
    const std::size_t take = std::min(n_per_doc, pool.size());
    for (std::size_t j = 0; j < take; ++j) {
      const std::size_t r = j + rng.uniform_index(pool.size() - j);
      std::swap(pool[j], pool[r]);
      picked.push_back(model.docids[pool[j]]);
    }
    pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  return picked;
}

std::vector<Docid> select_random_exemplars(const std::vector<Docid>& old_docs, std::size_t count,
                                           std::uint64_t seed) {
  Rng rng(derive_seed(seed, "rehearsal.random"));
  std::vector<Docid> out;
  for (std::size_t i : rng.sample_distinct(old_docs.size(), std::min(count, old_docs.size()))) {
    out.push_back(old_docs[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_cluster_dump(const ClusterModel& model, const std::filesystem::path& dir) {
  std::string clusters = "docid,cluster\n";
  for (std::size_t i = 0; i < model.assignment.size(); ++i) {
    const std::string name = i < model.docids.size() ? model.docids[i].str() : std::to_string(i);
    clusters += csv_field(name) + "," + std::to_string(model.assignment[i]) + "\n";
  }
  std::string centroids = "cluster";
  for (std::size_t j = 0; j < model.centroids.cols; ++j) centroids += ",v" + std::to_string(j);
  centroids += "\n";
  for (std::size_t c = 0; c < model.k(); ++c) {
    centroids += std::to_string(c);
    for (double v : model.centroids.row(c)) centroids += fmt::format(",{:.17g}", v);
    centroids += "\n";
  }
  write_file_atomic(dir / "clusters.csv", clusters);
  write_file_atomic(dir / "centroids.csv", centroids);
}

}  // namespace docstream
