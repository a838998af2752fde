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

#include "docstream/model/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "docstream/kernels/kernels.hpp"

namespace docstream::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.own = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::external(const Matrix& storage, bool requires_grad) {
  Node n;
  n.ext = &storage;
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::push(Matrix value, std::span<const Var> parents, BackwardFn fn) {
  Node n;
  n.own = std::move(value);
  if (grad_enabled_) {
    for (Var p : parents) n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.ext ? *n.ext : n.own;
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) {
    const Matrix& val = value(v);
    n.grad = Matrix(val.rows, val.cols);
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  if (!nodes_[v.id].requires_grad) return;
  Matrix& buf = grad_buffer(v);
  require(buf.same_shape(g), "accumulate: gradient shape mismatch");
  add_into(buf, g);
}

void Tape::backward(Var loss) {
  require(value(loss).rows == 1 && value(loss).cols == 1, "backward: loss must be 1x1");
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss).data[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

Var matmul(Tape& t, Var a, Var b) {
  Matrix out;
  kernels::gemm(t.value(a), t.value(b), out);
  const Var parents[] = {a, b};
  return t.push(std::move(out), parents, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) kernels::gemm_nt(g, tp.value(b), tp.grad_buffer(a), true);
    if (tp.requires_grad(b)) kernels::gemm_tn(tp.value(a), g, tp.grad_buffer(b), true);
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  Matrix out;
  kernels::gemm_nt(t.value(a), t.value(b), out);
  const Var parents[] = {a, b};
  return t.push(std::move(out), parents, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) kernels::gemm(g, tp.value(b), tp.grad_buffer(a), true);
    if (tp.requires_grad(b)) kernels::gemm_tn(g, tp.value(a), tp.grad_buffer(b), true);
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& va = t.value(a);
  const Matrix& vb = t.value(b);
  require(va.same_shape(vb), "add: shape mismatch");
  Matrix out = va;
  add_into(out, vb);
  const Var parents[] = {a, b};
  return t.push(std::move(out), parents, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var add_row(Tape& t, Var a, Var bias) {
  const Matrix& va = t.value(a);
  const Matrix& vb = t.value(bias);
  require(vb.rows == 1 && vb.cols == va.cols, "add_row: bias shape mismatch");
  Matrix out = va;
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += vb.data[c];
  }
  const Var parents[] = {a, bias};
  return t.push(std::move(out), parents, [a, bias](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(bias)) {
      Matrix& gb = tp.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) gb.data[c] += g(r, c);
      }
    }
  });
}

Var gelu(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double v = x.data[i];
    out.data[i] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  const Var parents[] = {a};
  return t.push(std::move(out), parents, [a](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(a);
    Matrix& ga = tp.grad_buffer(a);
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    for (std::size_t i = 0; i < xv.data.size(); ++i) {
      const double v = xv.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      ga.data[i] += g.data[i] * (cdf + v * pdf);
    }
  });
}

Var layer_norm(Tape& t, Var x, Var scale, Var shift, double eps) {
  const Matrix& xv = t.value(x);
  const Matrix& gamma = t.value(scale);
  const Matrix& beta = t.value(shift);
  require(gamma.rows == 1 && gamma.cols == xv.cols && beta.same_shape(gamma),
          "layer_norm: parameter shape mismatch");
  const std::size_t n = xv.rows;
  const std::size_t d = xv.cols;
  Matrix normed(n, d);
  std::vector<double> inv_std(n);
  Matrix out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += xv(r, c);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double z = xv(r, c) - mean;
      var += z * z;
    }
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      normed(r, c) = (xv(r, c) - mean) * inv_std[r];
      out(r, c) = gamma.data[c] * normed(r, c) + beta.data[c];
    }
  }
  const Var parents[] = {x, scale, shift};
  return t.push(std::move(out), parents,
                [x, scale, shift, normed = std::move(normed), inv_std = std::move(inv_std)](
                    Tape& tp, const Matrix& g) {
                  const std::size_t rows = normed.rows;
                  const std::size_t cols = normed.cols;
                  if (tp.requires_grad(scale) || tp.requires_grad(shift)) {
                    Matrix gs(1, cols), gb(1, cols);
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t c = 0; c < cols; ++c) {
                        gs.data[c] += g(r, c) * normed(r, c);
                        gb.data[c] += g(r, c);
                      }
                    }
                    tp.accumulate(scale, gs);
                    tp.accumulate(shift, gb);
                  }
                  if (!tp.requires_grad(x)) return;
                  const Matrix& gamma_v = tp.value(scale);
                  Matrix& gx = tp.grad_buffer(x);
                  std::vector<double> gn(cols);
                  for (std::size_t r = 0; r < rows; ++r) {
                    double mean_g = 0.0;
                    double mean_gx = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) {
                      gn[c] = g(r, c) * gamma_v.data[c];
                      mean_g += gn[c];
                      mean_gx += gn[c] * normed(r, c);
                    }
                    mean_g /= static_cast<double>(cols);
                    mean_gx /= static_cast<double>(cols);
                    for (std::size_t c = 0; c < cols; ++c) {
                      gx(r, c) += inv_std[r] * (gn[c] - mean_g - normed(r, c) * mean_gx);
                    }
                  }
                });
}

Var attention(Tape& t, Var q, Var k, Var v, std::size_t heads, bool causal) {
  const Matrix& qv = t.value(q);
  const Matrix& kv = t.value(k);
  const Matrix& vv = t.value(v);
  require(qv.cols == kv.cols && kv.same_shape(vv), "attention: shape mismatch");
  require(heads > 0 && qv.cols % heads == 0, "attention: width not divisible by heads");
  require(!causal || qv.rows == kv.rows, "attention: causal mask needs square scores");
  const std::size_t n = qv.rows;
  const std::size_t m = kv.rows;
  const std::size_t dh = qv.cols / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // probs[h] is n x m.
  std::vector<Matrix> probs(heads, Matrix(n, m));
  Matrix out(n, qv.cols);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    Matrix& p = probs[h];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t limit = causal ? i + 1 : m;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += qv(i, off + c) * kv(j, off + c);
        p(i, j) = s * scale;
        mx = std::max(mx, p(i, j));
      }
      double z = 0.0;
      for (std::size_t j = 0; j < limit; ++j) {
        p(i, j) = std::exp(p(i, j) - mx);
        z += p(i, j);
      }
      for (std::size_t j = 0; j < limit; ++j) p(i, j) /= z;
      for (std::size_t j = limit; j < m; ++j) p(i, j) = 0.0;
      for (std::size_t j = 0; j < limit; ++j) {
        const double w = p(i, j);
        for (std::size_t c = 0; c < dh; ++c) out(i, off + c) += w * vv(j, off + c);
      }
    }
  }
  const Var parents[] = {q, k, v};
  return t.push(std::move(out), parents,
                [q, k, v, heads, dh, scale, probs = std::move(probs)](Tape& tp,
                                                                      const Matrix& g) {
                  const Matrix& qm = tp.value(q);
                  const Matrix& km = tp.value(k);
                  const Matrix& vm = tp.value(v);
                  const std::size_t rows = qm.rows;
                  const std::size_t keys = km.rows;
                  Matrix gq(qm.rows, qm.cols), gk(km.rows, km.cols), gv(vm.rows, vm.cols);
                  std::vector<double> dp(keys);
                  for (std::size_t h = 0; h < heads; ++h) {
                    const std::size_t off = h * dh;
                    const Matrix& p = probs[h];
                    for (std::size_t i = 0; i < rows; ++i) {
                      double dot = 0.0;
                      for (std::size_t j = 0; j < keys; ++j) {
                        const double pij = p(i, j);
                        if (pij == 0.0) {
                          dp[j] = 0.0;
                          continue;
                        }
                        double s = 0.0;
                        for (std::size_t c = 0; c < dh; ++c) {
                          s += g(i, off + c) * vm(j, off + c);
                          gv(j, off + c) += pij * g(i, off + c);
                        }
                        dp[j] = s;
                        dot += s * pij;
                      }
                      for (std::size_t j = 0; j < keys; ++j) {
                        const double pij = p(i, j);
                        if (pij == 0.0) continue;
                        const double ds = pij * (dp[j] - dot) * scale;
                        for (std::size_t c = 0; c < dh; ++c) {
                          gq(i, off + c) += ds * km(j, off + c);
                          gk(j, off + c) += ds * qm(i, off + c);
                        }
                      }
                    }
                  }
                  tp.accumulate(q, gq);
                  tp.accumulate(k, gk);
                  tp.accumulate(v, gv);
                });
}

Var gather_rows(Tape& t, Var table, std::span<const int> ids) {
  const Matrix& tv = t.value(table);
  Matrix out(ids.size(), tv.cols);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && static_cast<std::size_t>(ids[r]) < tv.rows,
            "gather_rows: id out of range");
    auto src = tv.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  const Var parents[] = {table};
  return t.push(std::move(out), parents,
                [table, idv = std::vector<int>(ids.begin(), ids.end())](Tape& tp,
                                                                        const Matrix& g) {
                  Matrix& gt = tp.grad_buffer(table);
                  for (std::size_t r = 0; r < idv.size(); ++r) {
                    auto dst = gt.row(static_cast<std::size_t>(idv[r]));
                    auto src = g.row(r);
                    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                  }
                });
}

Var slice_rows(Tape& t, Var a, std::size_t start, std::size_t count) {
  const Matrix& av = t.value(a);
  require(start + count <= av.rows, "slice_rows: range out of bounds");
  Matrix out(count, av.cols);
  std::copy(av.data.begin() + static_cast<std::ptrdiff_t>(start * av.cols),
            av.data.begin() + static_cast<std::ptrdiff_t>((start + count) * av.cols),
            out.data.begin());
  const Var parents[] = {a};
  return t.push(std::move(out), parents, [a, start](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[start * g.cols + i] += g.data[i];
  });
}

Var cross_entropy(Tape& t, Var logits, std::span<const int> targets, double eps) {
  const Matrix& lv = t.value(logits);
  require(lv.rows == targets.size() && lv.rows > 0, "cross_entropy: target count mismatch");
  const std::size_t n = lv.rows;
  const std::size_t vocab = lv.cols;
  Matrix probs(n, vocab);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto y = static_cast<std::size_t>(targets[r]);
    require(y < vocab, "cross_entropy: target out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < vocab; ++c) mx = std::max(mx, lv(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) z += std::exp(lv(r, c) - mx);
    const double log_z = mx + std::log(z);
    double sum_logp = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) {
      const double lp = lv(r, c) - log_z;
      probs(r, c) = std::exp(lp);
      sum_logp += lp;
    }
    const double logp_y = lv(r, y) - log_z;
    total += -(1.0 - eps) * logp_y - eps * sum_logp / static_cast<double>(vocab);
  }
  Matrix out(1, 1, total / static_cast<double>(n));
  const Var parents[] = {logits};
  return t.push(std::move(out), parents,
                [logits, eps, probs = std::move(probs),
                 tv = std::vector<int>(targets.begin(), targets.end())](Tape& tp,
                                                                        const Matrix& g) {
                  Matrix& gl = tp.grad_buffer(logits);
                  const double s = g.data[0] / static_cast<double>(probs.rows);
                  const double uniform = eps / static_cast<double>(probs.cols);
                  for (std::size_t r = 0; r < probs.rows; ++r) {
                    for (std::size_t c = 0; c < probs.cols; ++c) {
                      gl(r, c) += s * (probs(r, c) - uniform);
                    }
                    gl(r, static_cast<std::size_t>(tv[r])) -= s * (1.0 - eps);
                  }
                });
}

}  // namespace docstream::ad
