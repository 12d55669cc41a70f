// Copyright 2026 The kgtl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kgtl/qnet.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

namespace kgtl::qnet {

namespace {

constexpr std::array<std::string_view, kNumSegments> kSegmentNames = {
    "word_embeddings", "relation_embeddings", "attention_W", "attention_a",
    "graph_dense",     "graph_bias",          "obs_dense",   "obs_bias",
    "state_combine",   "state_bias",          "action_dense", "action_bias",
    "interaction"};

struct Shape {
  int rows;
  int cols;
  bool labelled;
};

// Expected shape of each segment for dimension d; word rows are variable.
Shape expected_shape(Seg s, int d, int words, int relations) {
  switch (s) {
    case Seg::kWordEmbeddings: return {words, d, true};
    case Seg::kRelationEmbeddings: return {relations, d, true};
    case Seg::kAttentionW: return {d, d, false};
    case Seg::kAttentionA: return {1, 2 * d, false};
    case Seg::kGraphDense: return {d, d, false};
    case Seg::kGraphBias: return {1, d, false};
    case Seg::kObsDense: return {d, d, false};
    case Seg::kObsBias: return {1, d, false};
    case Seg::kStateCombine: return {d, 2 * d, false};
    case Seg::kStateBias: return {1, d, false};
    case Seg::kActionDense: return {d, d, false};
    case Seg::kActionBias: return {1, d, false};
    case Seg::kInteraction: return {d, d, false};
  }
  return {0, 0, false};
}

bool is_bias(Seg s) {
  return s == Seg::kGraphBias || s == Seg::kObsBias || s == Seg::kStateBias || s == Seg::kActionBias;
}

}  // namespace

std::string_view segment_name(Seg s) { return kSegmentNames[static_cast<int>(s)]; }

// ---------------------------------------------------------------------------
// Parameters

int Parameters::word_row(std::string_view word) const {
  auto it = word_index_.find(std::string(word));
  return it == word_index_.end() ? 0 : it->second;
}

int Parameters::relation_row(std::string_view relation) const {
  auto it = relation_index_.find(std::string(relation));
  KGTL_REQUIRE(it != relation_index_.end(), "unknown relation: " + std::string(relation));
  return it->second;
}

std::vector<std::string> Parameters::words() const {
  const auto& labels = seg(Seg::kWordEmbeddings).labels;
  return {labels.begin() + 1, labels.end()};
}

bool Parameters::all_finite() const {
  for (const auto& s : segments_)
    for (double x : s.data)
      if (!std::isfinite(x)) return false;
  return true;
}

std::size_t Parameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : segments_) n += s.data.size();
  return n;
}

void Parameters::reindex() {
  word_index_.clear();
  relation_index_.clear();
  const auto& w = seg(Seg::kWordEmbeddings).labels;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) word_index_.emplace(w[i], i);
  const auto& r = seg(Seg::kRelationEmbeddings).labels;
  for (int i = 0; i < static_cast<int>(r.size()); ++i) relation_index_.emplace(r[i], i);
}

Parameters init_params(const std::vector<std::string>& vocabulary, int dim, Rng& rng) {
  KGTL_REQUIRE(dim >= 1, "embedding dimension must be positive");
  std::set<std::string> uniq(vocabulary.begin(), vocabulary.end());
  uniq.erase(std::string(kUnkWord));
  std::vector<std::string> words{std::string(kUnkWord)};
  words.insert(words.end(), uniq.begin(), uniq.end());
  const auto& rels = kg::relation_vocabulary();

  Parameters p;
  p.dim_ = dim;
  p.segments_.resize(kNumSegments);
  for (int i = 0; i < kNumSegments; ++i) {
    const Seg s = static_cast<Seg>(i);
    const Shape shape = expected_shape(s, dim, static_cast<int>(words.size()), static_cast<int>(rels.size()));
    Segment& seg = p.segments_[i];
    seg.name = std::string(segment_name(s));
    seg.labelled = shape.labelled;
    seg.rows = shape.rows;
    seg.cols = shape.cols;
    if (s == Seg::kWordEmbeddings) seg.labels = words;
    if (s == Seg::kRelationEmbeddings) seg.labels = rels;
    seg.data.assign(static_cast<std::size_t>(shape.rows) * shape.cols, 0.0);
    if (!is_bias(s))
      for (auto& x : seg.data) x = rng.uniform(-kInitScale, kInitScale);
  }
  p.reindex();
  return p;
}

// ---------------------------------------------------------------------------
// Gradients

Gradients Gradients::zeros_like(const Parameters& p) {
  Gradients g;
  for (const auto& s : p.segments()) g.segs.emplace_back(s.data.size(), 0.0);
  return g;
}

double Gradients::norm() const {
  double s = 0.0;
  for (const auto& v : segs)
    for (double x : v) s += x * x;
  return std::sqrt(s);
}

void Gradients::add(const Gradients& o) {
  KGTL_REQUIRE(o.segs.size() == segs.size(), "gradient shape mismatch");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    KGTL_REQUIRE(o.segs[i].size() == segs[i].size(), "gradient shape mismatch");
    for (std::size_t j = 0; j < segs[i].size(); ++j) segs[i][j] += o.segs[i][j];
  }
}

void Gradients::scale(double c) {
  for (auto& v : segs)
    for (auto& x : v) x *= c;
}

double sgd_step(Parameters& params, const Gradients& grads, double lr, double clip) {
  const double n = grads.norm();
  const double factor = (clip > 0.0 && n > clip) ? clip / n : 1.0;
  auto& segs = params.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    auto& d = segs[i].data;
    const auto& g = grads.segs[i];
    for (std::size_t j = 0; j < d.size(); ++j) d[j] -= lr * factor * g[j];
  }
  return n;
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape(const Parameters& params, bool record) : params_(params), record_(record) {
  if (record_) param_grads_ = Gradients::zeros_like(params);
}

Var Tape::push(std::vector<double> value, std::function<void()> back) {
  nodes_.push_back({std::move(value), record_ ? std::move(back) : std::function<void()>{}});
  return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::constant(std::vector<double> v) { return push(std::move(v)); }

Var Tape::embed_mean(Seg seg, const std::vector<int>& rows) {
  const Segment& S = params_.seg(seg);
  std::vector<double> out(static_cast<std::size_t>(S.cols), 0.0);
  if (rows.empty()) return push(std::move(out));
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (int r : rows) {
    const double* w = S.row(r);
    for (int c = 0; c < S.cols; ++c) out[c] += w[c];
  }
  for (auto& x : out) x *= inv;
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, seg, rows, inv] {
    const auto& g = grad(self);
    auto& pg = pgrad(seg);
    const int cols = params_.seg(seg).cols;
    for (int r : rows)
      for (int c = 0; c < cols; ++c) pg[static_cast<std::size_t>(r) * cols + c] += g[c] * inv;
  });
}

Var Tape::matvec(Seg seg, Var x) {
  const Segment& M = params_.seg(seg);
  const auto& xv = value(x);
  KGTL_REQUIRE(static_cast<int>(xv.size()) == M.cols, "matvec dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(M.rows), 0.0);
  for (int r = 0; r < M.rows; ++r) {
    const double* m = M.row(r);
    double s = 0.0;
    for (int c = 0; c < M.cols; ++c) s += m[c] * xv[c];
    out[r] = s;
  }
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, seg, x] {
    const Segment& M = params_.seg(seg);
    const auto& g = grad(self);
    const auto& xv = value(x);
    auto& gx = grad(x);
    auto& pg = pgrad(seg);
    for (int r = 0; r < M.rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      const double* m = M.row(r);
      double* pr = pg.data() + static_cast<std::size_t>(r) * M.cols;
      for (int c = 0; c < M.cols; ++c) {
        pr[c] += gr * xv[c];
        gx[c] += gr * m[c];
      }
    }
  });
}

Var Tape::add_bias(Var x, Seg seg) {
  const Segment& B = params_.seg(seg);
  std::vector<double> out = value(x);
  KGTL_REQUIRE(static_cast<int>(out.size()) == B.cols, "bias dimension mismatch");
  for (int c = 0; c < B.cols; ++c) out[c] += B.data[c];
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, x, seg] {
    const auto& g = grad(self);
    auto& gx = grad(x);
    auto& pg = pgrad(seg);
    for (std::size_t c = 0; c < g.size(); ++c) {
      gx[c] += g[c];
      pg[c] += g[c];
    }
  });
}

Var Tape::add(Var x, Var y) {
  std::vector<double> out = value(x);
  const auto& yv = value(y);
  KGTL_REQUIRE(out.size() == yv.size(), "add dimension mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += yv[i];
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, x, y] {
    const auto& g = grad(self);
    auto& gx = grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    auto& gy = grad(y);
    for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i];
  });
}

Var Tape::tanh(Var x) {
  std::vector<double> out = value(x);
  for (auto& v : out) v = std::tanh(v);
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, x] {
    const auto& g = grad(self);
    const auto& y = value(self);
    auto& gx = grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::leaky_relu(Var x, double slope) {
  std::vector<double> out = value(x);
  for (auto& v : out) {
    kink_margin_ = std::min(kink_margin_, std::abs(v));
    v = v > 0.0 ? v : slope * v;
  }
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, x, slope] {
    const auto& g = grad(self);
    const auto& xv = value(x);
    auto& gx = grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : slope * g[i];
  });
}

Var Tape::concat(Var x, Var y) {
  std::vector<double> out = value(x);
  const auto& yv = value(y);
  const std::size_t nx = out.size();
  out.insert(out.end(), yv.begin(), yv.end());
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, x, y, nx] {
    const auto& g = grad(self);
    auto& gx = grad(x);
    for (std::size_t i = 0; i < nx; ++i) gx[i] += g[i];
    auto& gy = grad(y);
    for (std::size_t i = nx; i < g.size(); ++i) gy[i - nx] += g[i];
  });
}

Var Tape::mean(const std::vector<Var>& xs) {
  KGTL_REQUIRE(!xs.empty(), "mean of no vectors");
  std::vector<double> out(value(xs[0]).size(), 0.0);
  const double inv = 1.0 / static_cast<double>(xs.size());
  for (Var x : xs) {
    const auto& v = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  for (auto& v : out) v *= inv;
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, xs, inv] {
    const auto& g = grad(self);
    for (Var x : xs) {
      auto& gx = grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * inv;
    }
  });
}

Var Tape::dot_param(Seg seg, Var x) {
  const Segment& A = params_.seg(seg);
  const auto& xv = value(x);
  KGTL_REQUIRE(A.data.size() == xv.size(), "dot dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += A.data[i] * xv[i];
  Var self = static_cast<Var>(nodes_.size());
  return push({s}, [this, self, seg, x] {
    const double g = grad(self)[0];
    const auto& a = params_.seg(seg).data;
    const auto& xv = value(x);
    auto& gx = grad(x);
    auto& pg = pgrad(seg);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      gx[i] += g * a[i];
      pg[i] += g * xv[i];
    }
  });
}

Var Tape::dot_param_range(Seg seg, int offset, Var x) {
  const Segment& A = params_.seg(seg);
  const auto& xv = value(x);
  KGTL_REQUIRE(offset >= 0 && offset + xv.size() <= A.data.size(), "dot range out of bounds");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += A.data[offset + i] * xv[i];
  Var self = static_cast<Var>(nodes_.size());
  return push({s}, [this, self, seg, offset, x] {
    const double g = grad(self)[0];
    const auto& a = params_.seg(seg).data;
    const auto& xv = value(x);
    auto& gx = grad(x);
    auto& pg = pgrad(seg);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      gx[i] += g * a[offset + i];
      pg[offset + i] += g * xv[i];
    }
  });
}

Var Tape::attention(Var query, const std::vector<AttentionInput>& entries, double slope,
                    std::vector<double>* alpha_out) {
  KGTL_REQUIRE(!entries.empty(), "attention over no entries");
  const std::size_t n = entries.size();
  std::vector<double> pre(n), alpha(n);
  double mx = -INFINITY;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& e = entries[k];
    double v = scalar_value(query) + scalar_value(e.key);
    if (e.rel_key >= 0) v += scalar_value(e.rel_key);
    pre[k] = v;
    kink_margin_ = std::min(kink_margin_, std::abs(v));
    alpha[k] = v > 0.0 ? v : slope * v;
    mx = std::max(mx, alpha[k]);
  }
  double z = 0.0;
  for (auto& a : alpha) z += (a = std::exp(a - mx));
  for (auto& a : alpha) a /= z;
  const std::size_t d = value(entries[0].message).size();
  std::vector<double> out(d, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = value(entries[k].message);
    for (std::size_t c = 0; c < d; ++c) out[c] += alpha[k] * m[c];
    if (entries[k].rel_message >= 0) {
      const auto& rm = value(entries[k].rel_message);
      for (std::size_t c = 0; c < d; ++c) out[c] += alpha[k] * rm[c];
    }
  }
  if (alpha_out) *alpha_out = alpha;
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, query, entries, slope, pre = std::move(pre), alpha = std::move(alpha)] {
    const auto& g = grad(self);
    const std::size_t n = entries.size();
    std::vector<double> dalpha(n, 0.0);
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& e = entries[k];
      const auto& m = value(e.message);
      auto& gm = grad(e.message);
      double s = 0.0;
      for (std::size_t c = 0; c < g.size(); ++c) {
        s += g[c] * m[c];
        gm[c] += alpha[k] * g[c];
      }
      if (e.rel_message >= 0) {
        const auto& rm = value(e.rel_message);
        auto& grm = grad(e.rel_message);
        for (std::size_t c = 0; c < g.size(); ++c) {
          s += g[c] * rm[c];
          grm[c] += alpha[k] * g[c];
        }
      }
      dalpha[k] = s;
      mean += alpha[k] * s;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double de = alpha[k] * (dalpha[k] - mean);
      const double ds = pre[k] > 0.0 ? de : slope * de;
      grad(query)[0] += ds;
      grad(entries[k].key)[0] += ds;
      if (entries[k].rel_key >= 0) grad(entries[k].rel_key)[0] += ds;
    }
  });
}

Var Tape::softmax(const std::vector<Var>& scalars) {
  KGTL_REQUIRE(!scalars.empty(), "softmax of nothing");
  double mx = -INFINITY;
  for (Var s : scalars) mx = std::max(mx, scalar_value(s));
  std::vector<double> out(scalars.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) z += out[i] = std::exp(scalar_value(scalars[i]) - mx);
  for (auto& v : out) v /= z;
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, scalars] {
    const auto& g = grad(self);
    const auto& y = value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < y.size(); ++i) grad(scalars[i])[0] += y[i] * (g[i] - dot);
  });
}

Var Tape::weighted_sum(Var weights, const std::vector<Var>& xs) {
  const auto& w = value(weights);
  KGTL_REQUIRE(w.size() == xs.size() && !xs.empty(), "weighted_sum size mismatch");
  std::vector<double> out(value(xs[0]).size(), 0.0);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto& v = value(xs[j]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * v[i];
  }
  Var self = static_cast<Var>(nodes_.size());
  return push(std::move(out), [this, self, weights, xs] {
    const auto& g = grad(self);
    const auto& w = value(weights);
    auto& gw = grad(weights);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const auto& v = value(xs[j]);
      auto& gx = grad(xs[j]);
      double d = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        d += g[i] * v[i];
        gx[i] += g[i] * w[j];
      }
      gw[j] += d;
    }
  });
}

Var Tape::bilinear(Var s, Seg seg, Var a) {
  const Segment& W = params_.seg(seg);
  const auto& sv = value(s);
  const auto& av = value(a);
  if (static_cast<int>(sv.size()) != W.rows || static_cast<int>(av.size()) != W.cols)
    fail(ErrorCode::kInvalidArgument, "q_value dimension mismatch");
  double q = 0.0;
  for (int r = 0; r < W.rows; ++r) {
    if (sv[r] == 0.0) continue;
    const double* w = W.row(r);
    double t = 0.0;
    for (int c = 0; c < W.cols; ++c) t += w[c] * av[c];
    q += sv[r] * t;
  }
  Var self = static_cast<Var>(nodes_.size());
  return push({q}, [this, self, s, seg, a] {
    const double g = grad(self)[0];
    const Segment& W = params_.seg(seg);
    const auto& sv = value(s);
    const auto& av = value(a);
    auto& gs = grad(s);
    auto& ga = grad(a);
    auto& pg = pgrad(seg);
    for (int r = 0; r < W.rows; ++r) {
      const double* w = W.row(r);
      double* pr = pg.data() + static_cast<std::size_t>(r) * W.cols;
      double t = 0.0;
      for (int c = 0; c < W.cols; ++c) {
        t += w[c] * av[c];
        ga[c] += g * sv[r] * w[c];
        pr[c] += g * sv[r] * av[c];
      }
      gs[r] += g * t;
    }
  });
}

Var Tape::squared_error(Var q, double target) {
  const double diff = scalar_value(q) - target;
  Var self = static_cast<Var>(nodes_.size());
  return push({diff * diff}, [this, self, q, diff] { grad(q)[0] += grad(self)[0] * 2.0 * diff; });
}

Var Tape::softmax_xent(const std::vector<Var>& scores, int label) {
  KGTL_REQUIRE(label >= 0 && label < static_cast<int>(scores.size()), "label out of range");
  double mx = -INFINITY;
  for (Var s : scores) mx = std::max(mx, scalar_value(s));
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) z += p[i] = std::exp(scalar_value(scores[i]) - mx);
  for (auto& v : p) v /= z;
  const double loss = -(scalar_value(scores[static_cast<std::size_t>(label)]) - mx - std::log(z));
  Var self = static_cast<Var>(nodes_.size());
  return push({loss}, [this, self, scores, label, p] {
    const double g = grad(self)[0];
    for (std::size_t i = 0; i < scores.size(); ++i)
      grad(scores[i])[0] += g * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
  });
}

Var Tape::mean_scalars(const std::vector<Var>& xs) {
  KGTL_REQUIRE(!xs.empty(), "mean of no scalars");
  double s = 0.0;
  for (Var x : xs) s += scalar_value(x);
  const double inv = 1.0 / static_cast<double>(xs.size());
  Var self = static_cast<Var>(nodes_.size());
  return push({s * inv}, [this, self, xs, inv] {
    const double g = grad(self)[0];
    for (Var x : xs) grad(x)[0] += g * inv;
  });
}

Gradients Tape::backward(Var loss) {
  KGTL_REQUIRE(record_, "backward on a non-recording tape");
  KGTL_REQUIRE(value(loss).size() == 1, "backward from a non-scalar");
  grads_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i].assign(nodes_[i].value.size(), 0.0);
  grads_[static_cast<std::size_t>(loss)][0] = 1.0;
  for (int i = loss; i >= 0; --i)
    if (nodes_[static_cast<std::size_t>(i)].back) nodes_[static_cast<std::size_t>(i)].back();
  Gradients out = std::move(param_grads_);
  param_grads_ = Gradients::zeros_like(params_);
  grads_.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Encoders

namespace {

constexpr double kLeakySlope = 0.2;

std::vector<int> word_rows(const Parameters& p, std::string_view text) {
  std::vector<int> rows;
  for (const auto& t : tokenize(text)) rows.push_back(p.word_row(t));
  return rows;
}

struct Neighbour {
  int node;
  int relation;  // -1 for the self loop
};

struct GraphLayout {
  std::vector<std::string> nodes;
  std::vector<std::vector<Neighbour>> neighbours;  // self first, then edges in triple order
  std::vector<int> relations;                       // used relation rows, sorted
};

GraphLayout layout(const kg::KnowledgeGraph& g, const Parameters& p) {
  GraphLayout l;
  l.nodes = g.nodes();
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(l.nodes.size()); ++i) index.emplace(l.nodes[i], i);
  l.neighbours.resize(l.nodes.size());
  for (int i = 0; i < static_cast<int>(l.nodes.size()); ++i) l.neighbours[i].push_back({i, -1});
  std::set<int> rels;
  for (const auto& t : g.triples()) {
    const int s = index.at(t.subject), o = index.at(t.object);
    const int r = p.relation_row(t.relation);
    // The self loop is implicit; a triple relating a node to itself adds nothing.
    if (s == o) continue;
    rels.insert(r);
    l.neighbours[s].push_back({o, r});
    l.neighbours[o].push_back({s, r});
  }
  l.relations.assign(rels.begin(), rels.end());
  return l;
}

struct Attention {
  std::vector<Var> h_prime;
  std::vector<std::vector<double>> alphas;
};

Attention attend(Tape& t, const GraphLayout& l, bool keep_alphas) {
  const Parameters& p = t.params();
  const int d = p.dim();
  // a . [W h_i || W h_j + W r] splits into a per-node query term, a per-node
  // key term and a per-relation key term.
  auto& memo = t.memo();
  std::vector<Var> wh, query, key;
  wh.reserve(l.nodes.size());
  for (const auto& n : l.nodes) {
    auto it = memo.nodes.find(n);
    if (it == memo.nodes.end()) {
      Var v = t.matvec(Seg::kAttentionW, t.embed_mean(Seg::kWordEmbeddings, word_rows(p, n)));
      it = memo.nodes.emplace(n, std::array<Var, 3>{v, t.dot_param_range(Seg::kAttentionA, 0, v),
                                                    t.dot_param_range(Seg::kAttentionA, d, v)}).first;
    }
    wh.push_back(it->second[0]);
    query.push_back(it->second[1]);
    key.push_back(it->second[2]);
  }
  auto& rel = memo.relations;  // row -> (message, key)
  for (int r : l.relations) {
    if (rel.count(r)) continue;
    Var v = t.matvec(Seg::kAttentionW, t.embed_mean(Seg::kRelationEmbeddings, {r}));
    rel[r] = {v, t.dot_param_range(Seg::kAttentionA, d, v)};
  }
  Attention a;
  for (std::size_t i = 0; i < l.nodes.size(); ++i) {
    std::vector<AttentionInput> entries;
    entries.reserve(l.neighbours[i].size());
    for (const auto& nb : l.neighbours[i]) {
      AttentionInput in{key[nb.node], wh[nb.node]};
      if (nb.relation >= 0) {
        const auto& [msg, k] = rel.at(nb.relation);
        in.rel_key = k;
        in.rel_message = msg;
      }
      entries.push_back(in);
    }
    std::vector<double> alpha;
    a.h_prime.push_back(t.tanh(t.attention(query[i], entries, kLeakySlope, keep_alphas ? &alpha : nullptr)));
    if (keep_alphas) a.alphas.push_back(std::move(alpha));
  }
  return a;
}

}  // namespace

Var encode_state(Tape& t, const kg::KnowledgeGraph& graph, std::string_view observation) {
  const Parameters& p = t.params();
  const int d = p.dim();
  Var g;
  if (graph.empty()) {
    g = t.constant(std::vector<double>(static_cast<std::size_t>(d), 0.0));
  } else {
    const GraphLayout l = layout(graph, p);
    Attention a = attend(t, l, false);
    g = t.tanh(t.add_bias(t.matvec(Seg::kGraphDense, t.mean(a.h_prime)), Seg::kGraphBias));
  }
  Var o = t.tanh(t.add_bias(t.matvec(Seg::kObsDense, t.embed_mean(Seg::kWordEmbeddings, word_rows(p, observation))),
                            Seg::kObsBias));
  return t.tanh(t.add_bias(t.matvec(Seg::kStateCombine, t.concat(g, o)), Seg::kStateBias));
}

Var encode_action(Tape& t, std::string_view action) {
  auto& memo = t.memo().actions;
  if (auto it = memo.find(action); it != memo.end()) return it->second;
  const Parameters& p = t.params();
  Var v = t.tanh(t.add_bias(t.matvec(Seg::kActionDense, t.embed_mean(Seg::kWordEmbeddings, word_rows(p, action))),
                            Seg::kActionBias));
  memo.emplace(std::string(action), v);
  return v;
}

Var q_value(Tape& t, Var state, Var action) { return t.bilinear(state, Seg::kInteraction, action); }

Vec encode_state(const kg::KnowledgeGraph& graph, std::string_view observation, const Parameters& params) {
  Tape t(params, false);
  return t.value(encode_state(t, graph, observation));
}

Vec encode_action(std::string_view action, const Parameters& params) {
  Tape t(params, false);
  return t.value(encode_action(t, action));
}

double q_value(const Vec& s, const Vec& a, const Parameters& params) {
  Tape t(params, false);
  return t.scalar_value(q_value(t, t.constant(s), t.constant(a)));
}

Vec project_state(const Vec& s, const Parameters& params) {
  const Segment& W = params.seg(Seg::kInteraction);
  if (static_cast<int>(s.size()) != W.rows) fail(ErrorCode::kInvalidArgument, "q_value dimension mismatch");
  Vec u(static_cast<std::size_t>(W.cols), 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double sr = s[r];
    const double* w = W.row(r);
    for (int c = 0; c < W.cols; ++c) u[c] += sr * w[c];
  }
  return u;
}

double dot(const Vec& u, const Vec& a) {
  if (u.size() != a.size()) fail(ErrorCode::kInvalidArgument, "q_value dimension mismatch");
  double q = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) q += u[i] * a[i];
  return q;
}

std::vector<std::pair<std::string, std::vector<double>>> attention_weights(const kg::KnowledgeGraph& graph,
                                                                           const Parameters& params) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  if (graph.empty()) return out;
  Tape t(params, false);
  const GraphLayout l = layout(graph, params);
  Attention a = attend(t, l, true);
  for (std::size_t i = 0; i < l.nodes.size(); ++i) out.emplace_back(l.nodes[i], a.alphas[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
//
// "KGQN" | u32 version | u32 dim | u32 segment count | segments...
// segment: u32 name length | name | u8 kind (0 dense, 1 labelled) | u32 rows |
//          u32 cols | labelled: rows x (u32 length | bytes) | rows*cols f64
// All integers and doubles little-endian.

namespace {

constexpr char kMagic[4] = {'K', 'G', 'Q', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  std::size_t offset() const { return pos_; }
  [[noreturn]] void bad(const std::string& what) const {
    fail(ErrorCode::kFormat, "parameter stream: " + what + " at offset " + std::to_string(pos_));
  }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) bad("unexpected end of data");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string save_params(const Parameters& params) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.dim()));
  put_u32(out, static_cast<std::uint32_t>(params.segments().size()));
  for (const auto& s : params.segments()) {
    put_str(out, s.name);
    out.push_back(static_cast<char>(s.labelled ? 1 : 0));
    put_u32(out, static_cast<std::uint32_t>(s.rows));
    put_u32(out, static_cast<std::uint32_t>(s.cols));
    if (s.labelled)
      for (const auto& l : s.labels) put_str(out, l);
    for (double v : s.data) put_f64(out, v);
  }
  return out;
}

Parameters load_params(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(4) != std::string_view(kMagic, 4)) fail(ErrorCode::kFormat, "parameter stream: bad magic at offset 0");
  const std::size_t version_at = r.offset();
  if (r.u32() != kVersion)
    fail(ErrorCode::kFormat, "parameter stream: unsupported version at offset " + std::to_string(version_at));
  Parameters p;
  const std::uint32_t dim = r.u32();
  if (dim == 0 || dim > 4096) r.bad("implausible dimension");
  p.dim_ = static_cast<int>(dim);
  const std::uint32_t count = r.u32();
  if (count != static_cast<std::uint32_t>(kNumSegments)) r.bad("unexpected segment count");
  p.segments_.resize(kNumSegments);
  for (int i = 0; i < kNumSegments; ++i) {
    const Seg seg = static_cast<Seg>(i);
    Segment& s = p.segments_[i];
    s.name = r.str();
    if (s.name != segment_name(seg)) r.bad("expected segment '" + std::string(segment_name(seg)) + "'");
    const std::uint8_t kind = r.u8();
    if (kind > 1) r.bad("bad segment kind");
    s.labelled = kind == 1;
    const std::uint32_t rows = r.u32(), cols = r.u32();
    const int n_rel = static_cast<int>(kg::relation_vocabulary().size());
    const Shape want = expected_shape(seg, p.dim_, static_cast<int>(rows), n_rel);
    if (s.labelled != want.labelled || static_cast<int>(rows) != want.rows || static_cast<int>(cols) != want.cols)
      r.bad("segment '" + s.name + "' has the wrong shape");
    s.rows = static_cast<int>(rows);
    s.cols = static_cast<int>(cols);
    if (s.labelled) {
      for (std::uint32_t k = 0; k < rows; ++k) s.labels.push_back(r.str());
      std::set<std::string> uniq(s.labels.begin(), s.labels.end());
      if (uniq.size() != s.labels.size()) r.bad("duplicate labels in '" + s.name + "'");
    }
    r.need(static_cast<std::size_t>(rows) * cols * 8);
    s.data.resize(static_cast<std::size_t>(rows) * cols);
    for (auto& v : s.data) v = r.f64();
  }
  if (!r.done()) r.bad("trailing bytes");
  if (p.seg(Seg::kWordEmbeddings).labels.empty() || p.seg(Seg::kWordEmbeddings).labels[0] != kUnkWord)
    fail(ErrorCode::kFormat, "parameter stream: word embeddings must start with the UNK row");
  if (p.seg(Seg::kRelationEmbeddings).labels != kg::relation_vocabulary())
    fail(ErrorCode::kFormat, "parameter stream: relation labels do not match the closed vocabulary");
  p.reindex();
  return p;
}

void save_params_file(const Parameters& params, const std::string& path) { write_file(path, save_params(params)); }

Parameters load_params_file(const std::string& path) { return load_params(read_file(path)); }

}  // namespace kgtl::qnet
