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

#pragma once

// Shared test oracles. Everything here is written against the raw parameter
// arrays with plain loops so it does not share code with the library's
// forward pass.

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgtl/common.hpp"
#include "kgtl/kgraph.hpp"
#include "kgtl/qnet.hpp"

namespace kgtl::testing {

using Vec = std::vector<double>;
using qnet::Seg;

inline Vec mat_vec(const qnet::Parameters& p, Seg s, const Vec& x) {
  const auto& m = p.seg(s);
  Vec out(static_cast<std::size_t>(m.rows), 0.0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out[r] += m.data[static_cast<std::size_t>(r) * m.cols + c] * x[c];
  return out;
}

inline Vec plus_bias_tanh(const qnet::Parameters& p, Seg bias, Vec x) {
  const auto& b = p.seg(bias).data;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::tanh(x[i] + b[i]);
  return x;
}

inline Vec mean_words(const qnet::Parameters& p, const std::string& text) {
  const auto& emb = p.seg(Seg::kWordEmbeddings);
  const auto toks = tokenize(text);
  Vec out(static_cast<std::size_t>(p.dim()), 0.0);
  if (toks.empty()) return out;
  for (const auto& t : toks) {
    int row = 0;
    for (int i = 1; i < emb.rows; ++i)
      if (emb.labels[i] == t) row = i;
    for (int c = 0; c < emb.cols; ++c) out[c] += emb.data[static_cast<std::size_t>(row) * emb.cols + c];
  }
  for (auto& v : out) v /= static_cast<double>(toks.size());
  return out;
}

inline Vec relation_vec(const qnet::Parameters& p, const std::string& rel) {
  const auto& emb = p.seg(Seg::kRelationEmbeddings);
  for (int i = 0; i < emb.rows; ++i)
    if (emb.labels[i] == rel)
      return Vec(emb.data.begin() + static_cast<long>(i) * emb.cols,
                 emb.data.begin() + static_cast<long>(i + 1) * emb.cols);
  return {};
}

// Straight-line state encoder.
inline Vec oracle_state(const kg::KnowledgeGraph& g, const std::string& obs, const qnet::Parameters& p) {
  const int d = p.dim();
  Vec gv(static_cast<std::size_t>(d), 0.0);
  if (!g.empty()) {
    std::set<std::string> names;
    for (const auto& t : g.triples()) {
      names.insert(t.subject);
      names.insert(t.object);
    }
    std::map<std::string, Vec> wh;
    for (const auto& n : names) wh[n] = mat_vec(p, Seg::kAttentionW, mean_words(p, n));
    const auto& a = p.seg(Seg::kAttentionA).data;
    Vec pooled(static_cast<std::size_t>(d), 0.0);
    for (const auto& i : names) {
      std::vector<Vec> msgs{wh[i]};
      for (const auto& t : g.triples()) {
        if (t.subject == t.object) continue;
        const std::string* other = nullptr;
        if (t.subject == i) other = &t.object;
        if (t.object == i) other = &t.subject;
        if (!other) continue;
        Vec hr = mean_words(p, *other);
        const Vec r = relation_vec(p, t.relation);
        for (int c = 0; c < d; ++c) hr[c] += r[c];
        msgs.push_back(mat_vec(p, Seg::kAttentionW, hr));
      }
      std::vector<double> e;
      for (const auto& m : msgs) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) s += a[c] * wh[i][c] + a[d + c] * m[c];
        e.push_back(s > 0 ? s : 0.2 * s);
      }
      double mx = e[0];
      for (double x : e) mx = std::max(mx, x);
      double z = 0.0;
      for (auto& x : e) z += (x = std::exp(x - mx));
      Vec h(static_cast<std::size_t>(d), 0.0);
      for (std::size_t j = 0; j < msgs.size(); ++j)
        for (int c = 0; c < d; ++c) h[c] += e[j] / z * msgs[j][c];
      for (int c = 0; c < d; ++c) pooled[c] += std::tanh(h[c]) / static_cast<double>(names.size());
    }
    gv = plus_bias_tanh(p, Seg::kGraphBias, mat_vec(p, Seg::kGraphDense, pooled));
  }
  const Vec ov = plus_bias_tanh(p, Seg::kObsBias, mat_vec(p, Seg::kObsDense, mean_words(p, obs)));
  Vec cat = gv;
  cat.insert(cat.end(), ov.begin(), ov.end());
  return plus_bias_tanh(p, Seg::kStateBias, mat_vec(p, Seg::kStateCombine, cat));
}

inline Vec oracle_action(const std::string& action, const qnet::Parameters& p) {
  return plus_bias_tanh(p, Seg::kActionBias, mat_vec(p, Seg::kActionDense, mean_words(p, action)));
}

inline double oracle_q(const Vec& s, const Vec& a, const qnet::Parameters& p) {
  const auto& w = p.seg(Seg::kInteraction);
  double q = 0.0;
  for (int i = 0; i < w.rows; ++i)
    for (int j = 0; j < w.cols; ++j) q += s[i] * w.data[static_cast<std::size_t>(i) * w.cols + j] * a[j];
  return q;
}

// Random parameters at a larger scale than init so every nonlinearity is
// exercised away from its linear regime.
inline qnet::Parameters random_params(const std::vector<std::string>& words, int dim, std::uint64_t seed,
                                      double scale = 0.3) {
  Rng rng(seed);
  qnet::Parameters p = qnet::init_params(words, dim, rng);
  for (auto& s : p.segments())
    for (auto& x : s.data) x = rng.uniform(-scale, scale);
  return p;
}

inline kg::KnowledgeGraph random_graph(Rng& rng, const std::vector<std::string>& names, int n_triples) {
  const auto& rels = kg::relation_vocabulary();
  std::vector<kg::Triple> ts;
  for (int i = 0; i < n_triples; ++i)
    ts.push_back({names[rng.index(names.size())], rels[rng.index(rels.size())], names[rng.index(names.size())],
                  kg::Provenance::kObserved});
  return kg::KnowledgeGraph(ts);
}

struct GradCheck {
  double max_rel_error = 0.0;
  int checked = 0;
  std::set<int> segments_touched;  // segments with at least one nonzero analytic entry checked
};

// Central differences on chosen coordinates of each segment.
inline GradCheck check_gradients(qnet::Parameters& p, const std::function<double(const qnet::Parameters&)>& loss,
                                 const qnet::Gradients& analytic, Rng& rng, int per_segment, double h = 1e-4) {
  GradCheck out;
  for (int s = 0; s < qnet::kNumSegments; ++s) {
    auto& data = p.segments()[s].data;
    for (int k = 0; k < per_segment && !data.empty(); ++k) {
      const std::size_t idx = rng.index(data.size());
      const double orig = data[idx];
      data[idx] = orig + h;
      const double up = loss(p);
      data[idx] = orig - h;
      const double down = loss(p);
      data[idx] = orig;
      const double numeric = (up - down) / (2 * h);
      const double exact = analytic.segs[s][idx];
      if (std::abs(numeric) < 1e-8 && std::abs(exact) < 1e-8) continue;
      const double rel = std::abs(numeric - exact) / std::max(std::abs(numeric), std::abs(exact));
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
      out.segments_touched.insert(s);
    }
  }
  return out;
}

}  // namespace kgtl::testing
