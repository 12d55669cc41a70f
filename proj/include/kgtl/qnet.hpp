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

// Q-network over knowledge-graph states.
//
// Parameters are a fixed list of named segments. Forward passes are recorded
// on a Tape; the same code runs without recording for inference. Backward
// accumulates into a Gradients value shaped like the Parameters.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgtl/common.hpp"
#include "kgtl/kgraph.hpp"

namespace kgtl::qnet {

enum class Seg : int {
  kWordEmbeddings = 0,
  kRelationEmbeddings,
  kAttentionW,
  kAttentionA,
  kGraphDense,
  kGraphBias,
  kObsDense,
  kObsBias,
  kStateCombine,
  kStateBias,
  kActionDense,
  kActionBias,
  kInteraction,
};
inline constexpr int kNumSegments = 13;
std::string_view segment_name(Seg s);

inline constexpr std::string_view kUnkWord = "<unk>";

struct Segment {
  std::string name;
  bool labelled = false;
  int rows = 0;
  int cols = 0;
  std::vector<std::string> labels;  // labelled segments only, one per row
  std::vector<double> data;         // row-major

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  bool operator==(const Segment&) const = default;
};

class Parameters {
 public:
  Parameters() = default;

  int dim() const { return dim_; }
  Segment& seg(Seg s) { return segments_[static_cast<int>(s)]; }
  const Segment& seg(Seg s) const { return segments_[static_cast<int>(s)]; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::vector<Segment>& segments() { return segments_; }

  // Row of `word` in the word embeddings; 0 (UNK) when absent.
  int word_row(std::string_view word) const;
  int relation_row(std::string_view relation) const;
  // Known words, excluding UNK.
  std::vector<std::string> words() const;

  bool all_finite() const;
  std::size_t parameter_count() const;

  // Rebuilds label indices after segments are replaced wholesale.
  void reindex();

  bool operator==(const Parameters& o) const { return dim_ == o.dim_ && segments_ == o.segments_; }

 private:
  friend Parameters init_params(const std::vector<std::string>&, int, Rng&);
  friend Parameters load_params(std::string_view);

  int dim_ = 0;
  std::vector<Segment> segments_;
  std::unordered_map<std::string, int> word_index_;
  std::unordered_map<std::string, int> relation_index_;
};

// Embeddings and weights ~ uniform(-0.05, 0.05); biases zero.
Parameters init_params(const std::vector<std::string>& vocabulary, int dim, Rng& rng);

inline constexpr double kInitScale = 0.05;

struct Gradients {
  std::vector<std::vector<double>> segs;  // same shapes as Parameters

  static Gradients zeros_like(const Parameters& p);
  std::vector<double>& seg(Seg s) { return segs[static_cast<int>(s)]; }
  const std::vector<double>& seg(Seg s) const { return segs[static_cast<int>(s)]; }
  double norm() const;
  void add(const Gradients& o);
  void scale(double c);
};

// Plain SGD with global-norm clipping. Returns the pre-clip norm.
double sgd_step(Parameters& params, const Gradients& grads, double lr, double clip = 5.0);

using Var = int;

// One neighbour entry of a graph-attention node: the logit contribution
// a_2 . W h_j and the message W h_j, plus the same pair for the edge's
// relation embedding when there is one.
struct AttentionInput {
  Var key = -1;
  Var message = -1;
  Var rel_key = -1;
  Var rel_message = -1;
};

class Tape {
 public:
  Tape(const Parameters& params, bool record);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const Parameters& params() const { return params_; }
  bool recording() const { return record_; }

  Var constant(std::vector<double> v);
  Var scalar(double x) { return constant({x}); }
  // Mean of rows of a labelled segment; zero vector for no rows.
  Var embed_mean(Seg seg, const std::vector<int>& rows);
  Var matvec(Seg seg, Var x);
  Var add_bias(Var x, Seg seg);
  Var add(Var x, Var y);
  Var tanh(Var x);
  Var leaky_relu(Var x, double slope);
  Var concat(Var x, Var y);
  Var mean(const std::vector<Var>& xs);
  Var dot_param(Seg seg, Var x);
  // sum_k p[offset + k] * x[k] over the length of x.
  Var dot_param_range(Seg seg, int offset, Var x);
  // e_k = leaky_relu(query + key_k + rel_key_k), alpha = softmax(e),
  // out = sum_k alpha_k (message_k + rel_message_k). Weights are copied to
  // `alpha_out` when given.
  Var attention(Var query, const std::vector<AttentionInput>& entries, double slope,
                std::vector<double>* alpha_out = nullptr);
  Var softmax(const std::vector<Var>& scalars);
  Var weighted_sum(Var weights, const std::vector<Var>& xs);
  Var bilinear(Var s, Seg seg, Var a);
  Var squared_error(Var q, double target);
  Var softmax_xent(const std::vector<Var>& scores, int label);
  Var mean_scalars(const std::vector<Var>& xs);

  const std::vector<double>& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }
  double scalar_value(Var v) const { return value(v)[0]; }

  // Smallest |input| seen by leaky_relu; finite differences are only
  // meaningful when this exceeds the step size.
  double kink_margin() const { return kink_margin_; }

  // Reverse pass from a scalar; returns accumulated parameter gradients.
  Gradients backward(Var loss);

  // Encoder sub-results keyed by input, valid for the lifetime of the tape
  // since its parameters are fixed. Shared nodes and actions across a batch
  // are then computed once.
  struct Memo {
    std::map<std::string, std::array<Var, 3>, std::less<>> nodes;  // W h, a_1 . W h, a_2 . W h
    std::map<int, std::pair<Var, Var>> relations;                    // W r, a_2 . W r
    std::map<std::string, Var, std::less<>> actions;
  };
  Memo& memo() { return memo_; }

 private:
  struct Node {
    std::vector<double> value;
    std::function<void()> back;
  };
  Var push(std::vector<double> value, std::function<void()> back = {});
  std::vector<double>& grad(Var v) { return grads_[static_cast<std::size_t>(v)]; }
  std::vector<double>& pgrad(Seg s) { return param_grads_.seg(s); }

  const Parameters& params_;
  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  Gradients param_grads_;
  double kink_margin_ = INFINITY;
  Memo memo_;
};

// Encoders recorded on a tape.
Var encode_state(Tape& tape, const kg::KnowledgeGraph& graph, std::string_view observation);
Var encode_action(Tape& tape, std::string_view action);
Var q_value(Tape& tape, Var state, Var action);

// Inference-only conveniences.
using Vec = std::vector<double>;
Vec encode_state(const kg::KnowledgeGraph& graph, std::string_view observation, const Parameters& params);
Vec encode_action(std::string_view action, const Parameters& params);
double q_value(const Vec& s, const Vec& a, const Parameters& params);
// u = s^T W_int, so Q(s, a) = u . a; scoring many actions against one state.
Vec project_state(const Vec& s, const Parameters& params);
double dot(const Vec& u, const Vec& a);

// Attention weights per node, for inspection. Keyed by node name, in
// neighbour-entry order (self first).
std::vector<std::pair<std::string, std::vector<double>>> attention_weights(
    const kg::KnowledgeGraph& graph, const Parameters& params);

std::string save_params(const Parameters& params);
Parameters load_params(std::string_view bytes);
void save_params_file(const Parameters& params, const std::string& path);
Parameters load_params_file(const std::string& path);

}  // namespace kgtl::qnet
