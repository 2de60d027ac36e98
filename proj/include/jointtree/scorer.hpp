#pragma once

// Parametric edge scores over precomputed feature vectors:
//   pruning score  Φp(s)        = FFNN_P(g)
//   pair score     Φc(p, c, d)  = FFNN_C([g_p; g_c; g_p ⊙ g_c; onehot(bucket(d))])
//   link score     Φl(s, e)     = FFNN_L([g; e])
// Each FFNN is either linear (default) or one tanh hidden layer.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jointtree/model_graph.hpp"

namespace jointtree {

class Ffnn {
 public:
  Ffnn() = default;
  Ffnn(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }

  double forward(std::span<const double> x) const;

  // grad += upstream * d(out)/d(params); dx += upstream * d(out)/dx when dx is non-empty.
  void backward(std::span<const double> x, double upstream, Ffnn& grad, std::span<double> dx = {}) const;

  // Linear: w (input_dim), b (1). Hidden: w (hidden x input_dim, row-major), b (hidden),
  // v (hidden), c (1).
  std::vector<double> w;
  std::vector<double> b;
  std::vector<double> v;
  std::vector<double> c;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_ = 0;
};

// Bucket boundaries for span distances 1, 2, 3, 4, 5-7, 8-15, 16-31, 32-63, 64+.
// Bucket 0 is reserved for distance 0 (root parent).
std::vector<int> default_distance_buckets();

struct ScorerConfig {
  std::size_t hidden = 0;
  std::vector<int> distance_buckets = default_distance_buckets();
  double init_scale = 0.1;
};

struct ScorerParams {
  std::size_t span_dim = 0;
  std::size_t entity_dim = 0;
  std::vector<int> distance_buckets;
  Ffnn prune;
  Ffnn pair;
  Ffnn link;
  std::vector<double> root_features;

  static ScorerParams zeros(std::size_t span_dim, std::size_t entity_dim, const ScorerConfig& config = {});
  // Uniform in [-init_scale, init_scale] from a seeded generator.
  static ScorerParams random(std::size_t span_dim, std::size_t entity_dim, const ScorerConfig& config,
                             std::uint64_t seed);

  ScorerParams zeros_like() const;
  std::size_t num_buckets() const { return distance_buckets.size() + 1; }
  std::size_t bucket(std::size_t distance) const;
  std::size_t num_parameters() const;

  // Visits every trainable array as (name, vector&).
  template <class Fn>
  void for_each_array(Fn&& fn) {
    visit_ffnn("prune", prune, fn);
    visit_ffnn("pair", pair, fn);
    visit_ffnn("link", link, fn);
    fn(std::string("root_features"), root_features);
  }
  template <class Fn>
  void for_each_array(Fn&& fn) const {
    const_cast<ScorerParams*>(this)->for_each_array(
        [&](const std::string& name, std::vector<double>& values) {
          fn(name, static_cast<const std::vector<double>&>(values));
        });
  }

  // this += scale * other
  void axpy(double scale, const ScorerParams& other);

  void validate() const;

 private:
  template <class Fn>
  static void visit_ffnn(const std::string& prefix, Ffnn& net, Fn& fn) {
    if (net.hidden() == 0) {
      fn(prefix + ".w", net.w);
      fn(prefix + ".b", net.b);
    } else {
      fn(prefix + ".W1", net.w);
      fn(prefix + ".b1", net.b);
      fn(prefix + ".w2", net.v);
      fn(prefix + ".b2", net.c);
    }
  }
};

double pruning_score(const ScorerParams& params, std::span<const double> span_features);
double pair_score(const ScorerParams& params, std::span<const double> parent_features,
                  std::span<const double> child_features, std::size_t span_distance);
double link_score(const ScorerParams& params, std::span<const double> span_features,
                  std::span<const double> entity_features);

// Indices of the top-n spans by pruning score, returned in document order.
// Ties keep the earlier span.
std::vector<std::size_t> prune_spans(const ScorerParams& params, const std::vector<Span>& spans,
                                     std::size_t n);

// Scores every legal edge of the graph:
//   s_i -> s_j : Φp(s_i) + Φp(s_j) + Φc(s_i, s_j, |i - j|)
//   e   -> s   : Φp(s) + Φl(s, e)
//   r   -> s   : Φp(s) + Φc(root_features, s, 0)
//   r   -> e   : 0
// `spans` and `entities` must be the ones the graph was built from.
DocumentGraph fill_scores(const DocumentGraph& graph, const ScorerParams& params, const std::vector<Span>& spans,
                          const std::vector<CandidateEntity>& entities);

// grads += chain rule of dLoss/dΦ (edge_grad, indexed like graph.scores()) through fill_scores.
void accumulate_param_grads(const ScorerParams& params, const DocumentGraph& graph, const std::vector<Span>& spans,
                            const std::vector<CandidateEntity>& entities, const Eigen::MatrixXd& edge_grad,
                            ScorerParams& grads);

}  // namespace jointtree
