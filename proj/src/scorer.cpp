#include "jointtree/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "jointtree/errors.hpp"

namespace jointtree {

Ffnn::Ffnn(std::size_t input_dim, std::size_t hidden) : input_dim_(input_dim), hidden_(hidden) {
  if (hidden == 0) {
    w.assign(input_dim, 0.0);
    b.assign(1, 0.0);
  } else {
    w.assign(hidden * input_dim, 0.0);
    b.assign(hidden, 0.0);
    v.assign(hidden, 0.0);
    c.assign(1, 0.0);
  }
}

double Ffnn::forward(std::span<const double> x) const {
  if (x.size() != input_dim_)
    throw Error(ErrorCode::FeatureDimError,
                "expected input of size " + std::to_string(input_dim_) + ", got " + std::to_string(x.size()));
  if (hidden_ == 0) return std::inner_product(x.begin(), x.end(), w.begin(), b[0]);
  double out = c[0];
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double pre = std::inner_product(x.begin(), x.end(), w.begin() + h * input_dim_, b[h]);
    out += v[h] * std::tanh(pre);
  }
  return out;
}

void Ffnn::backward(std::span<const double> x, double upstream, Ffnn& grad, std::span<double> dx) const {
  if (x.size() != input_dim_ || grad.input_dim_ != input_dim_ || grad.hidden_ != hidden_ ||
      (!dx.empty() && dx.size() != input_dim_))
    throw Error(ErrorCode::GradShapeError, "gradient buffer does not match network shape");
  if (upstream == 0.0) return;
  if (hidden_ == 0) {
    for (std::size_t i = 0; i < input_dim_; ++i) grad.w[i] += upstream * x[i];
    grad.b[0] += upstream;
    if (!dx.empty())
      for (std::size_t i = 0; i < input_dim_; ++i) dx[i] += upstream * w[i];
    return;
  }
  grad.c[0] += upstream;
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double* row = w.data() + h * input_dim_;
    const double act = std::tanh(std::inner_product(x.begin(), x.end(), row, b[h]));
    grad.v[h] += upstream * act;
    const double dpre = upstream * v[h] * (1.0 - act * act);
    grad.b[h] += dpre;
    double* grow = grad.w.data() + h * input_dim_;
    for (std::size_t i = 0; i < input_dim_; ++i) grow[i] += dpre * x[i];
    if (!dx.empty())
      for (std::size_t i = 0; i < input_dim_; ++i) dx[i] += dpre * row[i];
  }
}

std::vector<int> default_distance_buckets() { return {1, 2, 3, 4, 5, 8, 16, 32, 64}; }

namespace {

void check_buckets(const std::vector<int>& buckets) {
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i] < 1 || (i > 0 && buckets[i] <= buckets[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "distance bucket boundaries must be positive and strictly increasing");
  }
}

std::size_t pair_input_dim(std::size_t span_dim, std::size_t buckets) { return 3 * span_dim + buckets; }

std::vector<double> pair_input(const ScorerParams& params, std::span<const double> parent,
                               std::span<const double> child, std::size_t distance) {
  const std::size_t d = params.span_dim;
  if (parent.size() != d || child.size() != d)
    throw Error(ErrorCode::FeatureDimError, "span features must have dimension " + std::to_string(d));
  std::vector<double> x(pair_input_dim(d, params.num_buckets()), 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = parent[i];
    x[d + i] = child[i];
    x[2 * d + i] = parent[i] * child[i];
  }
  x[3 * d + params.bucket(distance)] = 1.0;
  return x;
}

std::vector<double> link_input(const ScorerParams& params, std::span<const double> span_features,
                               std::span<const double> entity_features) {
  if (span_features.size() != params.span_dim || entity_features.size() != params.entity_dim)
    throw Error(ErrorCode::FeatureDimError, "link score expects span dim " + std::to_string(params.span_dim) +
                                                " and entity dim " + std::to_string(params.entity_dim));
  std::vector<double> x(span_features.begin(), span_features.end());
  x.insert(x.end(), entity_features.begin(), entity_features.end());
  return x;
}

}  // namespace

ScorerParams ScorerParams::zeros(std::size_t span_dim, std::size_t entity_dim, const ScorerConfig& config) {
  check_buckets(config.distance_buckets);
  ScorerParams p;
  p.span_dim = span_dim;
  p.entity_dim = entity_dim;
  p.distance_buckets = config.distance_buckets;
  p.prune = Ffnn(span_dim, config.hidden);
  p.pair = Ffnn(pair_input_dim(span_dim, p.num_buckets()), config.hidden);
  p.link = Ffnn(span_dim + entity_dim, config.hidden);
  p.root_features.assign(span_dim, 0.0);
  return p;
}

ScorerParams ScorerParams::random(std::size_t span_dim, std::size_t entity_dim, const ScorerConfig& config,
                                  std::uint64_t seed) {
  ScorerParams p = zeros(span_dim, entity_dim, config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-config.init_scale, config.init_scale);
  p.for_each_array([&](const std::string&, std::vector<double>& values) {
    for (double& x : values) x = dist(rng);
  });
  return p;
}

ScorerParams ScorerParams::zeros_like() const {
  ScorerParams out = *this;
  out.for_each_array([](const std::string&, std::vector<double>& values) {
    std::fill(values.begin(), values.end(), 0.0);
  });
  return out;
}

std::size_t ScorerParams::bucket(std::size_t distance) const {
  return static_cast<std::size_t>(
      std::upper_bound(distance_buckets.begin(), distance_buckets.end(), static_cast<long long>(distance),
                       [](long long d, int boundary) { return d < boundary; }) -
      distance_buckets.begin());
}

std::size_t ScorerParams::num_parameters() const {
  std::size_t n = 0;
  for_each_array([&](const std::string&, const std::vector<double>& values) { n += values.size(); });
  return n;
}

void ScorerParams::axpy(double scale, const ScorerParams& other) {
  std::vector<const std::vector<double>*> rhs;
  other.for_each_array([&](const std::string&, const std::vector<double>& values) { rhs.push_back(&values); });
  std::size_t k = 0;
  for_each_array([&](const std::string& name, std::vector<double>& values) {
    if (k >= rhs.size() || rhs[k]->size() != values.size())
      throw Error(ErrorCode::GradShapeError, "parameter array '" + name + "' shape mismatch");
    const auto& src = *rhs[k++];
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += scale * src[i];
  });
  if (k != rhs.size()) throw Error(ErrorCode::GradShapeError, "parameter sets differ in layout");
}

void ScorerParams::validate() const {
  check_buckets(distance_buckets);
  const auto check = [](const Ffnn& net, std::size_t input, const char* name) {
    if (net.input_dim() != input)
      throw Error(ErrorCode::FeatureDimError, std::string(name) + " input dimension mismatch");
  };
  check(prune, span_dim, "prune");
  check(pair, pair_input_dim(span_dim, num_buckets()), "pair");
  check(link, span_dim + entity_dim, "link");
  if (root_features.size() != span_dim)
    throw Error(ErrorCode::FeatureDimError, "root_features must have the span feature dimension");
}

double pruning_score(const ScorerParams& params, std::span<const double> span_features) {
  return params.prune.forward(span_features);
}

double pair_score(const ScorerParams& params, std::span<const double> parent_features,
                  std::span<const double> child_features, std::size_t span_distance) {
  return params.pair.forward(pair_input(params, parent_features, child_features, span_distance));
}

double link_score(const ScorerParams& params, std::span<const double> span_features,
                  std::span<const double> entity_features) {
  return params.link.forward(link_input(params, span_features, entity_features));
}

std::vector<std::size_t> prune_spans(const ScorerParams& params, const std::vector<Span>& spans, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "top-n must be at least 1");
  std::vector<std::size_t> order(spans.size());
  std::iota(order.begin(), order.end(), 0);
  if (n >= spans.size()) return order;
  std::vector<double> score(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) score[i] = pruning_score(params, spans[i].features);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

void check_inputs(const DocumentGraph& graph, const ScorerParams& params, const std::vector<Span>& spans,
                  const std::vector<CandidateEntity>& entities) {
  if (spans.size() != graph.num_spans() || entities.size() != graph.num_entities())
    throw Error(ErrorCode::InvalidArgument, "spans/entities do not match the graph");
  for (const Span& s : spans)
    if (s.features.size() != params.span_dim)
      throw Error(ErrorCode::FeatureDimError, "span features must have dimension " + std::to_string(params.span_dim));
  for (const CandidateEntity& e : entities)
    if (e.features.size() != params.entity_dim)
      throw Error(ErrorCode::FeatureDimError,
                  "entity '" + e.id + "' features must have dimension " + std::to_string(params.entity_dim));
  if (params.root_features.size() != params.span_dim)
    throw Error(ErrorCode::FeatureDimError, "root_features dimension mismatch");
}

}  // namespace

DocumentGraph fill_scores(const DocumentGraph& graph, const ScorerParams& params, const std::vector<Span>& spans,
                          const std::vector<CandidateEntity>& entities) {
  check_inputs(graph, params, spans, entities);
  DocumentGraph out = graph;
  std::vector<double> prune(spans.size());
  for (std::size_t s = 0; s < spans.size(); ++s) prune[s] = pruning_score(params, spans[s].features);

  for (std::size_t s = 0; s < spans.size(); ++s) {
    const std::size_t child = graph.span_node(s);
    out.set_score(0, child, prune[s] + pair_score(params, params.root_features, spans[s].features, 0));
    for (std::size_t e : graph.span_candidates()[s]) {
      const std::size_t parent = graph.entity_node(e);
      if (!graph.is_legal(parent, child)) continue;
      out.set_score(parent, child, prune[s] + link_score(params, spans[s].features, entities[e].features));
    }
    for (std::size_t t = 0; t < spans.size(); ++t) {
      const std::size_t parent = graph.span_node(t);
      if (t == s || !graph.is_legal(parent, child)) continue;
      const std::size_t distance = s > t ? s - t : t - s;
      out.set_score(parent, child,
                    prune[t] + prune[s] + pair_score(params, spans[t].features, spans[s].features, distance));
    }
  }
  return out;
}

void accumulate_param_grads(const ScorerParams& params, const DocumentGraph& graph, const std::vector<Span>& spans,
                            const std::vector<CandidateEntity>& entities, const Eigen::MatrixXd& edge_grad,
                            ScorerParams& grads) {
  check_inputs(graph, params, spans, entities);
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  if (edge_grad.rows() != n || edge_grad.cols() != n)
    throw Error(ErrorCode::GradShapeError, "edge gradient must be " + std::to_string(n) + "x" + std::to_string(n));
  if (grads.root_features.size() != params.root_features.size() || grads.num_parameters() != params.num_parameters())
    throw Error(ErrorCode::GradShapeError, "gradient buffer does not match parameters");

  std::vector<double> prune_upstream(spans.size(), 0.0);
  std::vector<double> dx(pair_input_dim(params.span_dim, params.num_buckets()), 0.0);

  for (std::size_t s = 0; s < spans.size(); ++s) {
    const std::size_t child = graph.span_node(s);
    for (std::size_t p = 0; p < graph.num_nodes(); ++p) {
      if (!graph.is_legal(p, child)) continue;
      const double g = edge_grad(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(child));
      if (g == 0.0) continue;
      const NodeRef parent = graph.node(p);
      prune_upstream[s] += g;
      switch (parent.kind) {
        case NodeRef::Kind::Root: {
          // Root features feed both the parent slot and the elementwise-product slot.
          const std::size_t d = params.span_dim;
          const auto x = pair_input(params, params.root_features, spans[s].features, 0);
          std::fill(dx.begin(), dx.end(), 0.0);
          params.pair.backward(x, g, grads.pair, dx);
          for (std::size_t i = 0; i < d; ++i)
            grads.root_features[i] += dx[i] + dx[2 * d + i] * spans[s].features[i];
          break;
        }
        case NodeRef::Kind::Entity: {
          const auto x = link_input(params, spans[s].features, entities[parent.index].features);
          params.link.backward(x, g, grads.link);
          break;
        }
        case NodeRef::Kind::Span: {
          const std::size_t t = parent.index;
          const std::size_t distance = s > t ? s - t : t - s;
          prune_upstream[t] += g;
          const auto x = pair_input(params, spans[t].features, spans[s].features, distance);
          params.pair.backward(x, g, grads.pair);
          break;
        }
      }
    }
  }
  for (std::size_t s = 0; s < spans.size(); ++s)
    params.prune.backward(spans[s].features, prune_upstream[s], grads.prune);
}

}  // namespace jointtree
