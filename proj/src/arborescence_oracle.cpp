#include "jointtree/arborescence_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "jointtree/errors.hpp"

namespace jointtree {

namespace {

bool usable(const DocumentGraph& g, std::size_t p, std::size_t c) {
  return g.is_legal(p, c) && std::isfinite(g.score(p, c));
}

struct Enumerator {
  const DocumentGraph& graph;
  std::vector<std::vector<std::size_t>> incoming;
  std::vector<std::size_t> parent;
  std::vector<Arborescence> out;

  bool closes_cycle(std::size_t v, std::size_t p) const {
    std::size_t u = p;
    while (u != 0 && parent[u] != kNoParent) {
      if (u == v) return true;
      u = parent[u];
    }
    return u == v;
  }

  void run(std::size_t v, double score) {
    if (v == graph.num_nodes()) {
      out.push_back({parent, score});
      return;
    }
    for (std::size_t p : incoming[v]) {
      if (closes_cycle(v, p)) continue;
      parent[v] = p;
      run(v + 1, score + graph.score(p, v));
      parent[v] = kNoParent;
    }
  }
};

}  // namespace

std::vector<Arborescence> enumerate_arborescences(const DocumentGraph& graph, std::size_t cap) {
  const std::size_t n = graph.num_nodes();
  if (n - 1 > cap)
    throw Error(ErrorCode::OracleTooLarge,
                std::to_string(n - 1) + " non-root nodes exceed the oracle cap of " + std::to_string(cap));
  Enumerator e{graph, std::vector<std::vector<std::size_t>>(n), std::vector<std::size_t>(n, kNoParent), {}};
  for (std::size_t c = 1; c < n; ++c)
    for (std::size_t p = 0; p < n; ++p)
      if (p != c && usable(graph, p, c)) e.incoming[c].push_back(p);
  e.run(1, 0.0);
  return std::move(e.out);
}

bool tree_matches_gold(const DocumentGraph& graph, const std::vector<std::size_t>& parent, const GoldAlignment& gold) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::size_t> head(n, kNoParent);
  for (std::size_t v = 1; v < n; ++v) {
    std::size_t u = v;
    for (std::size_t steps = 0; parent[u] != 0; ++steps) {
      if (steps > n || parent[u] == kNoParent) return false;
      u = parent[u];
    }
    head[v] = u;
  }
  for (std::size_t k = 0; k < gold.clusters.size(); ++k) {
    const auto& cluster = gold.clusters[k];
    std::size_t expected;
    if (cluster.entity) {
      expected = graph.entity_node(*cluster.entity);
      if (head[expected] != expected) return false;
    } else {
      expected = head[graph.span_node(cluster.spans.front())];
      const NodeRef h = graph.node(expected);
      if (h.kind != NodeRef::Kind::Span ||
          std::find(cluster.spans.begin(), cluster.spans.end(), h.index) == cluster.spans.end())
        return false;
    }
    for (std::size_t s : cluster.spans)
      if (head[graph.span_node(s)] != expected) return false;
  }
  return true;
}

double log_sum_tree_scores(const std::vector<Arborescence>& trees) {
  if (trees.empty()) return kNoEdge;
  double best = kNoEdge;
  for (const auto& t : trees) best = std::max(best, t.score);
  double sum = 0.0;
  for (const auto& t : trees) sum += std::exp(t.score - best);
  return best + std::log(sum);
}

OracleSums oracle_sums(const DocumentGraph& graph, const GoldAlignment* gold, std::size_t cap) {
  const auto trees = enumerate_arborescences(graph, cap);
  OracleSums out;
  out.num_trees = trees.size();
  out.log_partition = log_sum_tree_scores(trees);
  out.best_score = kNoEdge;
  for (const auto& t : trees) out.best_score = std::max(out.best_score, t.score);
  if (gold) {
    std::vector<Arborescence> matching;
    for (const auto& t : trees)
      if (tree_matches_gold(graph, t.parent, *gold)) matching.push_back(t);
    out.num_gold_trees = matching.size();
    out.gold_log_weight = log_sum_tree_scores(matching);
  }
  return out;
}

}  // namespace jointtree
