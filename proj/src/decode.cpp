#include "jointtree/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "jointtree/errors.hpp"

namespace jointtree {

namespace {

// Chu-Liu/Edmonds on a dense score matrix (row = parent, column = child, node 0
// is the root, -inf marks a missing edge). Every node must be reachable.
std::vector<std::size_t> chu_liu_edmonds(const Eigen::MatrixXd& w) {
  const auto n = static_cast<std::size_t>(w.rows());
  std::vector<std::size_t> parent(n, kNoParent);
  for (std::size_t v = 1; v < n; ++v) {
    double best = kNoEdge;
    for (std::size_t u = 0; u < n; ++u) {
      if (u == v) continue;
      const double s = w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
      if (s > best) {
        best = s;
        parent[v] = u;
      }
    }
  }

  // Look for a cycle among the greedy picks.
  std::vector<std::size_t> mark(n, kNoParent);
  std::vector<std::size_t> cycle;
  for (std::size_t start = 1; start < n && cycle.empty(); ++start) {
    std::size_t u = start;
    while (u != 0 && mark[u] == kNoParent) {
      mark[u] = start;
      u = parent[u];
    }
    if (u != 0 && mark[u] == start) {
      std::size_t x = u;
      do {
        cycle.push_back(x);
        x = parent[x];
      } while (x != u);
    }
  }
  if (cycle.empty()) return parent;

  std::vector<char> in_cycle(n, 0);
  for (std::size_t v : cycle) in_cycle[v] = 1;
  std::vector<std::size_t> to_new(n, kNoParent), to_old;
  for (std::size_t v = 0; v < n; ++v) {
    if (in_cycle[v]) continue;
    to_new[v] = to_old.size();
    to_old.push_back(v);
  }
  const std::size_t c = to_old.size();
  const std::size_t m = c + 1;

  Eigen::MatrixXd sub = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m), kNoEdge);
  std::vector<std::size_t> enters(m, kNoParent);  // cycle node entered from outside node u
  std::vector<std::size_t> leaves(m, kNoParent);  // cycle node that parents outside node v
  const auto at = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

  for (std::size_t u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    for (std::size_t v = 1; v < n; ++v) {
      if (v == u) continue;
      if (!in_cycle[v]) {
        sub(at(to_new[u]), at(to_new[v])) = w(at(u), at(v));
      } else {
        const double s = w(at(u), at(v)) - w(at(parent[v]), at(v));
        if (s > sub(at(to_new[u]), at(c))) {
          sub(at(to_new[u]), at(c)) = s;
          enters[to_new[u]] = v;
        }
      }
    }
  }
  for (std::size_t u : cycle) {
    for (std::size_t v = 1; v < n; ++v) {
      if (in_cycle[v]) continue;
      if (w(at(u), at(v)) > sub(at(c), at(to_new[v])) ||
          (leaves[to_new[v]] != kNoParent && w(at(u), at(v)) == sub(at(c), at(to_new[v])) && u < leaves[to_new[v]])) {
        sub(at(c), at(to_new[v])) = w(at(u), at(v));
        leaves[to_new[v]] = u;
      }
    }
  }

  const std::vector<std::size_t> sub_parent = chu_liu_edmonds(sub);
  std::vector<std::size_t> result = parent;
  for (std::size_t v = 1; v < n; ++v) {
    if (in_cycle[v]) continue;
    const std::size_t p = sub_parent[to_new[v]];
    result[v] = p == c ? leaves[to_new[v]] : to_old[p];
  }
  const std::size_t entry_parent = sub_parent[c];
  result[enters[entry_parent]] = to_old[entry_parent];
  return result;
}

void check_reachable(const DocumentGraph& graph) {
  const std::size_t n = graph.num_nodes();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v = 1; v < n; ++v) {
      if (seen[v] || !graph.is_legal(u, v) || !std::isfinite(graph.score(u, v))) continue;
      seen[v] = 1;
      stack.push_back(v);
    }
  }
  for (std::size_t v = 1; v < n; ++v)
    if (!seen[v]) throw Error(ErrorCode::GraphDisconnected, "node " + graph.node_label(v) + " is unreachable from the root");
}

struct UnionFind {
  std::vector<std::size_t> up;
  explicit UnionFind(std::size_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
  std::size_t find(std::size_t x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) up[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

void canonicalize(ClusterAnnotation& annotation) {
  for (Cluster& c : annotation.clusters) std::sort(c.mentions.begin(), c.mentions.end());
  std::sort(annotation.clusters.begin(), annotation.clusters.end(), [](const Cluster& a, const Cluster& b) {
    if (a.mentions.empty() || b.mentions.empty()) return a.mentions.size() > b.mentions.size();
    return a.mentions.front() < b.mentions.front();
  });
}

double tree_score(const std::vector<std::size_t>& parent, const DocumentGraph& graph) {
  double total = 0.0;
  for (std::size_t v = 1; v < parent.size(); ++v) total += graph.score(parent[v], v);
  return total;
}

TreeDecoding edmonds_max_arborescence(const DocumentGraph& graph) {
  check_reachable(graph);
  Eigen::MatrixXd w = graph.scores();
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (!graph.is_legal(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) w(i, j) = kNoEdge;
  TreeDecoding out;
  out.parent = chu_liu_edmonds(w);
  out.tree_score = tree_score(out.parent, graph);
  out.clusters = extract_clusters(out.parent, graph);
  return out;
}

ClusterAnnotation extract_clusters(const std::vector<std::size_t>& parent, const DocumentGraph& graph) {
  const std::size_t n = graph.num_nodes();
  if (parent.size() != n) throw Error(ErrorCode::MalformedTree, "parent vector does not cover the graph");
  std::map<std::size_t, std::vector<std::size_t>> by_head;  // head node -> span indices
  for (std::size_t v = 1; v < n; ++v) {
    const NodeRef ref = graph.node(v);
    if (ref.kind == NodeRef::Kind::Entity) {
      if (parent[v] != 0) throw Error(ErrorCode::MalformedTree, "entity " + graph.node_label(v) + " is not a root child");
      by_head.try_emplace(v);
      continue;
    }
    std::size_t u = v;
    for (std::size_t steps = 0; parent[u] != 0; ++steps) {
      if (steps > n || parent[u] == kNoParent || parent[u] >= n)
        throw Error(ErrorCode::MalformedTree, "node " + graph.node_label(v) + " does not reach the root");
      u = parent[u];
    }
    by_head[u].push_back(ref.index);
  }

  ClusterAnnotation out;
  for (const auto& [head, spans] : by_head) {
    if (spans.empty()) continue;
    Cluster c;
    for (std::size_t s : spans) c.mentions.push_back(graph.span_bounds()[s]);
    const NodeRef h = graph.node(head);
    if (h.kind == NodeRef::Kind::Entity) c.link = graph.entity_ids()[h.index];
    out.clusters.push_back(std::move(c));
  }
  canonicalize(out);
  return out;
}

ClusterAnnotation local_decode(const std::vector<AntecedentSet>& sets, const DocumentGraph& graph) {
  const std::size_t n = graph.num_spans();
  UnionFind uf(n);
  std::vector<std::optional<LocalOption>> entity_pick(n);
  for (const AntecedentSet& set : sets) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < set.options.size(); ++k)
      if (set.options[k].score > set.options[best].score) best = k;
    const LocalOption& o = set.options[best];
    if (o.kind == LocalOption::Kind::Antecedent) uf.unite(set.span, o.index);
    if (o.kind == LocalOption::Kind::Entity) entity_pick[set.span] = o;
  }

  std::map<std::size_t, Cluster> clusters;
  std::map<std::size_t, LocalOption> links;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = uf.find(s);
    clusters[r].mentions.push_back(graph.span_bounds()[s]);
    if (!entity_pick[s]) continue;
    const LocalOption& pick = *entity_pick[s];
    auto it = links.find(r);
    if (it == links.end() || pick.score > it->second.score ||
        (pick.score == it->second.score &&
         graph.entity_ids()[pick.index] < graph.entity_ids()[it->second.index]))
      links[r] = pick;
  }
  ClusterAnnotation out;
  for (auto& [r, c] : clusters) {
    if (auto it = links.find(r); it != links.end()) c.link = graph.entity_ids()[it->second.index];
    out.clusters.push_back(std::move(c));
  }
  canonicalize(out);
  return out;
}

ClusterAnnotation local_decode(const std::vector<Span>& spans, const std::vector<CandidateEntity>& entities,
                               const ScorerParams& params) {
  return local_decode(local_scores(spans, entities, params), build_graph(spans, entities));
}

ClusterAnnotation standalone_decode(const DocumentGraph& graph) {
  ClusterAnnotation out;
  for (std::size_t s = 0; s < graph.num_spans(); ++s) {
    const std::size_t child = graph.span_node(s);
    Cluster c;
    c.mentions.push_back(graph.span_bounds()[s]);
    double best = graph.score(DocumentGraph::root_node(), child);
    for (std::size_t e : graph.span_candidates()[s]) {
      const double v = graph.score(graph.entity_node(e), child);
      if (v > best) {
        best = v;
        c.link = graph.entity_ids()[e];
      }
    }
    out.clusters.push_back(std::move(c));
  }
  canonicalize(out);
  return out;
}

}  // namespace jointtree
