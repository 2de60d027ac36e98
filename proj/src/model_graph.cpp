#include "jointtree/model_graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "jointtree/errors.hpp"

namespace jointtree {

NodeRef DocumentGraph::node(std::size_t i) const {
  if (i == 0) return NodeRef::root();
  if (i <= entity_ids_.size()) return NodeRef::entity(i - 1);
  if (i < num_nodes()) return NodeRef::span(i - 1 - entity_ids_.size());
  throw Error(ErrorCode::InvalidArgument, "node index " + std::to_string(i) + " out of range");
}

std::size_t DocumentGraph::index_of(NodeRef ref) const {
  switch (ref.kind) {
    case NodeRef::Kind::Root:
      return 0;
    case NodeRef::Kind::Entity:
      if (ref.index >= entity_ids_.size()) break;
      return entity_node(ref.index);
    case NodeRef::Kind::Span:
      if (ref.index >= span_bounds_.size()) break;
      return span_node(ref.index);
  }
  throw Error(ErrorCode::InvalidArgument, "node reference out of range");
}

std::string DocumentGraph::node_label(std::size_t i) const {
  const NodeRef ref = node(i);
  switch (ref.kind) {
    case NodeRef::Kind::Root: return "root";
    case NodeRef::Kind::Entity: return "e:" + entity_ids_[ref.index];
    case NodeRef::Kind::Span: return "s:" + std::to_string(ref.index);
  }
  return {};
}

std::optional<std::size_t> DocumentGraph::node_by_label(const std::string& label) const {
  if (label == "root") return root_node();
  if (label.rfind("e:", 0) == 0) {
    if (auto e = find_entity(label.substr(2))) return entity_node(*e);
    return std::nullopt;
  }
  if (label.rfind("s:", 0) == 0) {
    const std::string digits = label.substr(2);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
      return std::nullopt;
    if (digits.size() > 9) return std::nullopt;
    const std::size_t s = std::stoul(digits);
    if (s < span_bounds_.size()) return span_node(s);
  }
  return std::nullopt;
}

void DocumentGraph::set_score(std::size_t parent, std::size_t child, double value) {
  if (parent >= num_nodes() || child >= num_nodes() || !is_legal(parent, child))
    throw Error(ErrorCode::InvalidArgument,
                "edge " + std::to_string(parent) + "->" + std::to_string(child) + " is not legal");
  scores_(parent, child) = value;
}

void DocumentGraph::remove_edge(std::size_t parent, std::size_t child) {
  legal_(parent, child) = 0;
  scores_(parent, child) = kNoEdge;
}

std::size_t DocumentGraph::num_edges() const {
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < legal_.cols(); ++j)
    for (Eigen::Index i = 0; i < legal_.rows(); ++i) count += legal_(i, j) != 0;
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> DocumentGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < num_nodes(); ++p)
    for (std::size_t c = 0; c < num_nodes(); ++c)
      if (is_legal(p, c)) out.emplace_back(p, c);
  return out;
}

std::optional<std::size_t> DocumentGraph::find_span(MentionSpan bounds) const {
  auto it = std::lower_bound(span_bounds_.begin(), span_bounds_.end(), bounds);
  if (it == span_bounds_.end() || *it != bounds) return std::nullopt;
  return static_cast<std::size_t>(it - span_bounds_.begin());
}

std::optional<std::size_t> DocumentGraph::find_entity(const std::string& id) const {
  auto it = std::find(entity_ids_.begin(), entity_ids_.end(), id);
  if (it == entity_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - entity_ids_.begin());
}

DocumentGraph build_graph(const std::vector<Span>& spans, const std::vector<CandidateEntity>& entities,
                          const GraphOptions& options) {
  DocumentGraph g;
  std::unordered_map<std::string, std::size_t> entity_index;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    if (!entity_index.emplace(entities[e].id, e).second)
      throw Error(ErrorCode::DuplicateEntity, "entity id '" + entities[e].id + "' appears twice");
    g.entity_ids_.push_back(entities[e].id);
  }
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const MentionSpan& b = spans[s].bounds;
    if (b.start >= b.end)
      throw Error(ErrorCode::InvalidArgument, "span " + std::to_string(s) + " has start >= end");
    if (s > 0) {
      if (spans[s - 1].bounds == b)
        throw Error(ErrorCode::DuplicateSpan, "span " + std::to_string(s) + " repeats its predecessor");
      if (b < spans[s - 1].bounds)
        throw Error(ErrorCode::InvalidArgument, "spans must be sorted by (start, end)");
    }
    g.span_bounds_.push_back(b);
    std::vector<std::size_t> cands;
    for (const std::string& id : spans[s].candidates) {
      auto it = entity_index.find(id);
      if (it == entity_index.end())
        throw Error(ErrorCode::InvalidCandidate,
                    "span " + std::to_string(s) + " lists unknown candidate '" + id + "'");
      if (std::find(cands.begin(), cands.end(), it->second) == cands.end()) cands.push_back(it->second);
    }
    g.span_candidates_.push_back(std::move(cands));
  }

  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  g.legal_ = decltype(g.legal_)::Zero(n, n);
  for (std::size_t e = 0; e < entities.size(); ++e) g.legal_(0, g.entity_node(e)) = 1;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const std::size_t child = g.span_node(s);
    g.legal_(0, child) = 1;
    for (std::size_t e : g.span_candidates_[s]) g.legal_(g.entity_node(e), child) = 1;
    for (std::size_t t = 0; t < spans.size(); ++t) {
      if (t == s) continue;
      const std::size_t distance = s > t ? s - t : t - s;
      if (options.max_span_distance != 0 && distance > options.max_span_distance) continue;
      g.legal_(g.span_node(t), child) = 1;
    }
  }
  // Unscored legal edges carry weight exp(0) = 1.
  g.scores_ = g.legal_.cast<double>().unaryExpr([](double legal) { return legal != 0.0 ? 0.0 : kNoEdge; });
  return g;
}

std::vector<std::size_t> GoldAlignment::nodes(const DocumentGraph& graph, std::size_t cluster) const {
  const NodeCluster& c = clusters.at(cluster);
  std::vector<std::size_t> out;
  if (c.entity) out.push_back(graph.entity_node(*c.entity));
  for (std::size_t s : c.spans) out.push_back(graph.span_node(s));
  return out;
}

bool cluster_coverable(const DocumentGraph& graph, const GoldAlignment::NodeCluster& cluster) {
  if (!cluster.entity) return true;
  for (std::size_t s : cluster.spans) {
    const auto& cands = graph.span_candidates()[s];
    if (std::find(cands.begin(), cands.end(), *cluster.entity) != cands.end()) return true;
  }
  return false;
}

void validate_clustering(const ClusterAnnotation& annotation) {
  std::set<MentionSpan> seen;
  for (const Cluster& c : annotation.clusters)
    for (const MentionSpan& m : c.mentions)
      if (!seen.insert(m).second)
        throw Error(ErrorCode::InvalidClustering, "mention [" + std::to_string(m.start) + "," +
                                                      std::to_string(m.end) + ") appears in more than one cluster");
}

GoldAlignment align_gold(const DocumentGraph& graph, const ClusterAnnotation& gold, const AlignOptions& options) {
  validate_clustering(gold);
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  GoldAlignment out;
  out.span_cluster.assign(graph.num_spans(), kUnset);
  out.entity_cluster.assign(graph.num_entities(), kUnset);

  for (const Cluster& c : gold.clusters) {
    GoldAlignment::NodeCluster nc;
    for (const MentionSpan& m : c.mentions) {
      auto s = graph.find_span(m);
      if (!s) {
        if (options.drop_pruned_mentions) {
          ++out.dropped_mentions;
          continue;
        }
        throw Error(ErrorCode::GoldSpanPruned, "gold mention [" + std::to_string(m.start) + "," +
                                                   std::to_string(m.end) + ") is not among the retained spans");
      }
      nc.spans.push_back(*s);
    }
    if (nc.spans.empty()) continue;
    std::sort(nc.spans.begin(), nc.spans.end());

    if (c.link) {
      nc.entity = graph.find_entity(*c.link);
      if (!nc.entity || !cluster_coverable(graph, nc)) {
        if (options.uncoverable == UncoverablePolicy::Error)
          throw Error(ErrorCode::UncoverableGold,
                      "gold entity '" + *c.link + "' is in no member's candidate list");
        nc.entity.reset();
      } else if (out.entity_cluster[*nc.entity] != kUnset) {
        throw Error(ErrorCode::InvalidAnnotation, "entity '" + *c.link + "' is linked by two gold clusters");
      }
    }
    const std::size_t idx = out.clusters.size();
    for (std::size_t s : nc.spans) out.span_cluster[s] = idx;
    if (nc.entity) out.entity_cluster[*nc.entity] = idx;
    out.clusters.push_back(std::move(nc));
  }

  for (std::size_t e = 0; e < graph.num_entities(); ++e) {
    if (out.entity_cluster[e] != kUnset) continue;
    out.entity_cluster[e] = out.clusters.size();
    out.clusters.push_back({e, {}});
  }
  for (std::size_t s = 0; s < graph.num_spans(); ++s) {
    if (out.span_cluster[s] != kUnset) continue;
    out.span_cluster[s] = out.clusters.size();
    out.clusters.push_back({std::nullopt, {s}});
  }
  return out;
}

DocumentGraph mask_to_gold(const DocumentGraph& graph, const GoldAlignment& gold) {
  DocumentGraph masked = graph;
  const std::size_t n = graph.num_nodes();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < n; ++c) {
      if (!graph.is_legal(p, c)) continue;
      const NodeRef parent = graph.node(p);
      const NodeRef child = graph.node(c);
      bool keep = true;
      if (child.kind == NodeRef::Kind::Span) {
        const auto& cluster = gold.clusters[gold.span_cluster[child.index]];
        switch (parent.kind) {
          case NodeRef::Kind::Root:
            keep = !cluster.entity.has_value();
            break;
          case NodeRef::Kind::Entity:
            keep = cluster.entity == parent.index;
            break;
          case NodeRef::Kind::Span:
            keep = gold.span_cluster[parent.index] == gold.span_cluster[child.index];
            break;
        }
      }
      if (!keep) masked.remove_edge(p, c);
    }
  }
  return masked;
}

DocumentGraph mask_to_gold(const DocumentGraph& graph, const ClusterAnnotation& gold, const AlignOptions& options) {
  return mask_to_gold(graph, align_gold(graph, gold, options));
}

}  // namespace jointtree
