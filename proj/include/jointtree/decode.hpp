#pragma once

#include <cstddef>
#include <vector>

#include "jointtree/arborescence_oracle.hpp"
#include "jointtree/local_loss.hpp"
#include "jointtree/model_graph.hpp"

namespace jointtree {

struct TreeDecoding {
  std::vector<std::size_t> parent;  // parent[0] == kNoParent
  ClusterAnnotation clusters;
  double tree_score = 0.0;
};

// Chu-Liu/Edmonds maximum spanning arborescence rooted at the root node.
// Ties prefer the lower parent index. Throws GraphDisconnected when some node
// cannot be reached from the root.
TreeDecoding edmonds_max_arborescence(const DocumentGraph& graph);

// Reads clusters off an arborescence: an entity child of the root heads a
// cluster of its span descendants linked to that entity (omitted if it has
// none); a span child of the root heads a NIL cluster.
ClusterAnnotation extract_clusters(const std::vector<std::size_t>& parent, const DocumentGraph& graph);

double tree_score(const std::vector<std::size_t>& parent, const DocumentGraph& graph);

// Greedy decoding for the antecedent-ranking model. Each span takes its best
// option (ties keep the earlier option: ε, then antecedents, then entities);
// span->span picks are merged with union-find; a merged cluster links to the
// best-scoring entity picked by any member, ties broken by smaller entity id.
ClusterAnnotation local_decode(const std::vector<AntecedentSet>& sets, const DocumentGraph& graph);
ClusterAnnotation local_decode(const std::vector<Span>& spans, const std::vector<CandidateEntity>& entities,
                               const ScorerParams& params);

// Per-mention entity linking with no coreference: every span is its own
// cluster, linked to its best entity parent unless the root edge scores higher.
ClusterAnnotation standalone_decode(const DocumentGraph& graph);

// Sorts mentions within clusters and clusters by first mention.
void canonicalize(ClusterAnnotation& annotation);

}  // namespace jointtree
