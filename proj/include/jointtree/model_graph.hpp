#pragma once

// Document graph for joint coreference + entity linking: a root node, one node
// per candidate entity and one node per retained span, with the legal directed
// edges between them and a dense matrix of log-domain edge scores.

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace jointtree {

inline constexpr double kNoEdge = -std::numeric_limits<double>::infinity();

struct MentionSpan {
  int start = 0;
  int end = 0;  // exclusive

  auto operator<=>(const MentionSpan&) const = default;
};

struct Span {
  MentionSpan bounds;
  std::vector<double> features;
  std::vector<std::string> candidates;  // entity ids
};

struct CandidateEntity {
  std::string id;
  std::vector<double> features;
};

struct Cluster {
  std::vector<MentionSpan> mentions;
  std::optional<std::string> link;  // nullopt is NIL
};

struct ClusterAnnotation {
  std::vector<Cluster> clusters;
};

struct NodeRef {
  enum class Kind { Root, Entity, Span };
  Kind kind = Kind::Root;
  std::size_t index = 0;

  static NodeRef root() { return {Kind::Root, 0}; }
  static NodeRef entity(std::size_t i) { return {Kind::Entity, i}; }
  static NodeRef span(std::size_t i) { return {Kind::Span, i}; }

  bool operator==(const NodeRef&) const = default;
};

struct GraphOptions {
  // Maximum |i - j| between span positions for a span->span edge; 0 means no cap.
  std::size_t max_span_distance = 0;
};

enum class UncoverablePolicy { Error, DemoteToNil };

// Node order is [root, entities..., spans...]. Matrix entry (p, c) is the score
// of the edge p -> c (parent row, child column).
class DocumentGraph {
 public:
  DocumentGraph() = default;

  std::size_t num_nodes() const { return 1 + entity_ids_.size() + span_bounds_.size(); }
  std::size_t num_entities() const { return entity_ids_.size(); }
  std::size_t num_spans() const { return span_bounds_.size(); }

  static constexpr std::size_t root_node() { return 0; }
  std::size_t entity_node(std::size_t e) const { return 1 + e; }
  std::size_t span_node(std::size_t s) const { return 1 + entity_ids_.size() + s; }

  NodeRef node(std::size_t i) const;
  std::size_t index_of(NodeRef ref) const;
  std::string node_label(std::size_t i) const;
  std::optional<std::size_t> node_by_label(const std::string& label) const;

  bool is_legal(std::size_t parent, std::size_t child) const { return legal_(parent, child) != 0; }
  double score(std::size_t parent, std::size_t child) const { return scores_(parent, child); }
  void set_score(std::size_t parent, std::size_t child, double value);
  void remove_edge(std::size_t parent, std::size_t child);

  const Eigen::MatrixXd& scores() const { return scores_; }
  std::size_t num_edges() const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  const std::vector<std::string>& entity_ids() const { return entity_ids_; }
  const std::vector<MentionSpan>& span_bounds() const { return span_bounds_; }
  const std::vector<std::vector<std::size_t>>& span_candidates() const { return span_candidates_; }
  std::optional<std::size_t> find_span(MentionSpan bounds) const;
  std::optional<std::size_t> find_entity(const std::string& id) const;

 private:
  friend DocumentGraph build_graph(const std::vector<Span>&, const std::vector<CandidateEntity>&,
                                   const GraphOptions&);

  std::vector<std::string> entity_ids_;
  std::vector<MentionSpan> span_bounds_;
  std::vector<std::vector<std::size_t>> span_candidates_;
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> legal_;
  Eigen::MatrixXd scores_;
};

DocumentGraph build_graph(const std::vector<Span>& spans, const std::vector<CandidateEntity>& entities,
                          const GraphOptions& options = {});

// Gold clusters expressed over graph nodes. Every non-root node belongs to
// exactly one cluster: spans the annotation does not mention become NIL
// singletons and entities no cluster links to become entity-only clusters.
struct GoldAlignment {
  struct NodeCluster {
    std::optional<std::size_t> entity;  // entity index; nullopt for NIL
    std::vector<std::size_t> spans;     // span indices, ascending
  };
  std::vector<NodeCluster> clusters;
  std::vector<std::size_t> span_cluster;
  std::vector<std::size_t> entity_cluster;
  std::size_t dropped_mentions = 0;

  // Graph node indices of a cluster, entity first when linked.
  std::vector<std::size_t> nodes(const DocumentGraph& graph, std::size_t cluster) const;
};

struct AlignOptions {
  UncoverablePolicy uncoverable = UncoverablePolicy::Error;
  // Drop gold mentions missing from the graph instead of failing with GoldSpanPruned.
  bool drop_pruned_mentions = false;
};

GoldAlignment align_gold(const DocumentGraph& graph, const ClusterAnnotation& gold,
                         const AlignOptions& options = {});

// True when some member of the cluster lists the linked entity as a candidate.
bool cluster_coverable(const DocumentGraph& graph, const GoldAlignment::NodeCluster& cluster);

DocumentGraph mask_to_gold(const DocumentGraph& graph, const GoldAlignment& gold);
DocumentGraph mask_to_gold(const DocumentGraph& graph, const ClusterAnnotation& gold,
                           const AlignOptions& options = {});

// Throws InvalidClustering when a mention appears in more than one cluster.
void validate_clustering(const ClusterAnnotation& annotation);

}  // namespace jointtree
