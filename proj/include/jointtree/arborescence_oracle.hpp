#pragma once

// Brute-force enumeration of spanning arborescences, used to cross-check the
// determinant path and the Edmonds decoder on small graphs.

#include <cstddef>
#include <limits>
#include <vector>

#include "jointtree/model_graph.hpp"

namespace jointtree {

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kDefaultOracleCap = 8;

struct Arborescence {
  std::vector<std::size_t> parent;  // parent[0] == kNoParent
  double score = 0.0;               // sum of edge scores
};

// Every spanning arborescence rooted at node 0 using edges with finite score,
// each exactly once, ordered lexicographically by parent vector.
// Throws OracleTooLarge when the graph has more than `cap` non-root nodes.
std::vector<Arborescence> enumerate_arborescences(const DocumentGraph& graph, std::size_t cap = kDefaultOracleCap);

// True when the tree realizes exactly the gold clustering: each gold cluster is
// one root subtree, headed by its linked entity or, for NIL, by one of its spans.
bool tree_matches_gold(const DocumentGraph& graph, const std::vector<std::size_t>& parent,
                       const GoldAlignment& gold);

// log-sum-exp of tree scores; -inf for an empty list.
double log_sum_tree_scores(const std::vector<Arborescence>& trees);

struct OracleSums {
  std::size_t num_trees = 0;
  std::size_t num_gold_trees = 0;
  double log_partition = 0.0;
  double gold_log_weight = 0.0;
  double best_score = 0.0;
};

OracleSums oracle_sums(const DocumentGraph& graph, const GoldAlignment* gold, std::size_t cap = kDefaultOracleCap);

}  // namespace jointtree
