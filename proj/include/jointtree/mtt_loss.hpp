#pragma once

// Exact likelihood of the gold clustering under a distribution over
// root-anchored spanning arborescences, via the Matrix-Tree Theorem:
//
//   NLL = log det(L_r) - sum_c log det(L̂_c)
//
// L_r is the graph Laplacian with the root row/column removed; L̂_c is the
// Laplacian of the gold-masked graph restricted to cluster c with its first row
// replaced by the root-selection weights, so det(L̂_c) sums the weights of all
// subtrees spanning c that hang from the root through exactly one node.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jointtree/model_graph.hpp"

namespace jointtree {

// Exp-weight views built from shifted scores exp(Φ - shift). The likelihood
// itself shifts each column by its own largest incoming score instead.
struct LaplacianView {
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> node_map;  // graph node index per row/column
  double shift = 0.0;
};

struct ClusterLaplacian {
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> node_map;  // node_map[0] is the row replaced by root weights
  double shift = 0.0;
};

struct LogDet {
  double log_abs = 0.0;
  int sign = 0;
};

// LU with partial pivoting; sign is 0 for an exactly singular matrix.
LogDet log_determinant(const Eigen::MatrixXd& matrix);

// Largest finite edge score, or 0 when the graph has no finite edge.
double stabilizing_shift(const DocumentGraph& graph);

LaplacianView laplacian_minor(const DocumentGraph& graph);
LaplacianView laplacian_minor(const DocumentGraph& graph, double shift);

ClusterLaplacian cluster_laplacian(const DocumentGraph& masked, std::span<const std::size_t> cluster_nodes,
                                   double shift);

// log of the summed exp tree score over all spanning arborescences rooted at the root.
// Throws GraphDisconnected when no spanning arborescence exists.
double log_partition(const DocumentGraph& graph);

// log of the summed exp tree score over all subtrees spanning `cluster_nodes`
// attached to the root by a single edge, in the masked graph.
// Throws ClusterUnreachable when there is none.
double cluster_log_weight(const DocumentGraph& masked, std::span<const std::size_t> cluster_nodes);

double global_nll(const DocumentGraph& graph, const GoldAlignment& gold);
double global_nll(const DocumentGraph& graph, const ClusterAnnotation& gold, const AlignOptions& options = {});

struct GlobalNllResult {
  double nll = 0.0;
  double log_partition = 0.0;
  double gold_log_weight = 0.0;
  Eigen::MatrixXd edge_grad;  // dNLL/dΦ, indexed like graph.scores(); zero off the legal edges
};

GlobalNllResult global_nll_grad(const DocumentGraph& graph, const GoldAlignment& gold);

// d log_partition / dΦ: the probability of each edge under the tree distribution.
Eigen::MatrixXd edge_marginals(const DocumentGraph& graph);

}  // namespace jointtree
