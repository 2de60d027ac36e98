#include "jointtree/mtt_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/LU>

#include "jointtree/errors.hpp"

namespace jointtree {

namespace {

bool has_edge(const DocumentGraph& g, std::size_t p, std::size_t c) {
  return g.is_legal(p, c) && std::isfinite(g.score(p, c));
}

using Shifts = std::vector<double>;  // score offset per child node

// Every tree picks exactly one incoming edge per node, so shifting the incoming
// scores of one node by a constant moves the log weight by that constant.
Shifts column_shifts(const DocumentGraph& g, std::span<const std::size_t> children, const std::vector<char>& allowed) {
  Shifts out(g.num_nodes(), 0.0);
  for (std::size_t c : children) {
    double m = kNoEdge;
    for (std::size_t p = 0; p < g.num_nodes(); ++p)
      if (allowed[p] && has_edge(g, p, c)) m = std::max(m, g.score(p, c));
    out[c] = std::isfinite(m) ? m : 0.0;
  }
  return out;
}

double total_shift(const Shifts& shifts, std::span<const std::size_t> nodes) {
  double t = 0.0;
  for (std::size_t c : nodes) t += shifts[c];
  return t;
}

double weight(const DocumentGraph& g, std::size_t p, std::size_t c, const Shifts& shift) {
  return has_edge(g, p, c) ? std::exp(g.score(p, c) - shift[c]) : 0.0;
}

// Laplacian-type matrix given by its edge weights: M(j, j) = excess(j) + sum_i w(i, j),
// M(i, j) = -w(i, j). excess(j) is the weight entering j from outside the matrix.
struct WeightMatrix {
  Eigen::MatrixXd w;
  Eigen::VectorXd excess;
};

// Elimination carried out on the weights and excesses directly, so every update
// adds non-negative terms. Pivots keep full relative accuracy even when the
// determinant is far below the size of the entries, which plain LU cannot do.
struct WeightFactor {
  Eigen::MatrixXd lu;  // unit lower L below the diagonal, U on and above it
  double log_det = 0.0;

  Eigen::MatrixXd inverse() const {
    const auto n = lu.rows();
    Eigen::MatrixXd x = lu.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(n, n));
    return lu.triangularView<Eigen::Upper>().solve(x);
  }
};

std::optional<WeightFactor> factor_weights(WeightMatrix m) {
  const Eigen::Index n = m.w.rows();
  WeightFactor f;
  f.lu = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double pivot = m.excess(k);
    for (Eigen::Index i = k + 1; i < n; ++i) pivot += m.w(i, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return std::nullopt;
    f.lu(k, k) = pivot;
    f.log_det += std::log(pivot);
    for (Eigen::Index i = k + 1; i < n; ++i) f.lu(i, k) = -m.w(i, k) / pivot;
    for (Eigen::Index j = k + 1; j < n; ++j) {
      f.lu(k, j) = -m.w(k, j);
      const double a = m.w(k, j) / pivot;
      if (a == 0.0) continue;
      m.excess(j) += a * m.excess(k);
      for (Eigen::Index i = k + 1; i < n; ++i)
        if (i != j) m.w(i, j) += m.w(i, k) * a;
    }
  }
  return f;
}

// Every node in `nodes` reachable from the root through edges among {root} ∪ nodes.
bool reachable_from_root(const DocumentGraph& g, std::span<const std::size_t> nodes) {
  std::vector<char> seen(g.num_nodes(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : nodes) {
      if (seen[v] || !has_edge(g, u, v)) continue;
      seen[v] = 1;
      ++reached;
      stack.push_back(v);
    }
  }
  return reached == nodes.size();
}

std::vector<std::size_t> non_root_nodes(const DocumentGraph& g) {
  std::vector<std::size_t> nodes(g.num_nodes() - 1);
  std::iota(nodes.begin(), nodes.end(), 1);
  return nodes;
}

// Weight matrix over `nodes` (edges among them) with excess from `source`.
WeightMatrix weights_over(const DocumentGraph& g, std::span<const std::size_t> nodes, std::size_t source,
                          const Shifts& shift) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  WeightMatrix m{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t c = nodes[static_cast<std::size_t>(j)];
    m.excess(j) = weight(g, source, c, shift);
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) m.w(i, j) = weight(g, nodes[static_cast<std::size_t>(i)], c, shift);
  }
  return m;
}

// Adds scale * d log det / dΦ for every edge inside `nodes` or leaving `source`.
void scatter_weight_grad(const DocumentGraph& g, std::span<const std::size_t> nodes, std::size_t source,
                         const Shifts& shift, const Eigen::MatrixXd& inv, double scale, Eigen::MatrixXd& grad) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t c = nodes[static_cast<std::size_t>(j)];
    const auto ci = static_cast<Eigen::Index>(c);
    if (const double w = weight(g, source, c, shift); w > 0.0)
      grad(static_cast<Eigen::Index>(source), ci) += scale * w * inv(j, j);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const std::size_t p = nodes[static_cast<std::size_t>(i)];
      if (const double w = weight(g, p, c, shift); w > 0.0)
        grad(static_cast<Eigen::Index>(p), ci) += scale * w * (inv(j, j) - inv(j, i));
    }
  }
}

struct LogWeight {
  double log_weight = 0.0;
  Eigen::MatrixXd grad;  // d log_weight / dΦ, filled on request
};

std::optional<LogWeight> partition_impl(const DocumentGraph& g, bool want_grad) {
  const auto nodes = non_root_nodes(g);
  const Shifts shift = column_shifts(g, nodes, std::vector<char>(g.num_nodes(), 1));
  const auto f = factor_weights(weights_over(g, nodes, 0, shift));
  if (!f) return std::nullopt;
  LogWeight out{f->log_det + total_shift(shift, nodes), {}};
  if (want_grad) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    out.grad = Eigen::MatrixXd::Zero(n, n);
    scatter_weight_grad(g, nodes, 0, shift, f->inverse(), 1.0, out.grad);
  }
  return out;
}

// Subtrees spanning the cluster attached to the root by one edge: the sum over
// members j of w(r -> u_j) times the weight of cluster trees rooted at u_j.
std::optional<LogWeight> cluster_impl(const DocumentGraph& g, std::span<const std::size_t> cluster, bool want_grad) {
  std::vector<char> allowed(g.num_nodes(), 0);
  allowed[0] = 1;
  for (std::size_t c : cluster) allowed[c] = 1;
  const Shifts shift = column_shifts(g, cluster, allowed);

  struct Term {
    std::size_t head;
    std::vector<std::size_t> rest;
    double log_weight;
    std::optional<WeightFactor> factor;
  };
  std::vector<Term> terms;
  for (std::size_t j = 0; j < cluster.size(); ++j) {
    if (!has_edge(g, 0, cluster[j])) continue;
    Term t{cluster[j], {}, g.score(0, cluster[j]) - shift[cluster[j]], std::nullopt};
    for (std::size_t k = 0; k < cluster.size(); ++k)
      if (k != j) t.rest.push_back(cluster[k]);
    if (!t.rest.empty()) {
      t.factor = factor_weights(weights_over(g, t.rest, t.head, shift));
      if (!t.factor) continue;
      t.log_weight += t.factor->log_det;
    }
    terms.push_back(std::move(t));
  }
  if (terms.empty()) return std::nullopt;

  double top = kNoEdge;
  for (const Term& t : terms) top = std::max(top, t.log_weight);
  double sum = 0.0;
  for (const Term& t : terms) sum += std::exp(t.log_weight - top);
  const double log_sum = top + std::log(sum);

  LogWeight out{log_sum + total_shift(shift, cluster), {}};
  if (want_grad) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    out.grad = Eigen::MatrixXd::Zero(n, n);
    for (const Term& t : terms) {
      const double share = std::exp(t.log_weight - log_sum);
      out.grad(0, static_cast<Eigen::Index>(t.head)) += share;
      if (t.factor) scatter_weight_grad(g, t.rest, t.head, shift, t.factor->inverse(), share, out.grad);
    }
  }
  return out;
}

// Dense matrices for inspection, all scores shifted by one constant.
Eigen::MatrixXd assemble_minor(const DocumentGraph& g, double shift) {
  const auto nodes = non_root_nodes(g);
  const WeightMatrix m = weights_over(g, nodes, 0, Shifts(g.num_nodes(), shift));
  Eigen::MatrixXd out = -m.w;
  for (Eigen::Index j = 0; j < out.cols(); ++j) out(j, j) = m.excess(j) + m.w.col(j).sum();
  return out;
}

Eigen::MatrixXd assemble_cluster(const DocumentGraph& g, std::span<const std::size_t> nodes, double shift) {
  const WeightMatrix m = weights_over(g, nodes, 0, Shifts(g.num_nodes(), shift));
  Eigen::MatrixXd out = -m.w;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out(j, j) = m.w.col(j).sum();
    out(0, j) = m.excess(j);
  }
  return out;
}

LogDet log_det_from_lu(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  LogDet r;
  r.sign = static_cast<int>(lu.permutationP().determinant());
  const auto& packed = lu.matrixLU();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double d = packed(i, i);
    if (d == 0.0) return {0.0, 0};
    if (d < 0) r.sign = -r.sign;
    r.log_abs += std::log(std::abs(d));
  }
  return r;
}

}  // namespace

LogDet log_determinant(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw Error(ErrorCode::InvalidArgument, "determinant of a non-square matrix");
  if (matrix.rows() == 0) return {0.0, 1};
  return log_det_from_lu(Eigen::PartialPivLU<Eigen::MatrixXd>(matrix));
}

double stabilizing_shift(const DocumentGraph& graph) {
  double shift = kNoEdge;
  for (const auto& [p, c] : graph.edges())
    if (std::isfinite(graph.score(p, c))) shift = std::max(shift, graph.score(p, c));
  return std::isfinite(shift) ? shift : 0.0;
}

LaplacianView laplacian_minor(const DocumentGraph& graph) { return laplacian_minor(graph, stabilizing_shift(graph)); }

LaplacianView laplacian_minor(const DocumentGraph& graph, double shift) {
  return {assemble_minor(graph, shift), non_root_nodes(graph), shift};
}

ClusterLaplacian cluster_laplacian(const DocumentGraph& masked, std::span<const std::size_t> cluster_nodes,
                                   double shift) {
  return {assemble_cluster(masked, cluster_nodes, shift),
          std::vector<std::size_t>(cluster_nodes.begin(), cluster_nodes.end()), shift};
}

namespace {

LogWeight checked_partition(const DocumentGraph& graph, bool want_grad) {
  if (!reachable_from_root(graph, non_root_nodes(graph)))
    throw Error(ErrorCode::GraphDisconnected, "some node is unreachable from the root");
  auto r = partition_impl(graph, want_grad);
  if (!r) throw Error(ErrorCode::GraphDisconnected, "Laplacian minor is numerically singular");
  return std::move(*r);
}

LogWeight checked_cluster(const DocumentGraph& masked, std::span<const std::size_t> cluster, bool want_grad,
                          const std::string& what) {
  if (!reachable_from_root(masked, cluster))
    throw Error(ErrorCode::ClusterUnreachable, what + " has no subtree attached to the root");
  auto r = cluster_impl(masked, cluster, want_grad);
  if (!r) throw Error(ErrorCode::ClusterUnreachable, what + " has numerically zero weight");
  return std::move(*r);
}

}  // namespace

double log_partition(const DocumentGraph& graph) { return checked_partition(graph, false).log_weight; }

double cluster_log_weight(const DocumentGraph& masked, std::span<const std::size_t> cluster_nodes) {
  return checked_cluster(masked, cluster_nodes, false, "cluster").log_weight;
}

double global_nll(const DocumentGraph& graph, const GoldAlignment& gold) {
  return global_nll_grad(graph, gold).nll;
}

double global_nll(const DocumentGraph& graph, const ClusterAnnotation& gold, const AlignOptions& options) {
  return global_nll(graph, align_gold(graph, gold, options));
}

Eigen::MatrixXd edge_marginals(const DocumentGraph& graph) { return checked_partition(graph, true).grad; }

GlobalNllResult global_nll_grad(const DocumentGraph& graph, const GoldAlignment& gold) {
  GlobalNllResult out;
  LogWeight full = checked_partition(graph, true);
  out.log_partition = full.log_weight;
  out.edge_grad = std::move(full.grad);

  const DocumentGraph masked = mask_to_gold(graph, gold);
  for (std::size_t k = 0; k < gold.clusters.size(); ++k) {
    const LogWeight c = checked_cluster(masked, gold.nodes(graph, k), true, "gold cluster " + std::to_string(k));
    out.gold_log_weight += c.log_weight;
    out.edge_grad -= c.grad;
  }
  out.nll = out.log_partition - out.gold_log_weight;
  return out;
}

}  // namespace jointtree
