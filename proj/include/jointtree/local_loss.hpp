#pragma once

// Antecedent-ranking likelihood: every span picks one option among its earlier
// spans, its candidate entities and a dummy ε (fixed score 0). Training
// maximizes the marginal probability of the gold-consistent options.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "jointtree/model_graph.hpp"
#include "jointtree/scorer.hpp"

namespace jointtree {

struct LocalOption {
  enum class Kind { Dummy, Antecedent, Entity };
  Kind kind = Kind::Dummy;
  std::size_t index = 0;  // span index for Antecedent, entity index for Entity
  double score = 0.0;
};

// options[0] is always the dummy; antecedents follow in document order, then
// candidate entities in candidate-list order.
struct AntecedentSet {
  std::size_t span = 0;
  std::vector<LocalOption> options;
};

std::vector<AntecedentSet> local_scores(const std::vector<Span>& spans, const std::vector<CandidateEntity>& entities,
                                        const ScorerParams& params);

// Same options read off a scored graph: antecedent s_j of s_i takes the score of
// edge s_j -> s_i, entity e takes e -> s_i. Edges absent from the graph are skipped.
std::vector<AntecedentSet> local_scores(const DocumentGraph& graph);

// gold[i][k] is true when option k of span i is consistent with the gold clustering.
std::vector<std::vector<char>> local_gold_options(const std::vector<AntecedentSet>& sets, const GoldAlignment& gold);

double local_nll(const std::vector<AntecedentSet>& sets, const GoldAlignment& gold);

struct LocalNllResult {
  double nll = 0.0;
  std::vector<std::vector<double>> option_grad;  // dNLL/dscore, shaped like the option lists
};

LocalNllResult local_nll_grad(const std::vector<AntecedentSet>& sets, const GoldAlignment& gold);

// Scatters option gradients onto the corresponding graph edges.
Eigen::MatrixXd local_grad_to_edges(const DocumentGraph& graph, const std::vector<AntecedentSet>& sets,
                                    const std::vector<std::vector<double>>& option_grad);

}  // namespace jointtree
