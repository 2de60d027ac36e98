#include "jointtree/local_loss.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <unordered_map>

#include "jointtree/errors.hpp"

namespace jointtree {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double m = kNoEdge;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::vector<AntecedentSet> local_scores(const std::vector<Span>& spans, const std::vector<CandidateEntity>& entities,
                                        const ScorerParams& params) {
  std::unordered_map<std::string, std::size_t> entity_index;
  for (std::size_t e = 0; e < entities.size(); ++e) entity_index.emplace(entities[e].id, e);

  std::vector<double> prune(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) prune[i] = pruning_score(params, spans[i].features);

  std::vector<AntecedentSet> out(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    AntecedentSet& set = out[i];
    set.span = i;
    set.options.push_back({LocalOption::Kind::Dummy, 0, 0.0});
    for (std::size_t j = 0; j < i; ++j) {
      const double s = prune[j] + prune[i] + pair_score(params, spans[j].features, spans[i].features, i - j);
      set.options.push_back({LocalOption::Kind::Antecedent, j, s});
    }
    std::vector<std::size_t> seen;
    for (const std::string& id : spans[i].candidates) {
      auto it = entity_index.find(id);
      if (it == entity_index.end())
        throw Error(ErrorCode::InvalidCandidate, "span " + std::to_string(i) + " lists unknown candidate '" + id + "'");
      if (std::find(seen.begin(), seen.end(), it->second) != seen.end()) continue;
      seen.push_back(it->second);
      const double s = prune[i] + link_score(params, spans[i].features, entities[it->second].features);
      set.options.push_back({LocalOption::Kind::Entity, it->second, s});
    }
  }
  return out;
}

std::vector<AntecedentSet> local_scores(const DocumentGraph& graph) {
  std::vector<AntecedentSet> out(graph.num_spans());
  for (std::size_t i = 0; i < graph.num_spans(); ++i) {
    AntecedentSet& set = out[i];
    set.span = i;
    set.options.push_back({LocalOption::Kind::Dummy, 0, 0.0});
    const std::size_t child = graph.span_node(i);
    for (std::size_t j = 0; j < i; ++j) {
      const std::size_t parent = graph.span_node(j);
      if (graph.is_legal(parent, child) && std::isfinite(graph.score(parent, child)))
        set.options.push_back({LocalOption::Kind::Antecedent, j, graph.score(parent, child)});
    }
    for (std::size_t e : graph.span_candidates()[i]) {
      const std::size_t parent = graph.entity_node(e);
      if (graph.is_legal(parent, child) && std::isfinite(graph.score(parent, child)))
        set.options.push_back({LocalOption::Kind::Entity, e, graph.score(parent, child)});
    }
  }
  return out;
}

std::vector<std::vector<char>> local_gold_options(const std::vector<AntecedentSet>& sets, const GoldAlignment& gold) {
  std::vector<std::vector<char>> out(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const AntecedentSet& set = sets[i];
    const std::size_t cluster = gold.span_cluster.at(set.span);
    const auto& entity = gold.clusters[cluster].entity;
    out[i].assign(set.options.size(), 0);
    bool has_antecedent = false;
    bool has_entity = false;
    for (std::size_t k = 0; k < set.options.size(); ++k) {
      const LocalOption& o = set.options[k];
      if (o.kind == LocalOption::Kind::Antecedent && gold.span_cluster.at(o.index) == cluster) {
        out[i][k] = 1;
        has_antecedent = true;
      } else if (o.kind == LocalOption::Kind::Entity && entity == o.index) {
        out[i][k] = 1;
        has_entity = true;
      }
    }
    // ε is correct only for a cluster-initial mention that cannot reach its entity.
    if (!has_antecedent && !has_entity) out[i][0] = 1;
  }
  return out;
}

double local_nll(const std::vector<AntecedentSet>& sets, const GoldAlignment& gold) {
  return local_nll_grad(sets, gold).nll;
}

LocalNllResult local_nll_grad(const std::vector<AntecedentSet>& sets, const GoldAlignment& gold) {
  const auto correct = local_gold_options(sets, gold);
  LocalNllResult out;
  out.option_grad.resize(sets.size());
  std::vector<double> all, good;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& options = sets[i].options;
    all.clear();
    good.clear();
    for (std::size_t k = 0; k < options.size(); ++k) {
      all.push_back(options[k].score);
      if (correct[i][k]) good.push_back(options[k].score);
    }
    assert(!good.empty());
    const double log_z = log_sum_exp(all);
    const double log_gold = log_sum_exp(good);
    out.nll += log_z - log_gold;
    auto& g = out.option_grad[i];
    g.resize(options.size());
    for (std::size_t k = 0; k < options.size(); ++k) {
      const double p = std::exp(options[k].score - log_z);
      const double q = correct[i][k] ? std::exp(options[k].score - log_gold) : 0.0;
      g[k] = p - q;
    }
  }
  return out;
}

Eigen::MatrixXd local_grad_to_edges(const DocumentGraph& graph, const std::vector<AntecedentSet>& sets,
                                    const std::vector<std::vector<double>>& option_grad) {
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, n);
  if (option_grad.size() != sets.size()) throw Error(ErrorCode::GradShapeError, "option gradient shape mismatch");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& options = sets[i].options;
    if (option_grad[i].size() != options.size())
      throw Error(ErrorCode::GradShapeError, "option gradient shape mismatch");
    const auto child = static_cast<Eigen::Index>(graph.span_node(sets[i].span));
    for (std::size_t k = 0; k < options.size(); ++k) {
      const LocalOption& o = options[k];
      if (o.kind == LocalOption::Kind::Antecedent)
        grad(static_cast<Eigen::Index>(graph.span_node(o.index)), child) += option_grad[i][k];
      else if (o.kind == LocalOption::Kind::Entity)
        grad(static_cast<Eigen::Index>(graph.entity_node(o.index)), child) += option_grad[i][k];
    }
  }
  return grad;
}

}  // namespace jointtree
