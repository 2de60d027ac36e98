#include "jointtree/pipeline.hpp"

#include <cmath>
#include <map>

#include <json.hpp>

#include "jointtree/decode.hpp"
#include "jointtree/errors.hpp"
#include "jointtree/local_loss.hpp"
#include "jointtree/mtt_loss.hpp"

namespace jointtree {

using nlohmann::json;

namespace {

template <class Fn>
auto for_document(const std::string& doc_id, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "document '" + doc_id + "': " + e.detail());
  }
}

const ClusterAnnotation& require_gold(const DocumentRecord& record) {
  if (!record.gold) throw Error(ErrorCode::InvalidArgument, "document has no gold annotation");
  return *record.gold;
}

}  // namespace

void RunConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (oracle_cap == 0) throw Error(ErrorCode::InvalidArgument, "oracle cap must be positive");
  ScorerParams::zeros(1, 1, scorer_config());  // validates bucket boundaries
}

ScorerConfig RunConfig::scorer_config() const {
  ScorerConfig c;
  c.hidden = hidden;
  c.distance_buckets = distance_buckets;
  return c;
}

PreparedDocument prepare_document(const DocumentRecord& record, const ScorerParams* params, const RunConfig& config) {
  PreparedDocument doc;
  doc.entities = record.entities;
  const GraphOptions options{config.max_span_distance};

  if (record.raw_scores) {
    doc.spans = record.spans;
    doc.graph = build_graph(doc.spans, doc.entities, options);
    Eigen::MatrixXd table = Eigen::MatrixXd::Constant(doc.graph.num_nodes(), doc.graph.num_nodes(), kNoEdge);
    for (const auto& [key, value] : *record.raw_scores) {
      const auto bar = key.find('|');
      const auto parent = doc.graph.node_by_label(key.substr(0, bar));
      const auto child = doc.graph.node_by_label(key.substr(bar + 1));
      if (!parent || !child) throw Error(ErrorCode::ParseError, "raw score key '" + key + "' names an unknown node");
      table(static_cast<Eigen::Index>(*parent), static_cast<Eigen::Index>(*child)) = value;
    }
    for (const auto& [p, c] : doc.graph.edges()) {
      const double v = table(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
      if (p == 0 && c <= doc.graph.num_entities()) continue;  // root->entity is fixed at 0
      if (std::isfinite(v)) doc.graph.set_score(p, c, v);
      else doc.graph.remove_edge(p, c);
    }
    return doc;
  }

  if (record.spans.empty()) {
    doc.graph = build_graph(doc.spans, doc.entities, options);
    return doc;
  }
  if (params == nullptr) throw Error(ErrorCode::InvalidArgument, "document has features but no parameters were given");
  if (record.span_dim() != params->span_dim || (!record.entities.empty() && record.entity_dim() != params->entity_dim))
    throw Error(ErrorCode::FeatureDimError, "document feature dimensions do not match the parameters");

  if (config.top_n > 0) {
    for (std::size_t i : prune_spans(*params, record.spans, config.top_n)) doc.spans.push_back(record.spans[i]);
  } else {
    doc.spans = record.spans;
  }
  doc.graph = fill_scores(build_graph(doc.spans, doc.entities, options), *params, doc.spans, doc.entities);
  return doc;
}

GoldAlignment align_for_training(const PreparedDocument& doc, const ClusterAnnotation& gold, const RunConfig& config) {
  AlignOptions options;
  options.uncoverable = config.uncoverable;
  options.drop_pruned_mentions = config.top_n > 0;
  return align_gold(doc.graph, gold, options);
}

double document_nll(const PreparedDocument& doc, const ClusterAnnotation& gold, const RunConfig& config) {
  const GoldAlignment alignment = align_for_training(doc, gold, config);
  if (config.model == ModelKind::Global) return global_nll(doc.graph, alignment);
  return local_nll(local_scores(doc.graph), alignment);
}

double document_nll_and_grad(const PreparedDocument& doc, const ClusterAnnotation& gold, const ScorerParams& params,
                             const RunConfig& config, ScorerParams& grads) {
  const GoldAlignment alignment = align_for_training(doc, gold, config);
  if (config.model == ModelKind::Global) {
    const GlobalNllResult r = global_nll_grad(doc.graph, alignment);
    accumulate_param_grads(params, doc.graph, doc.spans, doc.entities, r.edge_grad, grads);
    return r.nll;
  }
  const auto sets = local_scores(doc.graph);
  const LocalNllResult r = local_nll_grad(sets, alignment);
  accumulate_param_grads(params, doc.graph, doc.spans, doc.entities, local_grad_to_edges(doc.graph, sets, r.option_grad),
                         grads);
  return r.nll;
}

std::vector<DocumentLoss> compute_losses(const std::vector<DocumentRecord>& dataset, const ScorerParams* params,
                                         const RunConfig& config) {
  std::vector<DocumentLoss> out;
  for (const DocumentRecord& record : dataset) {
    out.push_back(for_document(record.doc_id, [&] {
      const PreparedDocument doc = prepare_document(record, params, config);
      return DocumentLoss{record.doc_id, document_nll(doc, require_gold(record), config)};
    }));
  }
  return out;
}

Prediction decode_document(const DocumentRecord& record, const ScorerParams* params, const RunConfig& config) {
  return for_document(record.doc_id, [&] {
    const PreparedDocument doc = prepare_document(record, params, config);
    Prediction p;
    p.doc_id = record.doc_id;
    if (config.model == ModelKind::Global) {
      TreeDecoding tree = edmonds_max_arborescence(doc.graph);
      p.clusters = std::move(tree.clusters);
      p.tree_score = tree.tree_score;
    } else {
      p.clusters = local_decode(local_scores(doc.graph), doc.graph);
    }
    return p;
  });
}

std::vector<Prediction> decode_dataset(const std::vector<DocumentRecord>& dataset, const ScorerParams* params,
                                       const RunConfig& config) {
  std::vector<Prediction> out;
  for (const DocumentRecord& record : dataset) out.push_back(decode_document(record, params, config));
  return out;
}

EvaluationResult evaluate_predictions(const std::vector<DocumentRecord>& gold, const std::vector<Prediction>& predictions,
                                      const RunConfig& config) {
  std::map<std::string, const Prediction*> by_id;
  for (const Prediction& p : predictions) {
    if (!by_id.emplace(p.doc_id, &p).second)
      throw Error(ErrorCode::InvalidArgument, "two predictions for document '" + p.doc_id + "'");
  }
  static const ClusterAnnotation kEmpty;
  std::vector<EvalInput> inputs;
  for (const DocumentRecord& record : gold) {
    if (!record.gold) throw Error(ErrorCode::InvalidArgument, "document '" + record.doc_id + "' has no gold annotation");
    auto it = by_id.find(record.doc_id);
    const ClusterAnnotation* pred = it == by_id.end() ? &kEmpty : &it->second->clusters;
    if (it != by_id.end()) by_id.erase(it);
    inputs.push_back({record.doc_id, &*record.gold, pred, &record.spans});
  }
  if (!by_id.empty())
    throw Error(ErrorCode::InvalidArgument, "prediction for unknown document '" + by_id.begin()->first + "'");

  EvaluationResult out;
  for (const EvalInput& input : inputs) out.documents.push_back(for_document(input.doc_id, [&] {
    return evaluate_document(input);
  }));
  out.corpus = evaluate_corpus(inputs, EvalOptions{config.macro_slices});
  return out;
}

ScorerParams initial_params(const std::vector<DocumentRecord>& dataset, const RunConfig& config) {
  for (const DocumentRecord& record : dataset) {
    if (!record.has_features()) continue;
    return ScorerParams::random(record.span_dim(), record.entity_dim(), config.scorer_config(), config.seed);
  }
  throw Error(ErrorCode::InvalidArgument, "no document carries features; raw_scores documents cannot be trained on");
}

std::vector<double> train(const std::vector<DocumentRecord>& dataset, ScorerParams& params, const RunConfig& config,
                          const std::function<void(std::size_t, double)>& on_epoch) {
  config.validate();
  for (const DocumentRecord& record : dataset) {
    if (record.raw_scores)
      throw Error(ErrorCode::InvalidArgument, "document '" + record.doc_id + "' has raw_scores and cannot be trained on");
    require_gold(record);
  }
  std::vector<double> curve;
  if (dataset.empty()) return curve;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ScorerParams grads = params.zeros_like();
    double total = 0.0;
    for (const DocumentRecord& record : dataset) {
      total += for_document(record.doc_id, [&] {
        const PreparedDocument doc = prepare_document(record, &params, config);
        return document_nll_and_grad(doc, *record.gold, params, config, grads);
      });
    }
    const double mean = total / static_cast<double>(dataset.size());
    curve.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
    params.axpy(-config.learning_rate / static_cast<double>(dataset.size()), grads);
  }
  return curve;
}

std::vector<OracleCheck> oracle_check(const std::vector<DocumentRecord>& dataset, const ScorerParams* params,
                                      const RunConfig& config) {
  std::vector<OracleCheck> out;
  for (const DocumentRecord& record : dataset) {
    OracleCheck check;
    check.doc_id = record.doc_id;
    for_document(record.doc_id, [&] {
      const PreparedDocument doc = prepare_document(record, params, config);
      const std::size_t nodes = doc.graph.num_nodes() - 1;
      if (nodes > config.oracle_cap) {
        check.status = OracleCheck::Status::Skipped;
        check.message = std::to_string(nodes) + " non-root nodes exceed the oracle cap of " +
                        std::to_string(config.oracle_cap);
        return 0;
      }
      std::optional<GoldAlignment> alignment;
      if (record.gold) alignment = align_for_training(doc, *record.gold, config);
      const OracleSums oracle = oracle_sums(doc.graph, alignment ? &*alignment : nullptr, config.oracle_cap);

      check.num_trees = oracle.num_trees;
      check.oracle_log_partition = oracle.log_partition;
      check.log_partition = log_partition(doc.graph) + (config.inject_fault ? 1e-3 : 0.0);
      check.partition_det = std::exp(check.log_partition);
      std::vector<std::string> failures;
      if (std::abs(check.log_partition - check.oracle_log_partition) > 1e-9) failures.push_back("partition");

      if (alignment) {
        check.gold_log_weight = global_nll_grad(doc.graph, *alignment).gold_log_weight;
        check.oracle_gold_log_weight = oracle.gold_log_weight;
        if (!(std::abs(*check.gold_log_weight - *check.oracle_gold_log_weight) <= 1e-8)) failures.push_back("gold");
      }
      check.edmonds_score = edmonds_max_arborescence(doc.graph).tree_score;
      check.oracle_best_score = oracle.best_score;
      if (std::abs(check.edmonds_score - check.oracle_best_score) > 1e-9 * std::max(1.0, std::abs(check.oracle_best_score)))
        failures.push_back("edmonds");

      if (!failures.empty()) {
        check.status = OracleCheck::Status::Fail;
        for (const auto& f : failures) check.message += (check.message.empty() ? "mismatch: " : ", ") + f;
      }
      return 0;
    });
    out.push_back(std::move(check));
  }
  return out;
}

std::string serialize_oracle_check(const OracleCheck& c) {
  json j;
  j["doc_id"] = c.doc_id;
  j["status"] = c.status == OracleCheck::Status::Pass ? "pass" : c.status == OracleCheck::Status::Fail ? "fail" : "skipped";
  if (!c.message.empty()) j["message"] = c.message;
  if (c.status != OracleCheck::Status::Skipped) {
    j["num_trees"] = c.num_trees;
    j["det"] = c.partition_det;
    j["log_partition"] = c.log_partition;
    j["oracle_log_partition"] = c.oracle_log_partition;
    if (c.gold_log_weight) {
      j["gold_log_weight"] = *c.gold_log_weight;
      j["oracle_gold_log_weight"] = *c.oracle_gold_log_weight;
    }
    j["edmonds_score"] = c.edmonds_score;
    j["oracle_best_score"] = c.oracle_best_score;
  }
  return j.dump();
}

std::string serialize_losses(const std::vector<DocumentLoss>& losses, const RunConfig& config) {
  json docs = json::object();
  double total = 0.0;
  for (const DocumentLoss& l : losses) {
    docs[l.doc_id] = l.nll;
    total += l.nll;
  }
  json j;
  j["model"] = config.model == ModelKind::Global ? "global" : "local";
  j["documents"] = std::move(docs);
  j["mean_nll"] = losses.empty() ? 0.0 : total / static_cast<double>(losses.size());
  return j.dump();
}

}  // namespace jointtree
