#pragma once

// Dataset-level drivers behind the command-line tool: loss, decoding,
// evaluation, training and the brute-force oracle check.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jointtree/arborescence_oracle.hpp"
#include "jointtree/document_io.hpp"
#include "jointtree/metrics.hpp"
#include "jointtree/model_graph.hpp"
#include "jointtree/scorer.hpp"

namespace jointtree {

enum class ModelKind { Local, Global };

struct RunConfig {
  ModelKind model = ModelKind::Global;
  std::size_t top_n = 0;  // 0 keeps every span
  double learning_rate = 0.1;
  std::size_t epochs = 10;
  std::uint64_t seed = 13;
  UncoverablePolicy uncoverable = UncoverablePolicy::Error;
  std::vector<int> distance_buckets = default_distance_buckets();
  std::size_t hidden = 0;
  std::size_t max_span_distance = 0;  // 0 is unlimited
  std::size_t oracle_cap = kDefaultOracleCap;
  bool macro_slices = false;
  // Test hook: perturbs the determinant path inside the oracle check.
  bool inject_fault = false;

  void validate() const;
  ScorerConfig scorer_config() const;
};

// A document ready for inference: retained spans, their graph with scores filled.
struct PreparedDocument {
  std::vector<Span> spans;
  std::vector<CandidateEntity> entities;
  DocumentGraph graph;
};

// Uses raw_scores when the record has them, otherwise `params` (required).
PreparedDocument prepare_document(const DocumentRecord& record, const ScorerParams* params, const RunConfig& config);

GoldAlignment align_for_training(const PreparedDocument& doc, const ClusterAnnotation& gold, const RunConfig& config);

struct DocumentLoss {
  std::string doc_id;
  double nll = 0.0;
};

double document_nll(const PreparedDocument& doc, const ClusterAnnotation& gold, const RunConfig& config);

// NLL and its gradient with respect to the scorer parameters.
double document_nll_and_grad(const PreparedDocument& doc, const ClusterAnnotation& gold, const ScorerParams& params,
                             const RunConfig& config, ScorerParams& grads);

std::vector<DocumentLoss> compute_losses(const std::vector<DocumentRecord>& dataset, const ScorerParams* params,
                                         const RunConfig& config);

Prediction decode_document(const DocumentRecord& record, const ScorerParams* params, const RunConfig& config);
std::vector<Prediction> decode_dataset(const std::vector<DocumentRecord>& dataset, const ScorerParams* params,
                                       const RunConfig& config);

struct EvaluationResult {
  EvalReport corpus;
  std::vector<EvalReport> documents;
};

// Documents without a prediction are scored against an empty prediction.
EvaluationResult evaluate_predictions(const std::vector<DocumentRecord>& gold, const std::vector<Prediction>& predictions,
                                      const RunConfig& config);

// Dimensions come from the first document with features.
ScorerParams initial_params(const std::vector<DocumentRecord>& dataset, const RunConfig& config);

// Full-batch gradient descent. Calls on_epoch(epoch, mean_nll) with the loss
// measured before each update; returns the per-epoch curve.
std::vector<double> train(const std::vector<DocumentRecord>& dataset, ScorerParams& params, const RunConfig& config,
                          const std::function<void(std::size_t, double)>& on_epoch = {});

struct OracleCheck {
  std::string doc_id;
  enum class Status { Pass, Fail, Skipped } status = Status::Pass;
  std::size_t num_trees = 0;
  double partition_det = 0.0;  // det of the Laplacian minor, exp(log_partition)
  double log_partition = 0.0;
  double oracle_log_partition = 0.0;
  std::optional<double> gold_log_weight;
  std::optional<double> oracle_gold_log_weight;
  double edmonds_score = 0.0;
  double oracle_best_score = 0.0;
  std::string message;
};

std::vector<OracleCheck> oracle_check(const std::vector<DocumentRecord>& dataset, const ScorerParams* params,
                                      const RunConfig& config);
std::string serialize_oracle_check(const OracleCheck& check);
std::string serialize_losses(const std::vector<DocumentLoss>& losses, const RunConfig& config);

}  // namespace jointtree
