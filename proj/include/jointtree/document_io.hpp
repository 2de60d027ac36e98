#pragma once

// Interchange formats. Datasets are JSON Lines, one document per line:
//
//   {"doc_id": str,
//    "spans": [{"start": int, "end": int, "features": [f]?, "candidates": [str]}],
//    "entities": [{"id": str, "features": [f]?}],
//    "gold": {"clusters": [{"mentions": [[start, end]], "link": str|null}]}?,
//    "raw_scores": {"<parent>|<child>": f}?}
//
// Node labels are "root", "e:<entity id>" and "s:<span index>". raw_scores hold
// log-domain edge scores; legal edges missing from the table are absent.
// Predictions files carry {"doc_id": str, "clusters": [...]} per line.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jointtree/metrics.hpp"
#include "jointtree/model_graph.hpp"
#include "jointtree/scorer.hpp"

namespace jointtree {

struct DocumentRecord {
  std::string doc_id;
  std::vector<Span> spans;
  std::vector<CandidateEntity> entities;
  std::optional<ClusterAnnotation> gold;
  std::optional<std::map<std::string, double>> raw_scores;

  bool has_features() const;
  std::size_t span_dim() const;
  std::size_t entity_dim() const;
};

// Throws ParseError (message carries the JSON path), DuplicateSpan, InvalidCandidate
// or DuplicateEntity.
DocumentRecord parse_document(std::string_view text);
std::string serialize_document(const DocumentRecord& record);

// Blank lines are skipped; errors are prefixed with the 1-based line number.
std::vector<DocumentRecord> parse_dataset(std::string_view text);
std::string read_file(const std::string& path);

ClusterAnnotation parse_clusters(std::string_view clusters_json);

struct Prediction {
  std::string doc_id;
  ClusterAnnotation clusters;
  std::optional<double> tree_score;
};

std::string serialize_prediction(const Prediction& prediction);
std::vector<Prediction> parse_predictions(std::string_view text);

// Flat object of named float arrays, plus "distance_buckets".
std::string serialize_params(const ScorerParams& params);
ScorerParams parse_params(std::string_view text);

std::string serialize_report(const EvalReport& report);

// "label|label" key for an edge, and its inverse.
std::string edge_key(const std::string& parent_label, const std::string& child_label);

}  // namespace jointtree
