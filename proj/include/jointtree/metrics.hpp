#pragma once

// Coreference (MUC, B³, CEAF_e) and entity-linking (EL_m, EL_h) scores under
// strong mention matching, plus link-accuracy slices over cluster size and over
// mentions whose own candidate list lacks the gold entity.
//
// Conventions: 0/0 is 0 for precision, recall and F1. Mentions present on one
// side only contribute zero overlap. Corpus scores sum per-document counts.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "jointtree/model_graph.hpp"

namespace jointtree {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfCounts {
  double p_num = 0.0;
  double p_den = 0.0;
  double r_num = 0.0;
  double r_den = 0.0;

  Prf rates() const;
  PrfCounts& operator+=(const PrfCounts& other);
};

PrfCounts muc_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
PrfCounts b3_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
PrfCounts ceafe_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
PrfCounts el_mention_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
PrfCounts el_hard_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred);

Prf muc(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
Prf b3(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
Prf ceafe(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
Prf el_mention_f1(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
Prf el_hard_f1(const ClusterAnnotation& gold, const ClusterAnnotation& pred);
double coref_avg_f1(const ClusterAnnotation& gold, const ClusterAnnotation& pred);

struct AccuracyCounts {
  std::size_t correct = 0;
  std::size_t total = 0;

  std::optional<double> rate() const;  // nullopt when total == 0
  AccuracyCounts& operator+=(const AccuracyCounts& other);
};

// Gold non-NIL mentions whose own candidate list lacks the gold entity while
// another member of the cluster lists it; correct when the predicted link of
// the mention equals the gold entity. `spans` supplies candidate lists.
AccuracyCounts corner_case_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred,
                                  const std::vector<Span>& spans);

// Gold linked clusters split by size (1 vs. >= 2); a cluster is correct when
// every gold mention is predicted with the gold link.
struct ClusterSizeCounts {
  AccuracyCounts singleton;
  AccuracyCounts multi;
};
ClusterSizeCounts cluster_size_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred);

struct EvalInput {
  std::string doc_id;
  const ClusterAnnotation* gold = nullptr;
  const ClusterAnnotation* pred = nullptr;
  const std::vector<Span>* spans = nullptr;  // candidate lists for the corner-case slice
};

struct EvalReport {
  std::string doc_id;  // empty for a corpus aggregate
  std::size_t num_documents = 0;
  PrfCounts muc_counts, b3_counts, ceafe_counts, el_m_counts, el_h_counts;
  Prf muc, b3, ceafe, el_m, el_h;
  double coref_avg_f1 = 0.0;
  AccuracyCounts singleton, multi, corner_case;
  std::optional<double> singleton_acc, multi_acc, corner_case_acc;
};

struct EvalOptions {
  // Average slice accuracies over documents instead of pooling counts.
  bool macro_slices = false;
};

EvalReport evaluate_document(const EvalInput& input);
EvalReport evaluate_corpus(const std::vector<EvalInput>& inputs, const EvalOptions& options = {});

}  // namespace jointtree
