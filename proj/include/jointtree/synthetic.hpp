#pragma once

// Generated documents: a separable synthetic corpus for training runs and the
// small hand-built graphs used as fixtures.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "jointtree/document_io.hpp"

namespace jointtree {

struct SyntheticOptions {
  std::size_t num_documents = 50;
  std::size_t min_clusters = 2;
  std::size_t max_clusters = 4;
  std::size_t max_mentions = 3;     // per cluster
  std::size_t num_distractors = 2;  // entities nobody refers to
  double nil_probability = 0.35;
  // Linked clusters whose first mention lacks the entity in its candidate list.
  double late_link_probability = 0.3;
  double noise = 0.05;
  std::uint64_t seed = 7;
  std::string id_prefix = "syn";
};

// Span features: an 8-dim +-1 cluster code, then a linked flag and a NIL flag.
// Entity features: a single "prior" flag, 1 for gold entities.
std::vector<DocumentRecord> synthetic_corpus(const SyntheticOptions& options);

// The three-span, two-entity example graph with log edge weights and gold
// clusters {s1, s3: NIL}, {s2: e2}.
DocumentRecord worked_example_document();

// Two mentions of one entity, where only the second lists it as a candidate.
// Scores favor the gold structure r->e, e->s2, s2->s1.
DocumentRecord late_candidate_document();

}  // namespace jointtree
