#include "jointtree/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <random>

#include "jointtree/errors.hpp"

namespace jointtree {

namespace {

constexpr std::size_t kCodeDim = 8;

// Row k of the 8x8 Sylvester-Hadamard matrix.
double hadamard(std::size_t k, std::size_t j) { return std::popcount(k & j) % 2 == 0 ? 1.0 : -1.0; }

DocumentRecord raw_document(std::string id, std::size_t num_spans, std::vector<std::string> entities,
                            const std::vector<std::vector<std::string>>& candidates,
                            std::map<std::string, double> exp_weights, ClusterAnnotation gold) {
  DocumentRecord doc;
  doc.doc_id = std::move(id);
  for (std::size_t i = 0; i < num_spans; ++i) {
    Span s;
    s.bounds = {static_cast<int>(2 * i), static_cast<int>(2 * i + 1)};
    s.candidates = candidates[i];
    doc.spans.push_back(std::move(s));
  }
  for (auto& e : entities) doc.entities.push_back({std::move(e), {}});
  std::map<std::string, double> logs;
  for (const auto& [key, w] : exp_weights) logs[key] = std::log(w);
  doc.raw_scores = std::move(logs);
  doc.gold = std::move(gold);
  return doc;
}

}  // namespace

std::vector<DocumentRecord> synthetic_corpus(const SyntheticOptions& o) {
  if (o.min_clusters == 0 || o.min_clusters > o.max_clusters || o.max_clusters > kCodeDim || o.max_mentions == 0)
    throw Error(ErrorCode::InvalidArgument, "synthetic corpus options out of range");

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-o.noise, o.noise);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

  std::vector<DocumentRecord> out;
  for (std::size_t d = 0; d < o.num_documents; ++d) {
    DocumentRecord doc;
    doc.doc_id = o.id_prefix + "-" + std::to_string(d);
    doc.gold.emplace();

    const std::size_t k = pick(o.min_clusters, o.max_clusters);
    std::vector<std::size_t> codes(kCodeDim);
    for (std::size_t i = 0; i < kCodeDim; ++i) codes[i] = i;
    std::shuffle(codes.begin(), codes.end(), rng);

    struct Mention {
      std::size_t cluster;
      std::size_t order;  // position within the cluster
    };
    std::vector<Mention> mentions;
    std::vector<std::optional<std::string>> links(k);
    std::vector<bool> late(k, false);
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t m = pick(1, o.max_mentions);
      for (std::size_t j = 0; j < m; ++j) mentions.push_back({c, j});
      if (unit(rng) >= o.nil_probability) {
        links[c] = "E" + std::to_string(d) + "_" + std::to_string(c);
        late[c] = m > 1 && unit(rng) < o.late_link_probability;
      }
    }
    // Interleave clusters, keeping each cluster's mentions in order.
    std::shuffle(mentions.begin(), mentions.end(), rng);
    std::vector<std::size_t> seen(k, 0);
    for (auto& m : mentions) m.order = seen[m.cluster]++;

    std::vector<std::string> distractors;
    for (std::size_t i = 0; i < o.num_distractors; ++i)
      distractors.push_back("D" + std::to_string(d) + "_" + std::to_string(i));

    for (std::size_t c = 0; c < k; ++c) {
      if (!links[c]) continue;
      doc.entities.push_back({*links[c], {1.0 + jitter(rng)}});
    }
    for (const auto& id : distractors) doc.entities.push_back({id, {jitter(rng)}});
    std::sort(doc.entities.begin(), doc.entities.end(),
              [](const CandidateEntity& a, const CandidateEntity& b) { return a.id < b.id; });

    doc.gold->clusters.resize(k);
    for (std::size_t c = 0; c < k; ++c) doc.gold->clusters[c].link = links[c];

    int position = 0;
    for (const Mention& m : mentions) {
      Span s;
      const int width = static_cast<int>(pick(1, 3));
      s.bounds = {position, position + width};
      position += width + static_cast<int>(pick(0, 2));
      for (std::size_t j = 0; j < kCodeDim; ++j) s.features.push_back(hadamard(codes[m.cluster], j) + jitter(rng));
      const bool linked = links[m.cluster].has_value();
      s.features.push_back((linked ? 1.0 : 0.0) + jitter(rng));
      s.features.push_back((linked ? 0.0 : 1.0) + jitter(rng));

      if (linked && !(late[m.cluster] && m.order == 0)) s.candidates.push_back(*links[m.cluster]);
      s.candidates.push_back(distractors[pick(0, distractors.size() - 1)]);
      std::sort(s.candidates.begin(), s.candidates.end());
      if (distractors.empty()) s.candidates.erase(s.candidates.end() - 1);

      doc.gold->clusters[m.cluster].mentions.push_back(s.bounds);
      doc.spans.push_back(std::move(s));
    }
    out.push_back(std::move(doc));
  }
  return out;
}

DocumentRecord worked_example_document() {
  ClusterAnnotation gold;
  gold.clusters.push_back({{{0, 1}, {4, 5}}, std::nullopt});
  gold.clusters.push_back({{{2, 3}}, std::string("e2")});
  return raw_document("worked-example", 3, {"e1", "e2"}, {{}, {"e1", "e2"}, {"e2"}},
                      {{"root|e:e1", 1},
                       {"root|e:e2", 1},
                       {"root|s:0", 5},
                       {"root|s:1", 3},
                       {"root|s:2", 7},
                       {"e:e1|s:1", 1},
                       {"e:e2|s:1", 4},
                       {"e:e2|s:2", 2},
                       {"s:0|s:1", 5},
                       {"s:0|s:2", 9},
                       {"s:1|s:0", 3},
                       {"s:1|s:2", 2},
                       {"s:2|s:0", 8},
                       {"s:2|s:1", 4}},
                      std::move(gold));
}

DocumentRecord late_candidate_document() {
  ClusterAnnotation gold;
  gold.clusters.push_back({{{0, 1}, {2, 3}}, std::string("e")});
  return raw_document("late-candidate", 2, {"e"}, {{}, {"e"}},
                      {{"root|e:e", 1},
                       {"root|s:0", 2},
                       {"root|s:1", 1},
                       {"e:e|s:1", 6},
                       {"s:0|s:1", 3},
                       {"s:1|s:0", 5}},
                      std::move(gold));
}

}  // namespace jointtree
