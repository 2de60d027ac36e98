#pragma once

// Shared fixtures for the unit tests: the worked example graph, seeded random
// graphs and documents, and finite-difference helpers.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "jointtree/errors.hpp"
#include "jointtree/model_graph.hpp"
#include "jointtree/pipeline.hpp"
#include "jointtree/scorer.hpp"
#include "jointtree/synthetic.hpp"

namespace testing {

using namespace jointtree;

inline MentionSpan M(int i) { return {2 * i, 2 * i + 1}; }

inline Span make_span(int i, std::vector<std::string> candidates = {}, std::vector<double> features = {}) {
  return Span{M(i), std::move(features), std::move(candidates)};
}

inline DocumentGraph worked_example_graph() { return prepare_document(worked_example_document(), nullptr, {}).graph; }
inline ClusterAnnotation worked_example_gold() { return *worked_example_document().gold; }

// Node indices of the worked example: r, e1, e2, s1, s2, s3.
enum WorkedNode : std::size_t { R = 0, E1 = 1, E2 = 2, S1 = 3, S2 = 4, S3 = 5 };

struct RandomInstance {
  std::vector<Span> spans;
  std::vector<CandidateEntity> entities;
  DocumentGraph graph;
  ClusterAnnotation gold;
};

// Graph with `min_nodes`..`max_nodes` non-root nodes, scores U[-3, 3], each
// legal edge other than root->entity dropped with probability `drop`, and a
// random gold clustering whose links respect the candidate lists.
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t min_nodes, std::size_t max_nodes,
                                      double drop = 0.3) {
  std::uniform_int_distribution<std::size_t> total(min_nodes, max_nodes);
  std::uniform_real_distribution<double> score(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RandomInstance out;
  const std::size_t n = total(rng);
  const std::size_t num_entities = std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(2, n - 1))(rng);
  for (std::size_t e = 0; e < num_entities; ++e) out.entities.push_back({"E" + std::to_string(e), {}});
  for (std::size_t s = 0; s + num_entities < n; ++s) {
    Span span = make_span(static_cast<int>(s));
    for (const auto& e : out.entities)
      if (unit(rng) < 0.6) span.candidates.push_back(e.id);
    out.spans.push_back(std::move(span));
  }
  out.graph = build_graph(out.spans, out.entities);
  for (const auto& [p, c] : out.graph.edges()) {
    if (p == 0 && c <= num_entities) continue;
    if (unit(rng) < drop) out.graph.remove_edge(p, c);
    else out.graph.set_score(p, c, score(rng));
  }

  // Gold: spans into up to 3 clusters, each linked to a candidate of some member when possible.
  const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(3, out.spans.size()))(rng);
  std::vector<Cluster> clusters(k);
  for (std::size_t s = 0; s < out.spans.size(); ++s)
    clusters[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)].mentions.push_back(out.spans[s].bounds);
  std::vector<char> used(num_entities, 0);
  for (Cluster& c : clusters) {
    if (c.mentions.empty() || unit(rng) < 0.4) continue;
    for (const auto& m : c.mentions) {
      const auto& cands = out.spans[*out.graph.find_span(m)].candidates;
      auto it = std::find_if(cands.begin(), cands.end(), [&](const std::string& id) {
        return !used[*out.graph.find_entity(id)];
      });
      if (it == cands.end()) continue;
      used[*out.graph.find_entity(*it)] = 1;
      c.link = *it;
      break;
    }
  }
  for (Cluster& c : clusters)
    if (!c.mentions.empty()) out.gold.clusters.push_back(std::move(c));
  return out;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// A featured document with the same random structure as random_instance.
inline DocumentRecord random_featured_document(std::mt19937_64& rng, std::size_t min_nodes, std::size_t max_nodes,
                                               std::size_t span_dim, std::size_t entity_dim) {
  RandomInstance inst = random_instance(rng, min_nodes, max_nodes, 0.0);
  DocumentRecord doc;
  doc.doc_id = "random";
  doc.spans = inst.spans;
  doc.entities = inst.entities;
  for (Span& s : doc.spans) s.features = random_vector(rng, span_dim);
  for (CandidateEntity& e : doc.entities) e.features = random_vector(rng, entity_dim);
  doc.gold = inst.gold;
  return doc;
}

template <class F>
double central_difference(F&& f, double& x, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

// Relative agreement; values both below `floor` in magnitude count as equal.
inline bool close_rel(double a, double b, double rel, double floor = 1e-9) {
  const double diff = std::abs(a - b);
  return diff <= floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace testing
