#include <doctest.h>

#include "jointtree/local_loss.hpp"
#include "support.hpp"

using namespace testing;

namespace {

using Kind = LocalOption::Kind;

DocumentGraph spans_only(std::size_t n) {
  std::vector<Span> spans;
  for (std::size_t i = 0; i < n; ++i) spans.push_back(make_span(static_cast<int>(i)));
  return build_graph(spans, {});
}

}  // namespace

TEST_CASE("option lists: dummy, antecedents, then candidates") {
  const std::vector<CandidateEntity> ents{{"A", {}}, {"B", {}}};
  const std::vector<Span> spans{make_span(0, {"B"}), make_span(1), make_span(2, {"B", "A"})};
  const DocumentGraph g = build_graph(spans, ents);
  const auto sets = local_scores(g);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].options.size() == 2);
  CHECK(sets[0].options[1].kind == Kind::Entity);
  CHECK(sets[0].options[1].index == 1);
  CHECK(sets[1].options.size() == 2);
  CHECK(sets[1].options[1].kind == Kind::Antecedent);
  const auto& last = sets[2].options;
  REQUIRE(last.size() == 5);
  CHECK(last[0].kind == Kind::Dummy);
  CHECK(last[0].score == 0.0);
  CHECK(last[1].index == 0);
  CHECK(last[2].index == 1);
  CHECK(last[3].kind == Kind::Entity);
  CHECK(last[3].index == 1);
  CHECK(last[4].index == 0);
}

TEST_CASE("graph and parameter option scores agree") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const DocumentRecord doc = random_featured_document(rng, 2, 7, 4, 3);
    ScorerConfig c;
    c.init_scale = 0.8;
    const ScorerParams p = ScorerParams::random(4, 3, c, 40 + t);
    const auto direct = local_scores(doc.spans, doc.entities, p);
    const auto via_graph = local_scores(fill_scores(build_graph(doc.spans, doc.entities), p, doc.spans, doc.entities));
    REQUIRE(direct.size() == via_graph.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
      REQUIRE(direct[i].options.size() == via_graph[i].options.size());
      for (std::size_t k = 0; k < direct[i].options.size(); ++k)
        CHECK(direct[i].options[k].score == doctest::Approx(via_graph[i].options[k].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("unknown candidate is rejected") {
  const std::vector<Span> spans{make_span(0, {"Z"}, {0.0})};
  CHECK_THROWS_AS(local_scores(spans, {}, ScorerParams::zeros(1, 1)), Error);
}

TEST_CASE("single NIL span has zero loss") {
  const DocumentGraph g = spans_only(1);
  ClusterAnnotation gold{{Cluster{{M(0)}, std::nullopt}}};
  const auto sets = local_scores(g);
  const LocalNllResult r = local_nll_grad(sets, align_gold(g, gold));
  CHECK(r.nll == 0.0);
  CHECK(r.option_grad[0] == std::vector<double>{0.0});
}

TEST_CASE("two coreferent spans with equal scores cost log 2") {
  const DocumentGraph g = spans_only(2);
  ClusterAnnotation gold{{Cluster{{M(0), M(1)}, std::nullopt}}};
  const GoldAlignment a = align_gold(g, gold);
  const auto sets = local_scores(g);
  CHECK(local_nll(sets, a) == doctest::Approx(std::log(2.0)));
  const auto r = local_nll_grad(sets, a);
  CHECK(r.option_grad[1][0] == doctest::Approx(0.5));
  CHECK(r.option_grad[1][1] == doctest::Approx(-0.5));

  // Separate clusters: ε is the only correct choice for the second span.
  ClusterAnnotation apart{{Cluster{{M(0)}, std::nullopt}, Cluster{{M(1)}, std::nullopt}}};
  CHECK(local_nll(sets, align_gold(g, apart)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gold options on the late candidate document") {
  const DocumentRecord doc = late_candidate_document();
  const PreparedDocument prep = prepare_document(doc, nullptr, {});
  const auto sets = local_scores(prep.graph);
  const auto correct = local_gold_options(sets, align_gold(prep.graph, *doc.gold));
  // first mention cannot see the entity, so only ε is right for it
  CHECK(correct[0] == std::vector<char>{1});
  // second: antecedent and entity are both right, ε is not
  CHECK(correct[1] == std::vector<char>{0, 1, 1});
}

TEST_CASE("option gradients sum to zero and match central differences") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    RandomInstance inst = random_instance(rng, 1, 7, 0.2);
    const GoldAlignment gold = align_gold(inst.graph, inst.gold, {UncoverablePolicy::DemoteToNil});
    auto sets = local_scores(inst.graph);
    const LocalNllResult r = local_nll_grad(sets, gold);
    CHECK(r.nll >= 0.0);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      double sum = 0.0;
      for (double x : r.option_grad[i]) sum += x;
      CHECK(std::abs(sum) < 1e-12);
      for (std::size_t k = 0; k < sets[i].options.size(); ++k) {
        const double fd = central_difference([&] { return local_nll(sets, gold); }, sets[i].options[k].score);
        CHECK(close_rel(r.option_grad[i][k], fd, 1e-6));
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("edge gradients match differences on graph scores") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 60; ++t) {
    RandomInstance inst = random_instance(rng, 2, 6, 0.2);
    const GoldAlignment gold = align_gold(inst.graph, inst.gold, {UncoverablePolicy::DemoteToNil});
    const auto sets = local_scores(inst.graph);
    const Eigen::MatrixXd grad = local_grad_to_edges(inst.graph, sets, local_nll_grad(sets, gold).option_grad);
    for (const auto& [p, c] : inst.graph.edges()) {
      if (!std::isfinite(inst.graph.score(p, c))) continue;
      double x = inst.graph.score(p, c);
      const double fd = central_difference(
          [&] {
            DocumentGraph g = inst.graph;
            g.set_score(p, c, x);
            return local_nll(local_scores(g), gold);
          },
          x);
      CHECK(close_rel(grad(p, c), fd, 1e-6));
      if (p == 0) CHECK(grad(p, c) == 0.0);  // root edges play no part
    }
  }
}

TEST_CASE("only-dummy spans contribute no gradient") {
  const DocumentGraph g = spans_only(3);
  ClusterAnnotation gold{{Cluster{{M(0)}, std::nullopt}, Cluster{{M(1), M(2)}, std::nullopt}}};
  const auto r = local_nll_grad(local_scores(g), align_gold(g, gold));
  CHECK(r.option_grad[0] == std::vector<double>{0.0});
}

TEST_CASE("gradient shape is checked") {
  const DocumentGraph g = spans_only(2);
  const auto sets = local_scores(g);
  CHECK_THROWS_AS(local_grad_to_edges(g, sets, {{0.0}}), Error);
  CHECK_THROWS_AS(local_grad_to_edges(g, sets, {{0.0}, {0.0}}), Error);
}
