// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "jointtree/arborescence_oracle.hpp"
#include "jointtree/decode.hpp"
#include "jointtree/local_loss.hpp"
#include "jointtree/metrics.hpp"
#include "jointtree/mtt_loss.hpp"
#include "support.hpp"

using namespace testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  Outcome() { detail.precision(10); }

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "[failed: " << what << "] ";
    ok = ok && cond;
  }
};

double det_of(const Eigen::MatrixXd& m) {
  const LogDet d = log_determinant(m);
  return d.sign * std::exp(d.log_abs);
}

// 1 ---------------------------------------------------------------------------
void worked_example_golden(Outcome& out) {
  const auto docs = parse_dataset(read_file(std::string(JT_FIXTURES) + "/worked_example.jsonl"));
  const DocumentGraph g = prepare_document(docs.at(0), nullptr, {}).graph;
  const DocumentGraph masked = mask_to_gold(g, *docs[0].gold);
  const std::size_t s1 = g.span_node(0), s2 = g.span_node(1), s3 = g.span_node(2), e2 = g.entity_node(1);
  const std::vector<std::size_t> c1{s1, s3}, c2{e2, s2};

  const double det = det_of(laplacian_minor(g, 0.0).matrix);
  const double d1 = det_of(cluster_laplacian(masked, c1, 0.0).matrix);
  const double d2 = det_of(cluster_laplacian(masked, c2, 0.0).matrix);
  const double nll = global_nll(g, *docs[0].gold);
  const double expected = -std::log(404.0 / 3600.0);
  out.require(std::abs(det - 3600.0) <= 1e-9 * 3600.0, "minor determinant");
  out.require(std::abs(d1 - 101.0) <= 1e-9 * 101.0, "cluster {s1,s3}");
  out.require(std::abs(d2 - 4.0) <= 1e-9 * 4.0, "cluster {e2,s2}");
  out.require(std::abs(std::exp(log_partition(g)) - 3600.0) <= 1e-9 * 3600.0, "log partition");
  out.require(std::abs(nll - expected) <= 1e-9, "NLL");
  out.detail << "det=" << det << " clusters=" << d1 << "," << d2 << " nll=" << nll << " expected=" << expected;
}

// 2 ---------------------------------------------------------------------------
void oracle_equivalence(Outcome& out) {
  std::mt19937_64 rng(20240601);
  int graphs = 0, golds = 0;
  double worst_z = 0.0, worst_gold = 0.0;
  while (graphs < 1000) {
    RandomInstance inst = random_instance(rng, 2, 6, 0.35);
    const GoldAlignment gold = align_gold(inst.graph, inst.gold, {UncoverablePolicy::DemoteToNil});
    const OracleSums o = oracle_sums(inst.graph, &gold);
    if (o.num_trees == 0) continue;
    ++graphs;
    const double z = std::exp(log_partition(inst.graph));
    worst_z = std::max(worst_z, std::abs(z - std::exp(o.log_partition)) / std::exp(o.log_partition));
    if (o.num_gold_trees == 0) {
      bool threw = false;
      try {
        global_nll_grad(inst.graph, gold);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::ClusterUnreachable;
      }
      out.require(threw, "unreachable gold must raise ClusterUnreachable");
      continue;
    }
    ++golds;
    const double w = std::exp(global_nll_grad(inst.graph, gold).gold_log_weight);
    worst_gold = std::max(worst_gold, std::abs(w - std::exp(o.gold_log_weight)) / std::exp(o.gold_log_weight));
  }
  out.require(worst_z <= 1e-9, "partition");
  out.require(worst_gold <= 1e-8, "gold numerator");
  out.detail << graphs << " graphs, " << golds << " gold numerators; max rel err " << worst_z << " / " << worst_gold;
}

// 3 ---------------------------------------------------------------------------
void gradient_checks(Outcome& out) {
  std::mt19937_64 rng(77);
  int checked = 0, bad = 0;
  double worst_abs = 0.0, worst_rel = 0.0;
  const auto compare = [&](double analytic, double numeric) {
    ++checked;
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    worst_abs = std::max(worst_abs, diff);
    if (scale > 1e-6) worst_rel = std::max(worst_rel, diff / scale);
    // components that are zero up to rounding compare absolutely
    if (!close_rel(analytic, numeric, 1e-5)) ++bad;
  };

  for (int t = 0; t < 100; ++t) {
    const DocumentRecord doc = random_featured_document(rng, 2, 6, 3, 2);
    ScorerConfig sc;
    sc.init_scale = 0.8;
    ScorerParams params = ScorerParams::random(3, 2, sc, 500 + static_cast<std::uint64_t>(t));

    for (ModelKind model : {ModelKind::Global, ModelKind::Local}) {
      RunConfig config;
      config.model = model;
      config.uncoverable = UncoverablePolicy::DemoteToNil;
      const PreparedDocument prep = prepare_document(doc, &params, config);
      const GoldAlignment gold = align_for_training(prep, *doc.gold, config);

      // edge level
      const auto edge_loss = [&](const DocumentGraph& g) {
        return model == ModelKind::Global ? global_nll(g, gold) : local_nll(local_scores(g), gold);
      };
      const Eigen::MatrixXd edge_grad =
          model == ModelKind::Global
              ? global_nll_grad(prep.graph, gold).edge_grad
              : local_grad_to_edges(prep.graph, local_scores(prep.graph),
                                    local_nll_grad(local_scores(prep.graph), gold).option_grad);
      for (const auto& [p, c] : prep.graph.edges()) {
        if (p == 0 && c <= prep.graph.num_entities()) continue;  // fixed at 0
        double x = prep.graph.score(p, c);
        const double fd = central_difference(
            [&] {
              DocumentGraph g = prep.graph;
              g.set_score(p, c, x);
              return edge_loss(g);
            },
            x);
        compare(edge_grad(p, c), fd);
      }

      // parameter level
      ScorerParams grads = params.zeros_like();
      document_nll_and_grad(prep, *doc.gold, params, config, grads);
      std::vector<const std::vector<double>*> g_arrays;
      grads.for_each_array([&](const std::string&, const std::vector<double>& v) { g_arrays.push_back(&v); });
      std::size_t a = 0;
      params.for_each_array([&](const std::string&, std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          const double fd = central_difference(
              [&] { return document_nll(prepare_document(doc, &params, config), *doc.gold, config); }, v[i]);
          compare((*g_arrays[a])[i], fd);
        }
        ++a;
      });
    }
  }
  out.require(bad == 0, std::to_string(bad) + " components outside 1e-5");
  out.detail << checked << " components over 100 instances (Global and Local, edge and parameter level); "
             << "max rel err " << worst_rel << " (components above 1e-6), max abs err " << worst_abs;
}

// 4 ---------------------------------------------------------------------------
void edmonds_correctness(Outcome& out) {
  std::mt19937_64 rng(4242);
  int graphs = 0;
  double worst = 0.0;
  while (graphs < 1000) {
    RandomInstance inst = random_instance(rng, 1, 6, 0.35);
    const OracleSums o = oracle_sums(inst.graph, nullptr);
    if (o.num_trees == 0) continue;
    ++graphs;
    worst = std::max(worst, std::abs(edmonds_max_arborescence(inst.graph).tree_score - o.best_score));
  }
  out.require(worst <= 1e-9, "tree score");

  const DocumentGraph masked = mask_to_gold(worked_example_graph(), worked_example_gold());
  const ClusterAnnotation c = edmonds_max_arborescence(masked).clusters;
  const bool shape = c.clusters.size() == 2 && c.clusters[0].mentions == std::vector<MentionSpan>{M(0), M(2)} &&
                     !c.clusters[0].link && c.clusters[1].mentions == std::vector<MentionSpan>{M(1)} &&
                     c.clusters[1].link == "e2";
  out.require(shape, "masked worked example clusters");
  out.detail << graphs << " graphs, max |score diff| " << worst << "; masked worked example -> "
             << (shape ? "{s1,s3:NIL} {s2:e2}" : "unexpected clusters");
}

// 5 ---------------------------------------------------------------------------
void corner_case(Outcome& out) {
  const auto docs = parse_dataset(read_file(std::string(JT_FIXTURES) + "/late_candidate.jsonl"));
  const DocumentRecord& doc = docs.at(0);
  const PreparedDocument prep = prepare_document(doc, nullptr, {});
  const auto accuracy = [&](const ClusterAnnotation& pred) {
    return corner_case_counts(*doc.gold, pred, prep.spans).rate();
  };
  const auto standalone = accuracy(standalone_decode(prep.graph));
  const auto global = accuracy(edmonds_max_arborescence(prep.graph).clusters);
  const auto local = accuracy(local_decode(local_scores(prep.graph), prep.graph));
  out.require(standalone == 0.0, "standalone");
  out.require(global == 1.0, "global");
  out.detail << "corner_case_accuracy standalone=" << standalone.value_or(-1) << " global=" << global.value_or(-1)
             << " (local=" << local.value_or(-1) << ")";
}

// 6 ---------------------------------------------------------------------------
void metric_identities(Outcome& out) {
  const MentionSpan a = M(0), b = M(1), c = M(2), d = M(3);
  const auto nil = [](std::vector<MentionSpan> ms) { return Cluster{std::move(ms), std::nullopt}; };
  const auto eq = [](double x, double y) { return std::abs(x - y) <= 1e-12; };
  int hand = 0;
  const auto check = [&](bool cond, const std::string& what) {
    out.require(cond, what);
    ++hand;
  };

  const Prf m = muc({{nil({a, b, c})}}, {{nil({a, b}), nil({c})}});
  check(eq(m.recall, 0.5) && eq(m.precision, 1.0), "MUC example");
  const Prf b3v = b3({{nil({a, b}), nil({c})}}, {{nil({a, b, c})}});
  check(eq(b3v.recall, 1.0) && eq(b3v.precision, 5.0 / 9.0), "B3 example");
  const Prf ce = ceafe({{nil({a, b}), nil({c, d})}}, {{nil({a, c}), nil({b, d})}});
  check(eq(ce.recall, 0.5) && eq(ce.precision, 0.5), "CEAF-e example");
  const ClusterAnnotation g3{{Cluster{{a, b}, "X"}, Cluster{{c}, "Y"}}};
  const Prf elm = el_mention_f1(g3, {{Cluster{{a}, "X"}, Cluster{{b}, "Z"}, Cluster{{c}, "Y"}}});
  check(eq(elm.precision, 2.0 / 3.0) && eq(elm.recall, 2.0 / 3.0), "EL_m example");
  const Prf elh = el_hard_f1(g3, {{Cluster{{a, b}, "X"}, Cluster{{c, d}, "Y"}}});
  check(eq(elh.precision, 0.5) && eq(elh.recall, 0.5), "EL_h example");

  const auto gold = parse_dataset(read_file(std::string(JT_FIXTURES) + "/eval_gold.jsonl"));
  const auto preds = parse_predictions(read_file(std::string(JT_FIXTURES) + "/eval_pred.jsonl"));
  const EvalReport r = evaluate_predictions(gold, preds, {}).corpus;
  check(eq(r.muc.recall, 0.25) && eq(r.muc.precision, 1.0 / 3.0), "fixture MUC");
  check(eq(r.b3.recall, 17.0 / 27.0) && eq(r.b3.precision, 7.0 / 9.0), "fixture B3");
  check(eq(r.ceafe.f1, 38.0 / 55.0), "fixture CEAF-e");
  check(eq(r.coref_avg_f1, (2.0 / 7.0 + 714.0 / 1026.0 + 38.0 / 55.0) / 3.0), "fixture average");

  // properties over random annotations
  std::mt19937_64 rng(6);
  int pairs = 0;
  for (int t = 0; t < 500; ++t) {
    std::vector<ClusterAnnotation> sides(2);
    for (auto& s : sides) {
      std::vector<Cluster> cs(3);
      for (int i = 0; i < 6; ++i) {
        const int k = std::uniform_int_distribution<int>(0, 3)(rng);
        if (k < 3) cs[static_cast<std::size_t>(k)].mentions.push_back(M(i));
      }
      for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs[k].mentions.empty()) continue;
        if (rng() % 2) cs[k].link = "E" + std::to_string(rng() % 3);
        s.clusters.push_back(cs[k]);
      }
    }
    const ClusterAnnotation& g = sides[0];
    const ClusterAnnotation& p = sides[1];
    ++pairs;
    for (auto fn : {&muc, &b3, &ceafe, &el_mention_f1, &el_hard_f1}) {
      const Prf x = fn(g, p), y = fn(p, g);
      out.require(eq(x.precision, y.recall) && eq(x.recall, y.precision), "role swap");
    }
    bool multi = false, linked = false;
    for (const Cluster& cl : g.clusters) {
      multi = multi || cl.mentions.size() > 1;
      linked = linked || cl.link.has_value();
    }
    if (!g.clusters.empty()) {
      out.require(eq(b3(g, g).f1, 1.0) && eq(ceafe(g, g).f1, 1.0), "perfection b3/ceafe");
      if (multi) out.require(eq(muc(g, g).f1, 1.0), "perfection muc");
      if (linked) out.require(eq(el_mention_f1(g, g).f1, 1.0) && eq(el_hard_f1(g, g).f1, 1.0), "perfection EL");
    }
  }
  out.detail << hand << " hand-computed values within 1e-12; perfection and role swap on " << pairs
             << " random pairs";
}

// 7 ---------------------------------------------------------------------------
constexpr double kFrozenNllBound = 0.02;

void synthetic_training(Outcome& out) {
  SyntheticOptions train_opts;
  train_opts.num_documents = 50;
  train_opts.seed = 7;
  const auto train_set = synthetic_corpus(train_opts);
  SyntheticOptions held_opts;
  held_opts.num_documents = 10;
  held_opts.seed = 99;
  held_opts.id_prefix = "held";
  const auto held_out = synthetic_corpus(held_opts);

  RunConfig config;
  config.learning_rate = 0.5;
  config.epochs = 200;
  ScorerParams params = initial_params(train_set, config);
  const auto start = Clock::now();
  const auto curve = train(train_set, params, config);
  double total = 0.0;
  for (const auto& d : train_set) total += document_nll(prepare_document(d, &params, config), *d.gold, config);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const double final_nll = total / static_cast<double>(train_set.size());

  const auto preds = decode_dataset(held_out, &params, config);
  const EvalReport r = evaluate_predictions(held_out, preds, config).corpus;

  out.require(curve.size() == 200, "epochs");
  out.require(final_nll < kFrozenNllBound, "mean NLL bound");
  out.require(seconds < 60.0, "time");
  out.require(r.el_h.f1 == 1.0, "held-out EL_h");
  out.detail << "mean NLL " << curve.front() << " -> " << final_nll << " (bound " << kFrozenNllBound << ") in "
             << seconds << " s; held-out EL_h F1 " << r.el_h.f1 << ", coref avg F1 " << r.coref_avg_f1;
}

// 8 ---------------------------------------------------------------------------
void scaling_identity(Outcome& out) {
  std::mt19937_64 rng(8);
  int pairs = 0, strict = 0;
  double worst = 0.0;
  bool same_edges = true;
  while (pairs < 100) {
    RandomInstance inst = random_instance(rng, 1, 7, 0.2);
    const OracleSums o = oracle_sums(inst.graph, nullptr);
    if (o.num_trees == 0) continue;
    ++pairs;
    const double c = std::uniform_real_distribution<double>(-25.0, 25.0)(rng);
    DocumentGraph shifted = inst.graph;
    for (const auto& [p, ch] : inst.graph.edges()) shifted.set_score(p, ch, inst.graph.score(p, ch) + c);
    const double n = static_cast<double>(inst.graph.num_nodes() - 1);
    worst = std::max(worst, std::abs(log_partition(shifted) - (log_partition(inst.graph) + c * n)));

    // strict max: the best tree beats the runner-up
    const auto trees = enumerate_arborescences(inst.graph);
    std::vector<double> scores;
    for (const auto& t : trees) scores.push_back(t.score);
    std::sort(scores.rbegin(), scores.rend());
    if (scores.size() > 1 && scores[0] - scores[1] < 1e-9) continue;
    ++strict;
    same_edges = same_edges && edmonds_max_arborescence(inst.graph).parent == edmonds_max_arborescence(shifted).parent;
  }
  out.require(worst <= 1e-8, "log partition shift");
  out.require(same_edges, "decoded edges");
  out.detail << pairs << " pairs, max abs err " << worst << "; tree edges unchanged on " << strict
             << " strict-max instances";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"worked example golden values", worked_example_golden},
      {"oracle equivalence", oracle_equivalence},
      {"gradient checks", gradient_checks},
      {"Edmonds correctness", edmonds_correctness},
      {"corner-case behavior", corner_case},
      {"metric identities", metric_identities},
      {"synthetic training", synthetic_training},
      {"scaling identity", scaling_identity},
  };
  const double limits[] = {1e9, 10.0, 30.0, 1e9, 1e9, 1e9, 60.0, 1e9};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    const auto start = Clock::now();
    try {
      criteria[i].second(out);
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail << "threw: " << e.what();
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds > limits[i]) {
      out.ok = false;
      out.detail << " [over time limit " << limits[i] << " s]";
    }
    all = all && out.ok;
    std::printf("%s %zu %s: %s (%.3f s)\n", out.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.str().c_str(), seconds);
  }
  return all ? 0 : 1;
}
