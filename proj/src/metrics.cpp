#include "jointtree/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "jointtree/assignment.hpp"

namespace jointtree {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

using MentionSet = std::set<MentionSpan>;

std::vector<MentionSet> mention_sets(const ClusterAnnotation& a) {
  validate_clustering(a);
  std::vector<MentionSet> out;
  for (const Cluster& c : a.clusters)
    if (!c.mentions.empty()) out.emplace_back(c.mentions.begin(), c.mentions.end());
  return out;
}

std::map<MentionSpan, std::size_t> cluster_of(const std::vector<MentionSet>& clusters) {
  std::map<MentionSpan, std::size_t> out;
  for (std::size_t k = 0; k < clusters.size(); ++k)
    for (const MentionSpan& m : clusters[k]) out[m] = k;
  return out;
}

std::size_t overlap(const MentionSet& a, const MentionSet& b) {
  std::size_t n = 0;
  for (const MentionSpan& m : a) n += b.count(m);
  return n;
}

// Sum over key clusters of (|k| - number of parts of k induced by the response).
std::pair<double, double> muc_side(const std::vector<MentionSet>& key, const std::vector<MentionSet>& response) {
  const auto index = cluster_of(response);
  double num = 0.0, den = 0.0;
  for (const MentionSet& k : key) {
    std::set<std::size_t> parts;
    std::size_t unmatched = 0;
    for (const MentionSpan& m : k) {
      auto it = index.find(m);
      if (it == index.end())
        ++unmatched;
      else
        parts.insert(it->second);
    }
    num += static_cast<double>(k.size()) - static_cast<double>(parts.size() + unmatched);
    den += static_cast<double>(k.size()) - 1.0;
  }
  return {num, den};
}

std::pair<double, double> b3_side(const std::vector<MentionSet>& key, const std::vector<MentionSet>& response) {
  double num = 0.0, den = 0.0;
  for (const MentionSet& k : key) {
    for (const MentionSet& r : response) {
      const double o = static_cast<double>(overlap(k, r));
      num += o * o / static_cast<double>(k.size());
    }
    den += static_cast<double>(k.size());
  }
  return {num, den};
}

// (mention, entity) pairs of linked clusters.
std::set<std::pair<MentionSpan, std::string>> mention_links(const ClusterAnnotation& a) {
  validate_clustering(a);
  std::set<std::pair<MentionSpan, std::string>> out;
  for (const Cluster& c : a.clusters)
    if (c.link)
      for (const MentionSpan& m : c.mentions) out.emplace(m, *c.link);
  return out;
}

std::map<MentionSpan, std::optional<std::string>> predicted_link_of(const ClusterAnnotation& pred) {
  std::map<MentionSpan, std::optional<std::string>> out;
  for (const Cluster& c : pred.clusters)
    for (const MentionSpan& m : c.mentions) out[m] = c.link;
  return out;
}

}  // namespace

Prf PrfCounts::rates() const {
  Prf r;
  r.precision = ratio(p_num, p_den);
  r.recall = ratio(r_num, r_den);
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

PrfCounts& PrfCounts::operator+=(const PrfCounts& o) {
  p_num += o.p_num;
  p_den += o.p_den;
  r_num += o.r_num;
  r_den += o.r_den;
  return *this;
}

std::optional<double> AccuracyCounts::rate() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

AccuracyCounts& AccuracyCounts::operator+=(const AccuracyCounts& o) {
  correct += o.correct;
  total += o.total;
  return *this;
}

PrfCounts muc_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  const auto g = mention_sets(gold);
  const auto p = mention_sets(pred);
  PrfCounts c;
  std::tie(c.r_num, c.r_den) = muc_side(g, p);
  std::tie(c.p_num, c.p_den) = muc_side(p, g);
  return c;
}

PrfCounts b3_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  const auto g = mention_sets(gold);
  const auto p = mention_sets(pred);
  PrfCounts c;
  std::tie(c.r_num, c.r_den) = b3_side(g, p);
  std::tie(c.p_num, c.p_den) = b3_side(p, g);
  return c;
}

PrfCounts ceafe_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  const auto g = mention_sets(gold);
  const auto p = mention_sets(pred);
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          2.0 * static_cast<double>(overlap(g[i], p[j])) / static_cast<double>(g[i].size() + p[j].size());
  const double total = max_weight_assignment(sim).total;
  return {total, static_cast<double>(p.size()), total, static_cast<double>(g.size())};
}

PrfCounts el_mention_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  const auto g = mention_links(gold);
  const auto p = mention_links(pred);
  double tp = 0.0;
  for (const auto& x : p) tp += g.count(x);
  return {tp, static_cast<double>(p.size()), tp, static_cast<double>(g.size())};
}

PrfCounts el_hard_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  validate_clustering(gold);
  validate_clustering(pred);
  using Key = std::pair<MentionSet, std::string>;
  const auto linked = [](const ClusterAnnotation& a) {
    std::vector<Key> out;
    for (const Cluster& c : a.clusters)
      if (c.link && !c.mentions.empty()) out.emplace_back(MentionSet(c.mentions.begin(), c.mentions.end()), *c.link);
    return out;
  };
  const auto g = linked(gold);
  const auto p = linked(pred);
  const std::set<Key> gold_keys(g.begin(), g.end());
  double tp = 0.0;
  for (const Key& k : p) tp += gold_keys.count(k);
  return {tp, static_cast<double>(p.size()), tp, static_cast<double>(g.size())};
}

Prf muc(const ClusterAnnotation& gold, const ClusterAnnotation& pred) { return muc_counts(gold, pred).rates(); }
Prf b3(const ClusterAnnotation& gold, const ClusterAnnotation& pred) { return b3_counts(gold, pred).rates(); }
Prf ceafe(const ClusterAnnotation& gold, const ClusterAnnotation& pred) { return ceafe_counts(gold, pred).rates(); }
Prf el_mention_f1(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  return el_mention_counts(gold, pred).rates();
}
Prf el_hard_f1(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  return el_hard_counts(gold, pred).rates();
}

double coref_avg_f1(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  return (muc(gold, pred).f1 + b3(gold, pred).f1 + ceafe(gold, pred).f1) / 3.0;
}

AccuracyCounts corner_case_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred,
                                  const std::vector<Span>& spans) {
  validate_clustering(gold);
  validate_clustering(pred);
  std::map<MentionSpan, const std::vector<std::string>*> candidates;
  for (const Span& s : spans) candidates[s.bounds] = &s.candidates;
  const auto lists = [&](const MentionSpan& m, const std::string& entity) {
    auto it = candidates.find(m);
    return it != candidates.end() &&
           std::find(it->second->begin(), it->second->end(), entity) != it->second->end();
  };
  const auto predicted = predicted_link_of(pred);

  AccuracyCounts out;
  for (const Cluster& c : gold.clusters) {
    if (!c.link) continue;
    const bool coverable =
        std::any_of(c.mentions.begin(), c.mentions.end(), [&](const MentionSpan& m) { return lists(m, *c.link); });
    if (!coverable) continue;
    for (const MentionSpan& m : c.mentions) {
      if (lists(m, *c.link)) continue;
      ++out.total;
      auto it = predicted.find(m);
      if (it != predicted.end() && it->second == c.link) ++out.correct;
    }
  }
  return out;
}

ClusterSizeCounts cluster_size_counts(const ClusterAnnotation& gold, const ClusterAnnotation& pred) {
  validate_clustering(gold);
  validate_clustering(pred);
  const auto predicted = predicted_link_of(pred);
  ClusterSizeCounts out;
  for (const Cluster& c : gold.clusters) {
    if (!c.link || c.mentions.empty()) continue;
    const bool correct = std::all_of(c.mentions.begin(), c.mentions.end(), [&](const MentionSpan& m) {
      auto it = predicted.find(m);
      return it != predicted.end() && it->second == c.link;
    });
    AccuracyCounts& bucket = c.mentions.size() == 1 ? out.singleton : out.multi;
    ++bucket.total;
    bucket.correct += correct;
  }
  return out;
}

namespace {

void finalize(EvalReport& r) {
  r.muc = r.muc_counts.rates();
  r.b3 = r.b3_counts.rates();
  r.ceafe = r.ceafe_counts.rates();
  r.el_m = r.el_m_counts.rates();
  r.el_h = r.el_h_counts.rates();
  r.coref_avg_f1 = (r.muc.f1 + r.b3.f1 + r.ceafe.f1) / 3.0;
}

}  // namespace

EvalReport evaluate_document(const EvalInput& input) {
  static const std::vector<Span> kNoSpans;
  const ClusterAnnotation& gold = *input.gold;
  const ClusterAnnotation& pred = *input.pred;
  EvalReport r;
  r.doc_id = input.doc_id;
  r.num_documents = 1;
  r.muc_counts = muc_counts(gold, pred);
  r.b3_counts = b3_counts(gold, pred);
  r.ceafe_counts = ceafe_counts(gold, pred);
  r.el_m_counts = el_mention_counts(gold, pred);
  r.el_h_counts = el_hard_counts(gold, pred);
  const ClusterSizeCounts sizes = cluster_size_counts(gold, pred);
  r.singleton = sizes.singleton;
  r.multi = sizes.multi;
  r.corner_case = corner_case_counts(gold, pred, input.spans ? *input.spans : kNoSpans);
  r.singleton_acc = r.singleton.rate();
  r.multi_acc = r.multi.rate();
  r.corner_case_acc = r.corner_case.rate();
  finalize(r);
  return r;
}

EvalReport evaluate_corpus(const std::vector<EvalInput>& inputs, const EvalOptions& options) {
  EvalReport total;
  std::vector<double> singleton_rates, multi_rates, corner_rates;
  for (const EvalInput& input : inputs) {
    const EvalReport d = evaluate_document(input);
    ++total.num_documents;
    total.muc_counts += d.muc_counts;
    total.b3_counts += d.b3_counts;
    total.ceafe_counts += d.ceafe_counts;
    total.el_m_counts += d.el_m_counts;
    total.el_h_counts += d.el_h_counts;
    total.singleton += d.singleton;
    total.multi += d.multi;
    total.corner_case += d.corner_case;
    if (d.singleton_acc) singleton_rates.push_back(*d.singleton_acc);
    if (d.multi_acc) multi_rates.push_back(*d.multi_acc);
    if (d.corner_case_acc) corner_rates.push_back(*d.corner_case_acc);
  }
  finalize(total);
  if (options.macro_slices) {
    const auto mean = [](const std::vector<double>& xs) -> std::optional<double> {
      if (xs.empty()) return std::nullopt;
      double s = 0.0;
      for (double x : xs) s += x;
      return s / static_cast<double>(xs.size());
    };
    total.singleton_acc = mean(singleton_rates);
    total.multi_acc = mean(multi_rates);
    total.corner_case_acc = mean(corner_rates);
  } else {
    total.singleton_acc = total.singleton.rate();
    total.multi_acc = total.multi.rate();
    total.corner_case_acc = total.corner_case.rate();
  }
  return total;
}

}  // namespace jointtree
