#include "jointtree/document_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jointtree/errors.hpp"

namespace jointtree {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing required field '") + key + "'");
  return *it;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < 0 || v > 1'000'000'000) fail(path, "integer out of range");
  return static_cast<int>(v);
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, what + " is not valid JSON: " + e.what());
  }
}

ClusterAnnotation clusters_from_json(const json& j, const std::string& path) {
  ClusterAnnotation out;
  const json& clusters = as_array(require(j, "clusters", path), path + ".clusters");
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const std::string cpath = path + ".clusters[" + std::to_string(k) + "]";
    if (!clusters[k].is_object()) fail(cpath, "expected an object");
    Cluster c;
    const json& mentions = as_array(require(clusters[k], "mentions", cpath), cpath + ".mentions");
    for (std::size_t m = 0; m < mentions.size(); ++m) {
      const std::string mpath = cpath + ".mentions[" + std::to_string(m) + "]";
      if (!mentions[m].is_array() || mentions[m].size() != 2) fail(mpath, "expected [start, end]");
      MentionSpan span{as_int(mentions[m][0], mpath + "[0]"), as_int(mentions[m][1], mpath + "[1]")};
      if (span.start >= span.end) fail(mpath, "start must be less than end");
      c.mentions.push_back(span);
    }
    if (auto it = clusters[k].find("link"); it != clusters[k].end() && !it->is_null())
      c.link = as_string(*it, cpath + ".link");
    out.clusters.push_back(std::move(c));
  }
  try {
    validate_clustering(out);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return out;
}

json clusters_to_json(const ClusterAnnotation& a) {
  json clusters = json::array();
  for (const Cluster& c : a.clusters) {
    json mentions = json::array();
    for (const MentionSpan& m : c.mentions) mentions.push_back({m.start, m.end});
    clusters.push_back({{"mentions", mentions}, {"link", c.link ? json(*c.link) : json(nullptr)}});
  }
  return json{{"clusters", clusters}};
}

}  // namespace

bool DocumentRecord::has_features() const {
  if (spans.empty()) return false;
  for (const Span& s : spans)
    if (s.features.empty()) return false;
  for (const CandidateEntity& e : entities)
    if (e.features.empty()) return false;
  return true;
}

std::size_t DocumentRecord::span_dim() const { return spans.empty() ? 0 : spans.front().features.size(); }

std::size_t DocumentRecord::entity_dim() const { return entities.empty() ? 0 : entities.front().features.size(); }

std::string edge_key(const std::string& parent_label, const std::string& child_label) {
  return parent_label + "|" + child_label;
}

DocumentRecord parse_document(std::string_view text) {
  const json j = parse_json(text, "document");
  if (!j.is_object()) fail("$", "expected an object");
  DocumentRecord doc;
  doc.doc_id = as_string(require(j, "doc_id", "$"), "$.doc_id");

  std::set<std::string> entity_ids;
  std::size_t span_dim = 0, entity_dim = 0;
  bool any_features = false, missing_features = false;

  if (auto it = j.find("entities"); it != j.end()) {
    const json& entities = as_array(*it, "$.entities");
    for (std::size_t e = 0; e < entities.size(); ++e) {
      const std::string path = "$.entities[" + std::to_string(e) + "]";
      if (!entities[e].is_object()) fail(path, "expected an object");
      CandidateEntity ent;
      ent.id = as_string(require(entities[e], "id", path), path + ".id");
      if (!entity_ids.insert(ent.id).second)
        throw Error(ErrorCode::DuplicateEntity, path + ".id: entity '" + ent.id + "' appears twice");
      if (auto f = entities[e].find("features"); f != entities[e].end()) {
        ent.features = as_numbers(*f, path + ".features");
        if (entity_dim != 0 && ent.features.size() != entity_dim)
          fail(path + ".features", "entity feature dimension differs from earlier entities");
        entity_dim = ent.features.size();
      }
      (ent.features.empty() ? missing_features : any_features) = true;
      doc.entities.push_back(std::move(ent));
    }
  }

  const json& spans = as_array(require(j, "spans", "$"), "$.spans");
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const std::string path = "$.spans[" + std::to_string(s) + "]";
    if (!spans[s].is_object()) fail(path, "expected an object");
    Span span;
    span.bounds = {as_int(require(spans[s], "start", path), path + ".start"),
                   as_int(require(spans[s], "end", path), path + ".end")};
    if (span.bounds.start >= span.bounds.end) fail(path, "start must be less than end");
    if (s > 0) {
      const MentionSpan prev = doc.spans.back().bounds;
      if (prev == span.bounds)
        throw Error(ErrorCode::DuplicateSpan, path + ": span [" + std::to_string(span.bounds.start) + "," +
                                                  std::to_string(span.bounds.end) + ") repeats the previous span");
      if (span.bounds < prev) fail(path, "spans must be sorted by (start, end)");
    }
    if (auto f = spans[s].find("features"); f != spans[s].end()) {
      span.features = as_numbers(*f, path + ".features");
      if (span_dim != 0 && span.features.size() != span_dim)
        fail(path + ".features", "span feature dimension differs from earlier spans");
      span_dim = span.features.size();
    }
    (span.features.empty() ? missing_features : any_features) = true;
    if (auto c = spans[s].find("candidates"); c != spans[s].end()) {
      const json& cands = as_array(*c, path + ".candidates");
      for (std::size_t k = 0; k < cands.size(); ++k) {
        const std::string cpath = path + ".candidates[" + std::to_string(k) + "]";
        std::string id = as_string(cands[k], cpath);
        if (!entity_ids.count(id)) fail(cpath, "candidate '" + id + "' is not a listed entity");
        span.candidates.push_back(std::move(id));
      }
    }
    doc.spans.push_back(std::move(span));
  }
  if (any_features && missing_features) fail("$", "features must be given for every span and entity or for none");

  if (auto it = j.find("gold"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) fail("$.gold", "expected an object");
    doc.gold = clusters_from_json(*it, "$.gold");
  }

  if (auto it = j.find("raw_scores"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) fail("$.raw_scores", "expected an object");
    if (any_features) fail("$.raw_scores", "raw_scores and features are mutually exclusive");
    const DocumentGraph graph = build_graph(doc.spans, doc.entities);
    std::map<std::string, double> raw;
    for (const auto& [key, value] : it->items()) {
      const std::string path = "$.raw_scores[\"" + key + "\"]";
      const auto bar = key.find('|');
      if (bar == std::string::npos) fail(path, "key must be '<parent>|<child>'");
      const auto parent = graph.node_by_label(key.substr(0, bar));
      const auto child = graph.node_by_label(key.substr(bar + 1));
      if (!parent || !child) fail(path, "unknown node label");
      if (!graph.is_legal(*parent, *child)) fail(path, "edge is not legal in this document");
      const double v = as_number(value, path);
      if (*parent == 0 && graph.node(*child).kind == NodeRef::Kind::Entity && v != 0.0)
        fail(path, "root->entity scores are fixed at 0");
      raw[key] = v;
    }
    doc.raw_scores = std::move(raw);
  } else if (!doc.spans.empty() && !any_features) {
    fail("$", "document needs either features or raw_scores");
  }
  return doc;
}

std::string serialize_document(const DocumentRecord& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  json spans = json::array();
  for (const Span& s : doc.spans) {
    json js{{"start", s.bounds.start}, {"end", s.bounds.end}, {"candidates", s.candidates}};
    if (!s.features.empty()) js["features"] = s.features;
    spans.push_back(std::move(js));
  }
  j["spans"] = std::move(spans);
  json entities = json::array();
  for (const CandidateEntity& e : doc.entities) {
    json je{{"id", e.id}};
    if (!e.features.empty()) je["features"] = e.features;
    entities.push_back(std::move(je));
  }
  j["entities"] = std::move(entities);
  if (doc.gold) j["gold"] = clusters_to_json(*doc.gold);
  if (doc.raw_scores) {
    json raw = json::object();
    for (const auto& [k, v] : *doc.raw_scores) raw[k] = v;
    j["raw_scores"] = std::move(raw);
  }
  return j.dump();
}

std::vector<DocumentRecord> parse_dataset(std::string_view text) {
  std::vector<DocumentRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(parse_document(line));
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ClusterAnnotation parse_clusters(std::string_view clusters_json) {
  const json j = parse_json(clusters_json, "clusters");
  if (!j.is_object()) fail("$", "expected an object");
  return clusters_from_json(j, "$");
}

std::string serialize_prediction(const Prediction& p) {
  json j = clusters_to_json(p.clusters);
  j["doc_id"] = p.doc_id;
  if (p.tree_score) j["tree_score"] = *p.tree_score;
  return j.dump();
}

std::vector<Prediction> parse_predictions(std::string_view text) {
  std::vector<Prediction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(line_no);
    const json j = parse_json(line, where);
    if (!j.is_object()) fail(where, "expected an object");
    Prediction p;
    p.doc_id = as_string(require(j, "doc_id", where), where + ".doc_id");
    p.clusters = clusters_from_json(j, where);
    if (auto it = j.find("tree_score"); it != j.end()) p.tree_score = as_number(*it, where + ".tree_score");
    out.push_back(std::move(p));
  }
  return out;
}

std::string serialize_params(const ScorerParams& params) {
  json j = json::object();
  params.for_each_array([&](const std::string& name, const std::vector<double>& values) { j[name] = values; });
  j["distance_buckets"] = params.distance_buckets;
  return j.dump();
}

ScorerParams parse_params(std::string_view text) {
  const json j = parse_json(text, "params");
  if (!j.is_object()) fail("$", "expected an object");
  const auto array = [&](const char* key) { return as_numbers(require(j, key, "$"), std::string("$.") + key); };

  ScorerConfig config;
  config.distance_buckets.clear();
  for (double b : array("distance_buckets")) {
    if (b != std::floor(b)) fail("$.distance_buckets", "boundaries must be integers");
    config.distance_buckets.push_back(static_cast<int>(b));
  }
  const bool hidden = j.contains("prune.W1");
  config.hidden = hidden ? array("prune.b1").size() : 0;
  const std::size_t span_dim = array("root_features").size();
  const std::size_t link_inputs = hidden ? (config.hidden == 0 ? 0 : array("link.W1").size() / config.hidden)
                                         : array("link.w").size();
  if (link_inputs < span_dim) fail("$", "link weights are smaller than the span feature dimension");

  ScorerParams params;
  try {
    params = ScorerParams::zeros(span_dim, link_inputs - span_dim, config);
  } catch (const Error& e) {
    fail("$", e.what());
  }
  params.for_each_array([&](const std::string& name, std::vector<double>& values) {
    std::vector<double> loaded = as_numbers(require(j, name.c_str(), "$"), "$." + name);
    if (loaded.size() != values.size())
      fail("$." + name, "expected " + std::to_string(values.size()) + " values, got " + std::to_string(loaded.size()));
    values = std::move(loaded);
  });
  return params;
}

std::string serialize_report(const EvalReport& r) {
  const auto prf = [](const Prf& p, const PrfCounts& c) {
    return json{{"precision", p.precision},
                {"recall", p.recall},
                {"f1", p.f1},
                {"counts", {{"p_num", c.p_num}, {"p_den", c.p_den}, {"r_num", c.r_num}, {"r_den", c.r_den}}}};
  };
  const auto acc = [](const std::optional<double>& rate, const AccuracyCounts& c) {
    return json{{"accuracy", rate ? json(*rate) : json(nullptr)}, {"correct", c.correct}, {"total", c.total}};
  };
  json j;
  if (!r.doc_id.empty()) j["doc_id"] = r.doc_id;
  j["num_documents"] = r.num_documents;
  j["muc"] = prf(r.muc, r.muc_counts);
  j["b3"] = prf(r.b3, r.b3_counts);
  j["ceafe"] = prf(r.ceafe, r.ceafe_counts);
  j["coref_avg_f1"] = r.coref_avg_f1;
  j["el_m"] = prf(r.el_m, r.el_m_counts);
  j["el_h"] = prf(r.el_h, r.el_h_counts);
  j["singleton"] = acc(r.singleton_acc, r.singleton);
  j["multi"] = acc(r.multi_acc, r.multi);
  j["corner_case"] = acc(r.corner_case_acc, r.corner_case);
  return j.dump();
}

}  // namespace jointtree
