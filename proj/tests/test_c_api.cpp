#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "jointtree/c_api.h"

namespace {

struct Free {
  void operator()(jt_config* c) const { jt_config_free(c); }
  void operator()(jt_dataset* d) const { jt_dataset_free(d); }
  void operator()(jt_params* p) const { jt_params_free(p); }
  void operator()(char* s) const { jt_string_free(s); }
};
template <class T>
using Owned = std::unique_ptr<T, Free>;

Owned<jt_dataset> load(const std::string& name) {
  jt_dataset* d = nullptr;
  REQUIRE(jt_dataset_load_file((std::string(JT_FIXTURES) + "/" + name).c_str(), &d) == JT_OK);
  return Owned<jt_dataset>(d);
}

Owned<jt_config> config() {
  jt_config* c = nullptr;
  REQUIRE(jt_config_new(&c) == JT_OK);
  return Owned<jt_config>(c);
}

std::string take(char* s) {
  Owned<char> owned(s);
  return s ? std::string(s) : std::string();
}

Owned<jt_dataset> synthetic(std::size_t n, std::uint64_t seed) {
  char* text = nullptr;
  REQUIRE(jt_synthetic_corpus(n, seed, &text) == JT_OK);
  const std::string corpus = take(text);
  jt_dataset* d = nullptr;
  REQUIRE(jt_dataset_parse(corpus.data(), corpus.size(), &d) == JT_OK);
  return Owned<jt_dataset>(d);
}

}  // namespace

TEST_CASE("version and datasets") {
  CHECK(std::string(jt_version()).size() > 0);
  auto d = load("worked_example.jsonl");
  CHECK(jt_dataset_size(d.get()) == 1);
  CHECK(std::string(jt_dataset_doc_id(d.get(), 0)) == "worked-example");
  CHECK(jt_dataset_doc_id(d.get(), 5) == nullptr);
}

TEST_CASE("loss and oracle check on the worked example") {
  auto d = load("worked_example.jsonl");
  auto c = config();
  char* out = nullptr;
  REQUIRE(jt_loss(d.get(), nullptr, c.get(), &out) == JT_OK);
  const std::string loss = take(out);
  CHECK(loss.find("\"mean_nll\":2.18727424648305") != std::string::npos);

  REQUIRE(jt_oracle_check(d.get(), nullptr, c.get(), &out) == JT_OK);
  const std::string report = take(out);
  CHECK(report.find("\"status\":\"pass\"") != std::string::npos);
  CHECK(report.find("\"num_trees\":46") != std::string::npos);

  REQUIRE(jt_config_set(c.get(), "inject_fault", "true") == JT_OK);
  CHECK(jt_oracle_check(d.get(), nullptr, c.get(), &out) == JT_ERR_ORACLE);
  CHECK(take(out).find("\"status\":\"fail\"") != std::string::npos);
}

TEST_CASE("decode then evaluate") {
  auto d = load("late_candidate.jsonl");
  auto c = config();
  char* out = nullptr;
  REQUIRE(jt_decode(d.get(), nullptr, c.get(), &out) == JT_OK);
  const std::string preds = take(out);
  CHECK(preds.find("\"link\":\"e\"") != std::string::npos);

  REQUIRE(jt_eval(d.get(), preds.data(), preds.size(), c.get(), 1, &out) == JT_OK);
  const std::string report = take(out);
  CHECK(report.find("\"doc_id\":\"late-candidate\"") != std::string::npos);
  CHECK(report.find("\"corner_case\":{\"accuracy\":1.0") != std::string::npos);

  REQUIRE(jt_config_set(c.get(), "model", "local") == JT_OK);
  REQUIRE(jt_decode(d.get(), nullptr, c.get(), &out) == JT_OK);
  const std::string local = take(out);
  REQUIRE(jt_eval(d.get(), local.data(), local.size(), c.get(), 0, &out) == JT_OK);
  CHECK(take(out).find("\"corner_case\":{\"accuracy\":0.0") != std::string::npos);
}

TEST_CASE("training through the C API") {
  auto d = synthetic(6, 3);
  auto c = config();
  REQUIRE(jt_config_set(c.get(), "epochs", "5") == JT_OK);
  REQUIRE(jt_config_set(c.get(), "learning_rate", "0.5") == JT_OK);
  jt_params* raw = nullptr;
  REQUIRE(jt_params_new_random(d.get(), c.get(), &raw) == JT_OK);
  Owned<jt_params> p(raw);

  std::vector<double> curve;
  auto cb = [](size_t, double nll, void* user) { static_cast<std::vector<double>*>(user)->push_back(nll); };
  REQUIRE(jt_train(d.get(), p.get(), c.get(), cb, &curve) == JT_OK);
  REQUIRE(curve.size() == 5);
  CHECK(curve.back() < curve.front());

  char* json = nullptr;
  REQUIRE(jt_params_to_json(p.get(), &json) == JT_OK);
  const std::string text = take(json);
  jt_params* again = nullptr;
  REQUIRE(jt_params_parse(text.data(), text.size(), &again) == JT_OK);
  Owned<jt_params> q(again);
  REQUIRE(jt_params_to_json(q.get(), &json) == JT_OK);
  CHECK(take(json) == text);

  char* out = nullptr;
  REQUIRE(jt_loss(d.get(), q.get(), c.get(), &out) == JT_OK);
  CHECK(take(out).find("\"mean_nll\"") != std::string::npos);
}

TEST_CASE("errors come back as status codes") {
  jt_dataset* d = nullptr;
  CHECK(jt_dataset_load_file("/nonexistent.jsonl", &d) == JT_ERR_IO);
  CHECK(std::string(jt_last_error_name()) == "IoError");
  CHECK(std::string(jt_last_error()).find("/nonexistent.jsonl") != std::string::npos);

  const std::string bad = "{\"doc_id\":1}";
  CHECK(jt_dataset_parse(bad.data(), bad.size(), &d) == JT_ERR_PARSE);
  CHECK(d == nullptr);
  CHECK(std::string(jt_last_error()).find("line 1") != std::string::npos);

  auto c = config();
  CHECK(jt_config_set(c.get(), "learning_rate", "-1") == JT_ERR_INVALID_ARGUMENT);
  CHECK(jt_config_set(c.get(), "learning_rate", "abc") == JT_ERR_INVALID_ARGUMENT);
  CHECK(jt_config_set(c.get(), "model", "tree") == JT_ERR_INVALID_ARGUMENT);
  CHECK(jt_config_set(c.get(), "no_such_key", "1") == JT_ERR_INVALID_ARGUMENT);
  CHECK(jt_config_set(nullptr, "model", "local") == JT_ERR_INVALID_ARGUMENT);
  CHECK(jt_loss(nullptr, nullptr, c.get(), nullptr) == JT_ERR_INVALID_ARGUMENT);

  // featured documents need parameters
  auto s = synthetic(1, 1);
  char* out = nullptr;
  CHECK(jt_loss(s.get(), nullptr, c.get(), &out) != JT_OK);

  // an unreachable gold cluster is a numerical failure
  const std::string unreachable =
      R"({"doc_id":"u","spans":[{"start":0,"end":1,"candidates":[]},{"start":1,"end":2}],"entities":[],)"
      R"("gold":{"clusters":[{"mentions":[[0,1],[1,2]]}]},"raw_scores":{"root|s:0":0,"root|s:1":0}})";
  REQUIRE(jt_dataset_parse(unreachable.data(), unreachable.size(), &d) == JT_OK);
  Owned<jt_dataset> u(d);
  CHECK(jt_loss(u.get(), nullptr, c.get(), &out) == JT_ERR_NUMERICAL);
  CHECK(std::string(jt_last_error_name()) == "ClusterUnreachable");
}
