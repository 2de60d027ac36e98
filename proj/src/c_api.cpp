#include "jointtree/c_api.h"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <string_view>

#include "jointtree/errors.hpp"
#include "jointtree/pipeline.hpp"
#include "jointtree/synthetic.hpp"

struct jt_config {
  jointtree::RunConfig run;
};
struct jt_dataset {
  std::vector<jointtree::DocumentRecord> docs;
};
struct jt_params {
  jointtree::ScorerParams params;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_name;

jt_status status_for(jointtree::ErrorCode code) {
  using jointtree::ErrorCode;
  switch (code) {
    case ErrorCode::ParseError:
      return JT_ERR_PARSE;
    case ErrorCode::IoError:
      return JT_ERR_IO;
    case ErrorCode::InvalidArgument:
      return JT_ERR_INVALID_ARGUMENT;
    case ErrorCode::GraphDisconnected:
    case ErrorCode::ClusterUnreachable:
    case ErrorCode::MalformedTree:
      return JT_ERR_NUMERICAL;
    default:
      return JT_ERR_VALIDATION;
  }
}

jt_status fail(jt_status status, std::string message, std::string name = {}) {
  g_error = std::move(message);
  g_error_name = std::move(name);
  return status;
}

template <class Fn>
jt_status guarded(Fn&& fn) {
  g_error.clear();
  g_error_name.clear();
  try {
    return fn();
  } catch (const jointtree::Error& e) {
    return fail(status_for(e.code()), e.what(), std::string(jointtree::error_code_name(e.code())));
  } catch (const std::bad_alloc&) {
    return fail(JT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(JT_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw jointtree::Error(jointtree::ErrorCode::InvalidArgument,
                           "config '" + std::string(key) + "': not a number: '" + std::string(text) + "'");
  return value;
}

bool parse_flag(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw jointtree::Error(jointtree::ErrorCode::InvalidArgument, "config '" + std::string(key) + "' expects 0 or 1");
}

const jointtree::ScorerParams* unwrap(const jt_params* p) { return p == nullptr ? nullptr : &p->params; }

}  // namespace

extern "C" {

const char* jt_version(void) { return "1.0.0"; }
const char* jt_last_error(void) { return g_error.c_str(); }
const char* jt_last_error_name(void) { return g_error_name.c_str(); }
void jt_string_free(char* s) { std::free(s); }

jt_status jt_config_new(jt_config** out) {
  if (out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null output pointer");
  return guarded([&] {
    *out = new jt_config();
    return JT_OK;
  });
}

void jt_config_free(jt_config* config) { delete config; }

jt_status jt_config_set(jt_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    using jointtree::Error;
    using jointtree::ErrorCode;
    const std::string_view k(key), v(value);
    jointtree::RunConfig next = config->run;
    if (k == "model") {
      if (v == "local") next.model = jointtree::ModelKind::Local;
      else if (v == "global") next.model = jointtree::ModelKind::Global;
      else throw Error(ErrorCode::InvalidArgument, "model must be 'local' or 'global'");
    } else if (k == "uncoverable") {
      if (v == "error") next.uncoverable = jointtree::UncoverablePolicy::Error;
      else if (v == "demote-nil") next.uncoverable = jointtree::UncoverablePolicy::DemoteToNil;
      else throw Error(ErrorCode::InvalidArgument, "uncoverable must be 'error' or 'demote-nil'");
    } else if (k == "top_n") {
      next.top_n = parse_number<std::size_t>(k, v);
    } else if (k == "learning_rate") {
      next.learning_rate = parse_number<double>(k, v);
    } else if (k == "epochs") {
      next.epochs = parse_number<std::size_t>(k, v);
    } else if (k == "seed") {
      next.seed = parse_number<std::uint64_t>(k, v);
    } else if (k == "hidden") {
      next.hidden = parse_number<std::size_t>(k, v);
    } else if (k == "max_span_distance") {
      next.max_span_distance = parse_number<std::size_t>(k, v);
    } else if (k == "oracle_cap") {
      next.oracle_cap = parse_number<std::size_t>(k, v);
    } else if (k == "distance_buckets") {
      next.distance_buckets.clear();
      std::stringstream in{std::string(v)};
      for (std::string item; std::getline(in, item, ',');) next.distance_buckets.push_back(parse_number<int>(k, item));
    } else if (k == "macro") {
      next.macro_slices = parse_flag(k, v);
    } else if (k == "inject_fault") {
      next.inject_fault = parse_flag(k, v);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(k) + "'");
    }
    next.validate();
    config->run = std::move(next);
    return JT_OK;
  });
}

jt_status jt_dataset_parse(const char* text, size_t length, jt_dataset** out) {
  if (out == nullptr || (text == nullptr && length > 0)) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto ds = std::make_unique<jt_dataset>();
    ds->docs = jointtree::parse_dataset(std::string_view(text == nullptr ? "" : text, length));
    *out = ds.release();
    return JT_OK;
  });
}

jt_status jt_dataset_load_file(const char* path, jt_dataset** out) {
  if (path == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string text = jointtree::read_file(path);
    auto ds = std::make_unique<jt_dataset>();
    try {
      ds->docs = jointtree::parse_dataset(text);
    } catch (const jointtree::Error& e) {
      throw jointtree::Error(e.code(), std::string(path) + ": " + e.detail());
    }
    *out = ds.release();
    return JT_OK;
  });
}

size_t jt_dataset_size(const jt_dataset* dataset) { return dataset == nullptr ? 0 : dataset->docs.size(); }

const char* jt_dataset_doc_id(const jt_dataset* dataset, size_t index) {
  if (dataset == nullptr || index >= dataset->docs.size()) return nullptr;
  return dataset->docs[index].doc_id.c_str();
}

void jt_dataset_free(jt_dataset* dataset) { delete dataset; }

jt_status jt_params_new_random(const jt_dataset* dataset, const jt_config* config, jt_params** out) {
  if (dataset == nullptr || config == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new jt_params{jointtree::initial_params(dataset->docs, config->run)};
    return JT_OK;
  });
}

jt_status jt_params_parse(const char* text, size_t length, jt_params** out) {
  if (text == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new jt_params{jointtree::parse_params(std::string_view(text, length))};
    return JT_OK;
  });
}

jt_status jt_params_load_file(const char* path, jt_params** out) {
  if (path == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new jt_params{jointtree::parse_params(jointtree::read_file(path))};
    return JT_OK;
  });
}

jt_status jt_params_to_json(const jt_params* params, char** out) {
  if (params == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = dup_string(jointtree::serialize_params(params->params));
    return JT_OK;
  });
}

void jt_params_free(jt_params* params) { delete params; }

jt_status jt_loss(const jt_dataset* dataset, const jt_params* params, const jt_config* config, char** out) {
  if (dataset == nullptr || config == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto losses = jointtree::compute_losses(dataset->docs, unwrap(params), config->run);
    *out = dup_string(jointtree::serialize_losses(losses, config->run));
    return JT_OK;
  });
}

jt_status jt_decode(const jt_dataset* dataset, const jt_params* params, const jt_config* config, char** out) {
  if (dataset == nullptr || config == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::string text;
    for (const auto& p : jointtree::decode_dataset(dataset->docs, unwrap(params), config->run))
      text += jointtree::serialize_prediction(p) + "\n";
    *out = dup_string(text);
    return JT_OK;
  });
}

jt_status jt_eval(const jt_dataset* gold, const char* predictions, size_t length, const jt_config* config, int per_doc,
                  char** out) {
  if (gold == nullptr || config == nullptr || out == nullptr || (predictions == nullptr && length > 0))
    return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto preds = jointtree::parse_predictions(std::string_view(predictions == nullptr ? "" : predictions, length));
    const auto result = jointtree::evaluate_predictions(gold->docs, preds, config->run);
    std::string text;
    if (per_doc)
      for (const auto& r : result.documents) text += jointtree::serialize_report(r) + "\n";
    text += jointtree::serialize_report(result.corpus) + "\n";
    *out = dup_string(text);
    return JT_OK;
  });
}

jt_status jt_train(const jt_dataset* dataset, jt_params* params, const jt_config* config, jt_epoch_callback on_epoch,
                   void* user) {
  if (dataset == nullptr || params == nullptr || config == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    // Work on a copy so a failed run leaves the caller's parameters untouched.
    jointtree::ScorerParams working = params->params;
    jointtree::train(dataset->docs, working, config->run, [&](std::size_t epoch, double nll) {
      if (on_epoch != nullptr) on_epoch(epoch, nll, user);
    });
    params->params = std::move(working);
    return JT_OK;
  });
}

jt_status jt_oracle_check(const jt_dataset* dataset, const jt_params* params, const jt_config* config, char** out) {
  if (dataset == nullptr || config == nullptr || out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::string text;
    std::size_t failed = 0;
    for (const auto& c : jointtree::oracle_check(dataset->docs, unwrap(params), config->run)) {
      text += jointtree::serialize_oracle_check(c) + "\n";
      if (c.status == jointtree::OracleCheck::Status::Fail) ++failed;
    }
    *out = dup_string(text);
    if (failed > 0) return fail(JT_ERR_ORACLE, std::to_string(failed) + " document(s) failed the oracle check");
    return JT_OK;
  });
}

jt_status jt_synthetic_corpus(size_t num_documents, uint64_t seed, char** out) {
  if (out == nullptr) return fail(JT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    jointtree::SyntheticOptions options;
    options.num_documents = num_documents;
    options.seed = seed;
    std::string text;
    for (const auto& doc : jointtree::synthetic_corpus(options)) text += jointtree::serialize_document(doc) + "\n";
    *out = dup_string(text);
    return JT_OK;
  });
}

}  // extern "C"
