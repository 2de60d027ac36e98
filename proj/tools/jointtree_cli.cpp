// jointtree: command-line driver over the C API.
//
//   jointtree loss DATASET [--model global|local] [--params FILE]
//   jointtree decode DATASET [-o FILE]
//   jointtree eval GOLD PREDICTIONS [--per-doc] [--macro]
//   jointtree train DATASET -o PARAMS [--epochs N] [--lr X] [--seed S]
//   jointtree oracle-check DATASET [--oracle-cap N]
//   jointtree synth -n DOCS [--seed S] [-o FILE]
//
// Exit codes: 0 ok, 2 bad input, 3 numerical or structural failure, 4 oracle mismatch.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jointtree/c_api.h"

namespace {

int exit_code(jt_status s) {
  switch (s) {
    case JT_OK:
      return 0;
    case JT_ERR_INVALID_ARGUMENT:
    case JT_ERR_PARSE:
    case JT_ERR_VALIDATION:
    case JT_ERR_IO:
      return 2;
    case JT_ERR_NUMERICAL:
      return 3;
    case JT_ERR_ORACLE:
      return 4;
    default:
      return 1;
  }
}

struct Failure {
  jt_status status;
};

void check(jt_status s) {
  if (s != JT_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<jt_config, Deleter<jt_config, jt_config_free>>;
using Dataset = std::unique_ptr<jt_dataset, Deleter<jt_dataset, jt_dataset_free>>;
using Params = std::unique_ptr<jt_params, Deleter<jt_params, jt_params_free>>;
using Text = std::unique_ptr<char, Deleter<char, jt_string_free>>;

struct Options {
  std::string model = "global";
  std::size_t top_n = 0;
  std::uint64_t seed = 13;
  std::size_t epochs = 10;
  double lr = 0.1;
  std::string uncoverable = "error";
  bool per_doc = false;
  std::size_t oracle_cap = 8;
  std::size_t hidden = 0;
  std::size_t max_span_distance = 0;
  bool macro = false;
  bool inject_fault = false;
  std::string params;
  std::string output;
  std::string dataset;
  std::string predictions;
  std::size_t synth_docs = 50;
};

Config make_config(const Options& o) {
  jt_config* raw = nullptr;
  check(jt_config_new(&raw));
  Config c(raw);
  auto set = [&](const char* key, const std::string& value) { check(jt_config_set(c.get(), key, value.c_str())); };
  set("model", o.model);
  set("top_n", std::to_string(o.top_n));
  set("seed", std::to_string(o.seed));
  set("epochs", std::to_string(o.epochs));
  char lr[64];
  std::snprintf(lr, sizeof lr, "%.17g", o.lr);
  set("learning_rate", lr);
  set("uncoverable", o.uncoverable);
  set("oracle_cap", std::to_string(o.oracle_cap));
  set("hidden", std::to_string(o.hidden));
  set("max_span_distance", std::to_string(o.max_span_distance));
  set("macro", o.macro ? "1" : "0");
  set("inject_fault", o.inject_fault ? "1" : "0");
  return c;
}

Dataset load_dataset(const std::string& path) {
  jt_dataset* raw = nullptr;
  check(jt_dataset_load_file(path.c_str(), &raw));
  return Dataset(raw);
}

Params load_params(const std::string& path) {
  if (path.empty()) return nullptr;
  jt_params* raw = nullptr;
  check(jt_params_load_file(path.c_str(), &raw));
  return Params(raw);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    throw Failure{JT_ERR_IO};
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw Failure{JT_ERR_IO};
  }
}

void with_newline(std::string& s) {
  if (!s.empty() && s.back() != '\n') s += '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint coreference and entity linking over spanning trees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(jt_version()));
  Options o;

  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "local or global")->check(CLI::IsMember({"local", "global"}));
    sub->add_option("--params", o.params, "scorer parameters (JSON)");
    sub->add_option("--top-n", o.top_n, "keep the N best spans (0 keeps all)");
    sub->add_option("--max-span-distance", o.max_span_distance, "cap on span-to-span edge distance (0 = none)");
    sub->add_option("--uncoverable", o.uncoverable, "gold link missing from every candidate list")
        ->check(CLI::IsMember({"error", "demote-nil"}));
  };

  auto* loss = app.add_subcommand("loss", "per-document negative log-likelihood");
  loss->add_option("dataset", o.dataset)->required();
  model_opts(loss);

  auto* decode = app.add_subcommand("decode", "predict clusters and links");
  decode->add_option("dataset", o.dataset)->required();
  decode->add_option("-o,--output", o.output, "predictions file (default stdout)");
  model_opts(decode);

  auto* eval = app.add_subcommand("eval", "score predictions against gold");
  eval->add_option("gold", o.dataset)->required();
  eval->add_option("predictions", o.predictions)->required();
  eval->add_flag("--per-doc", o.per_doc, "one report line per document");
  eval->add_flag("--macro", o.macro, "average slice accuracies over documents");

  auto* train = app.add_subcommand("train", "gradient descent on the training loss");
  train->add_option("dataset", o.dataset)->required();
  train->add_option("-o,--output", o.output, "where to write the trained parameters")->required();
  train->add_option("--epochs", o.epochs);
  train->add_option("--lr", o.lr);
  train->add_option("--seed", o.seed);
  train->add_option("--hidden", o.hidden, "tanh hidden units (0 = linear scorers)");
  model_opts(train);

  auto* oracle = app.add_subcommand("oracle-check", "compare against brute-force tree enumeration");
  oracle->add_option("dataset", o.dataset)->required();
  oracle->add_option("--oracle-cap", o.oracle_cap, "largest graph to enumerate, in non-root nodes");
  oracle->add_flag("--inject-fault", o.inject_fault)->group("");
  model_opts(oracle);

  auto* synth = app.add_subcommand("synth", "write a synthetic separable corpus");
  synth->add_option("-n,--docs", o.synth_docs);
  synth->add_option("--seed", o.seed);
  synth->add_option("-o,--output", o.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config config = make_config(o);
    char* raw = nullptr;

    if (*loss) {
      Dataset ds = load_dataset(o.dataset);
      Params params = load_params(o.params);
      check(jt_loss(ds.get(), params.get(), config.get(), &raw));
      std::string text = Text(raw).get();
      with_newline(text);
      emit("", text.c_str());
    } else if (*decode) {
      Dataset ds = load_dataset(o.dataset);
      Params params = load_params(o.params);
      check(jt_decode(ds.get(), params.get(), config.get(), &raw));
      emit(o.output, Text(raw).get());
    } else if (*eval) {
      Dataset ds = load_dataset(o.dataset);
      const std::string preds = slurp(o.predictions);
      check(jt_eval(ds.get(), preds.data(), preds.size(), config.get(), o.per_doc ? 1 : 0, &raw));
      emit("", Text(raw).get());
    } else if (*train) {
      Dataset ds = load_dataset(o.dataset);
      Params params = load_params(o.params);
      if (!params) {
        jt_params* fresh = nullptr;
        check(jt_params_new_random(ds.get(), config.get(), &fresh));
        params.reset(fresh);
      }
      auto on_epoch = [](std::size_t epoch, double nll, void*) {
        std::printf("{\"epoch\":%zu,\"mean_nll\":%.17g}\n", epoch, nll);
        std::fflush(stdout);
      };
      check(jt_train(ds.get(), params.get(), config.get(), on_epoch, nullptr));
      check(jt_params_to_json(params.get(), &raw));
      std::string text = Text(raw).get();
      with_newline(text);
      emit(o.output, text.c_str());
    } else if (*oracle) {
      Dataset ds = load_dataset(o.dataset);
      Params params = load_params(o.params);
      const jt_status s = jt_oracle_check(ds.get(), params.get(), config.get(), &raw);
      if (raw != nullptr) emit("", Text(raw).get());
      check(s);
    } else if (*synth) {
      check(jt_synthetic_corpus(o.synth_docs, o.seed, &raw));
      emit(o.output, Text(raw).get());
    }
  } catch (const Failure& f) {
    if (*jt_last_error() != '\0') std::cerr << "error: " << jt_last_error() << "\n";
    return exit_code(f.status);
  }
  return 0;
}
