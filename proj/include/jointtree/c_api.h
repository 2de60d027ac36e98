/* C interface to the jointtree library. Every handle is opaque; functions
 * return a jt_status and, on failure, leave a message readable through
 * jt_last_error() on the calling thread. Strings handed out by the library
 * are released with jt_string_free. */
#ifndef JOINTTREE_C_API_H
#define JOINTTREE_C_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(JT_BUILDING_LIBRARY)
#    define JT_API __declspec(dllexport)
#  else
#    define JT_API __declspec(dllimport)
#  endif
#else
#  define JT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jt_status {
  JT_OK = 0,
  JT_ERR_INVALID_ARGUMENT = 1,
  JT_ERR_PARSE = 2,
  JT_ERR_VALIDATION = 3,
  JT_ERR_NUMERICAL = 4, /* disconnected graph, unreachable cluster, singular matrix */
  JT_ERR_ORACLE = 5,    /* an oracle comparison failed */
  JT_ERR_IO = 6,
  JT_ERR_INTERNAL = 7
} jt_status;

typedef struct jt_config jt_config;
typedef struct jt_dataset jt_dataset;
typedef struct jt_params jt_params;

JT_API const char* jt_version(void);
JT_API const char* jt_last_error(void);
/* Library error name, e.g. "UncoverableGold"; empty when the last call succeeded. */
JT_API const char* jt_last_error_name(void);
JT_API void jt_string_free(char* s);

/* Keys: model (local|global), top_n, learning_rate, epochs, seed,
 * uncoverable (error|demote-nil), hidden, max_span_distance, oracle_cap,
 * distance_buckets (comma separated), macro (0|1), inject_fault (0|1). */
JT_API jt_status jt_config_new(jt_config** out);
JT_API jt_status jt_config_set(jt_config* config, const char* key, const char* value);
JT_API void jt_config_free(jt_config* config);

JT_API jt_status jt_dataset_load_file(const char* path, jt_dataset** out);
JT_API jt_status jt_dataset_parse(const char* text, size_t length, jt_dataset** out);
JT_API size_t jt_dataset_size(const jt_dataset* dataset);
/* Borrowed pointer, valid while the dataset lives. NULL when out of range. */
JT_API const char* jt_dataset_doc_id(const jt_dataset* dataset, size_t index);
JT_API void jt_dataset_free(jt_dataset* dataset);

/* Dimensions come from the first document carrying features. */
JT_API jt_status jt_params_new_random(const jt_dataset* dataset, const jt_config* config, jt_params** out);
JT_API jt_status jt_params_load_file(const char* path, jt_params** out);
JT_API jt_status jt_params_parse(const char* text, size_t length, jt_params** out);
JT_API jt_status jt_params_to_json(const jt_params* params, char** out);
JT_API void jt_params_free(jt_params* params);

/* params may be NULL when every document carries raw_scores. */

/* {"model": ..., "mean_nll": ..., "documents": {doc_id: nll}} */
JT_API jt_status jt_loss(const jt_dataset* dataset, const jt_params* params, const jt_config* config, char** out);

/* One prediction per line, in dataset order. */
JT_API jt_status jt_decode(const jt_dataset* dataset, const jt_params* params, const jt_config* config, char** out);

/* Scores a predictions file against the gold dataset. With per_doc set, one
 * report line per document precedes the corpus report. */
JT_API jt_status jt_eval(const jt_dataset* gold, const char* predictions, size_t length, const jt_config* config,
                         int per_doc, char** out);

typedef void (*jt_epoch_callback)(size_t epoch, double mean_nll, void* user);

/* Gradient descent on params in place; the callback sees the loss before each update. */
JT_API jt_status jt_train(const jt_dataset* dataset, jt_params* params, const jt_config* config,
                          jt_epoch_callback on_epoch, void* user);

/* One result line per document. Returns JT_ERR_ORACLE when any document failed;
 * the report is still written in that case. */
JT_API jt_status jt_oracle_check(const jt_dataset* dataset, const jt_params* params, const jt_config* config,
                                 char** out);

/* Synthetic separable corpus as JSON Lines. */
JT_API jt_status jt_synthetic_corpus(size_t num_documents, uint64_t seed, char** out);

#ifdef __cplusplus
}
#endif

#endif
