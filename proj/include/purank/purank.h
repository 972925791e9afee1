/*
 * purank C API.
 *
 * Every fallible call returns a purank_status; on failure a message is
 * available from purank_last_error() on the calling thread until the next
 * API call on that thread. Objects are opaque handles released with the
 * matching *_free function. Strings returned through char** out-parameters
 * are owned by the caller and released with purank_string_free().
 */
#ifndef PURANK_H
#define PURANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(PURANK_BUILDING_LIBRARY)
#define PURANK_API __attribute__((visibility("default")))
#else
#define PURANK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum purank_status {
  PURANK_OK = 0,
  PURANK_ERR_INVALID_ARGUMENT = 1,
  PURANK_ERR_IO = 2,
  PURANK_ERR_PARSE = 3,
  PURANK_ERR_VALIDATION = 4,
  PURANK_ERR_DIMENSION = 5,
  PURANK_ERR_NUMERIC = 6,
  PURANK_ERR_INTERNAL = 99
} purank_status;

typedef enum purank_split {
  PURANK_SPLIT_TRAIN = 0,
  PURANK_SPLIT_VALID = 1,
  PURANK_SPLIT_TEST = 2
} purank_split;

typedef struct purank_corpus purank_corpus;
typedef struct purank_embeddings purank_embeddings;
typedef struct purank_model purank_model;

PURANK_API const char* purank_version(void);
PURANK_API const char* purank_last_error(void);
PURANK_API const char* purank_status_string(purank_status status);
/* 0 = trace ... 4 = error, 6 = off. */
PURANK_API void purank_set_log_level(int level);
PURANK_API void purank_string_free(char* s);

/* --- corpora ------------------------------------------------------------ */

PURANK_API purank_status purank_corpus_load(const char* path,
                                            const char* categories_path,
                                            purank_split split,
                                            purank_corpus** out);
PURANK_API void purank_corpus_free(purank_corpus* corpus);
PURANK_API size_t purank_corpus_size(const purank_corpus* corpus);
PURANK_API size_t purank_corpus_category_count(const purank_corpus* corpus);
PURANK_API purank_status purank_corpus_write(const purank_corpus* corpus,
                                             const char* path);

/* Stratified split; out receives three new corpora (train, valid, test). */
PURANK_API purank_status purank_corpus_split(const purank_corpus* corpus,
                                             const double ratios[3],
                                             uint64_t seed,
                                             purank_corpus* out[3]);

/* votes_path may be NULL; n_raters is used only with votes. */
PURANK_API purank_status purank_corpus_stats(const purank_corpus* corpus,
                                             const char* votes_path,
                                             int n_raters, char** json_out,
                                             char** text_out);

PURANK_API purank_status purank_fleiss_kappa(const char* votes_path,
                                             int n_raters, double* out);

/* Tab-separated (id, text, category name, optional '|' gold names) to the
 * canonical JSON-lines format. */
PURANK_API purank_status purank_convert_tsv(const char* tsv_path,
                                            const char* categories_path,
                                            purank_split split,
                                            const char* out_path);

/* Writes categories.json, train.jsonl, train_gold.jsonl, valid.jsonl,
 * test.jsonl and embeddings.txt into out_dir. seed may be NULL. */
PURANK_API purank_status purank_generate(const char* config_json,
                                         const uint64_t* seed,
                                         const char* out_dir);

/* --- embeddings --------------------------------------------------------- */

PURANK_API purank_status purank_embeddings_load(const char* path,
                                                int oov_is_error,
                                                purank_embeddings** out);
PURANK_API void purank_embeddings_free(purank_embeddings* table);
PURANK_API size_t purank_embeddings_dim(const purank_embeddings* table);
PURANK_API size_t purank_embeddings_count(const purank_embeddings* table);
PURANK_API purank_status purank_encode(const purank_embeddings* table,
                                       const char* const* tokens,
                                       size_t n_tokens, double* out,
                                       size_t out_len);

/* --- models ------------------------------------------------------------- */

/* valid may be NULL; seed may be NULL (the config seed is used). */
PURANK_API purank_status purank_train(const purank_corpus* train,
                                      const purank_corpus* valid,
                                      const purank_embeddings* table,
                                      const char* config_json,
                                      const uint64_t* seed,
                                      purank_model** out);
PURANK_API void purank_model_free(purank_model* model);
PURANK_API purank_status purank_model_save(const purank_model* model,
                                           const char* path);
PURANK_API purank_status purank_model_load(const char* path,
                                           purank_model** out);
PURANK_API size_t purank_model_category_count(const purank_model* model);
PURANK_API purank_status purank_model_log_jsonl(const purank_model* model,
                                                char** out);

/* table may be NULL when the model carries its own trained table. order_out
 * receives category ids best first; scores_out is indexed by category id.
 * Both must hold at least purank_model_category_count() entries. */
PURANK_API purank_status purank_predict(const purank_model* model,
                                        const purank_embeddings* table,
                                        const char* const* tokens,
                                        size_t n_tokens, int32_t* order_out,
                                        double* scores_out, size_t capacity);

PURANK_API purank_status purank_evaluate(const purank_model* model,
                                         const purank_embeddings* table,
                                         const purank_corpus* test, int k,
                                         char** json_out, char** text_out);

/* variant is "nearest", "mean" or NULL (follow the model's training mode).
 * gold may be NULL; when given (same requests with complete gold sets) the
 * output includes propagation precision/recall. */
PURANK_API purank_status purank_propagate(const purank_model* model,
                                          const purank_embeddings* table,
                                          const purank_corpus* corpus,
                                          const char* variant,
                                          const purank_corpus* gold,
                                          char** json_out, char** text_out);

/* config_b_json may be NULL for a single-config summary. */
PURANK_API purank_status purank_trials(const purank_corpus* train,
                                       const purank_corpus* valid,
                                       const purank_corpus* test,
                                       const purank_embeddings* table,
                                       const char* config_a_json,
                                       const char* config_b_json,
                                       const uint64_t* seed, char** json_out,
                                       char** text_out);

#ifdef __cplusplus
}
#endif

#endif /* PURANK_H */
