#include "purank/purank.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "purank/error.hpp"
#include "purank/pipeline.hpp"
#include "purank/synthetic.hpp"

struct purank_corpus {
  purank::Dataset dataset;
};

struct purank_embeddings {
  purank::EmbeddingTable table;
};

struct purank_model {
  purank::TrainedModel model;
};

namespace {

thread_local std::string g_last_error;

purank_status status_of(purank::ErrorKind kind) {
  using purank::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return PURANK_ERR_INVALID_ARGUMENT;
    case ErrorKind::io: return PURANK_ERR_IO;
    case ErrorKind::parse: return PURANK_ERR_PARSE;
    case ErrorKind::validation: return PURANK_ERR_VALIDATION;
    case ErrorKind::dimension: return PURANK_ERR_DIMENSION;
    case ErrorKind::numeric: return PURANK_ERR_NUMERIC;
  }
  return PURANK_ERR_INTERNAL;
}

template <class F>
purank_status guarded(F&& body) noexcept {
  g_last_error.clear();
  try {
    body();
    return PURANK_OK;
  } catch (const purank::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return PURANK_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PURANK_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PURANK_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PURANK_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw purank::Error(purank::ErrorKind::invalid_argument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** slot, const std::string& s) {
  if (slot) *slot = dup_string(s);
}

purank::SplitTag split_of(purank_split s) {
  switch (s) {
    case PURANK_SPLIT_TRAIN: return purank::SplitTag::train;
    case PURANK_SPLIT_VALID: return purank::SplitTag::valid;
    case PURANK_SPLIT_TEST: return purank::SplitTag::test;
  }
  throw purank::Error(purank::ErrorKind::invalid_argument, "unknown split value");
}

nlohmann::json parse_json_text(const char* text, const char* what) {
  require(text != nullptr, what);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw purank::Error(purank::ErrorKind::parse, fmt::format("{}: {}", what, e.what()));
  }
}

purank::TrainConfig config_of(const char* text, const uint64_t* seed) {
  auto cfg = purank::train_config_from_json(parse_json_text(text, "train config"));
  if (seed) cfg.seed = *seed;
  return cfg;
}

const purank::EmbeddingTable& table_for(const purank_model* model,
                                        const purank_embeddings* table) {
  if (table) return table->table;
  require(model->model.table.has_value(),
          "an embedding table is required: the model carries no trained table");
  return *model->model.table;
}

std::vector<std::string> tokens_of(const char* const* tokens, size_t n) {
  require(tokens != nullptr || n == 0, "tokens must not be NULL");
  std::vector<std::string> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    require(tokens[i] != nullptr, "token must not be NULL");
    out.emplace_back(tokens[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* purank_version(void) { return "1.0.0"; }

const char* purank_last_error(void) { return g_last_error.c_str(); }

const char* purank_status_string(purank_status status) {
  switch (status) {
    case PURANK_OK: return "ok";
    case PURANK_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PURANK_ERR_IO: return "i/o error";
    case PURANK_ERR_PARSE: return "parse error";
    case PURANK_ERR_VALIDATION: return "validation error";
    case PURANK_ERR_DIMENSION: return "dimension mismatch";
    case PURANK_ERR_NUMERIC: return "numeric error";
    case PURANK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void purank_set_log_level(int level) {
  spdlog::set_level(static_cast<spdlog::level::level_enum>(
      level < 0 ? 0 : (level > 6 ? 6 : level)));
}

void purank_string_free(char* s) { std::free(s); }

// --- corpora -----------------------------------------------------------------

purank_status purank_corpus_load(const char* path, const char* categories_path,
                                 purank_split split, purank_corpus** out) {
  return guarded([&] {
    require(path && categories_path && out, "path, categories_path and out are required");
    *out = nullptr;
    auto d = purank::load_corpus(path, categories_path, split_of(split));
    *out = new purank_corpus{std::move(d)};
  });
}

void purank_corpus_free(purank_corpus* corpus) { delete corpus; }

size_t purank_corpus_size(const purank_corpus* corpus) {
  return corpus ? corpus->dataset.requests.size() : 0;
}

size_t purank_corpus_category_count(const purank_corpus* corpus) {
  return corpus ? corpus->dataset.categories.size() : 0;
}

purank_status purank_corpus_write(const purank_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus and path are required");
    purank::write_corpus(corpus->dataset, path);
  });
}

purank_status purank_corpus_split(const purank_corpus* corpus, const double ratios[3],
                                  uint64_t seed, purank_corpus* out[3]) {
  return guarded([&] {
    require(corpus && ratios && out, "corpus, ratios and out are required");
    auto parts = purank::split_dataset(corpus->dataset, {ratios[0], ratios[1], ratios[2]},
                                       seed);
    for (int s = 0; s < 3; ++s) out[s] = new purank_corpus{std::move(parts[s])};
  });
}

purank_status purank_corpus_stats(const purank_corpus* corpus, const char* votes_path,
                                  int n_raters, char** json_out, char** text_out) {
  return guarded([&] {
    require(corpus != nullptr, "corpus is required");
    std::vector<purank::VoteRecord> votes;
    std::optional<double> kappa;
    if (votes_path) {
      votes = purank::load_votes(votes_path);
      if (!votes.empty()) kappa = purank::fleiss_kappa(votes, n_raters);
    }
    const auto report = purank::corpus_stats(corpus->dataset, votes);
    auto j = purank::to_json(report);
    std::string text = purank::format_stats_table(report);
    if (kappa) {
      j["fleiss_kappa"] = *kappa;
      text += fmt::format("Fleiss' kappa: {:.4f}\n", *kappa);
    }
    emit(json_out, j.dump(2));
    emit(text_out, text);
  });
}

purank_status purank_fleiss_kappa(const char* votes_path, int n_raters, double* out) {
  return guarded([&] {
    require(votes_path && out, "votes_path and out are required");
    const auto votes = purank::load_votes(votes_path);
    *out = purank::fleiss_kappa(votes, n_raters);
  });
}

purank_status purank_convert_tsv(const char* tsv_path, const char* categories_path,
                                 purank_split split, const char* out_path) {
  return guarded([&] {
    require(tsv_path && categories_path && out_path, "all paths are required");
    std::ifstream in(tsv_path);
    if (!in) {
      throw purank::Error(purank::ErrorKind::io, fmt::format("cannot open {}", tsv_path));
    }
    const auto d = purank::convert_tsv(in, purank::load_categories(categories_path),
                                       split_of(split));
    purank::write_corpus(d, out_path);
  });
}

purank_status purank_generate(const char* config_json, const uint64_t* seed,
                              const char* out_dir) {
  return guarded([&] {
    require(out_dir != nullptr, "out_dir is required");
    auto cfg = purank::synth_config_from_json(
        config_json ? parse_json_text(config_json, "synthetic config")
                    : nlohmann::json::object());
    if (seed) cfg.seed = *seed;
    const auto corpus = purank::generate_synthetic(cfg);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    purank::write_categories(corpus.train.categories, dir / "categories.json");
    purank::write_corpus(corpus.train, dir / "train.jsonl");
    purank::write_corpus(purank::with_gold(corpus.train, corpus.train_gold),
                         dir / "train_gold.jsonl");
    purank::write_corpus(corpus.valid, dir / "valid.jsonl");
    purank::write_corpus(corpus.test, dir / "test.jsonl");
    purank::write_embeddings(corpus.table, dir / "embeddings.txt");
  });
}

// --- embeddings --------------------------------------------------------------

purank_status purank_embeddings_load(const char* path, int oov_is_error,
                                     purank_embeddings** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = nullptr;
    auto t = purank::load_embeddings(path, false,
                                     oov_is_error ? purank::OovPolicy::error
                                                  : purank::OovPolicy::zero_vector);
    *out = new purank_embeddings{std::move(t)};
  });
}

void purank_embeddings_free(purank_embeddings* table) { delete table; }

size_t purank_embeddings_dim(const purank_embeddings* table) {
  return table ? table->table.dim() : 0;
}

size_t purank_embeddings_count(const purank_embeddings* table) {
  return table ? table->table.size() : 0;
}

purank_status purank_encode(const purank_embeddings* table, const char* const* tokens,
                            size_t n_tokens, double* out, size_t out_len) {
  return guarded([&] {
    require(table && out, "table and out are required");
    require(out_len >= table->table.dim(), "output buffer shorter than the embedding dim");
    purank::Request r;
    r.id = "<encode>";
    r.tokens = tokens_of(tokens, n_tokens);
    const auto x = purank::encode(r, table->table);
    std::copy(x.begin(), x.end(), out);
  });
}

// --- models ------------------------------------------------------------------

purank_status purank_train(const purank_corpus* train, const purank_corpus* valid,
                           const purank_embeddings* table, const char* config_json,
                           const uint64_t* seed, purank_model** out) {
  return guarded([&] {
    require(train && table && out, "train, table and out are required");
    *out = nullptr;
    const auto cfg = config_of(config_json ? config_json : "{}", seed);
    purank::Dataset empty;
    empty.categories = train->dataset.categories;
    empty.split = purank::SplitTag::valid;
    auto model = purank::train(train->dataset, valid ? valid->dataset : empty,
                               table->table, cfg);
    *out = new purank_model{std::move(model)};
  });
}

void purank_model_free(purank_model* model) { delete model; }

purank_status purank_model_save(const purank_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path are required");
    purank::save_checkpoint(model->model, path);
  });
}

purank_status purank_model_load(const char* path, purank_model** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = nullptr;
    *out = new purank_model{purank::load_checkpoint(path)};
  });
}

size_t purank_model_category_count(const purank_model* model) {
  return model ? model->model.params.categories : 0;
}

purank_status purank_model_log_jsonl(const purank_model* model, char** out) {
  return guarded([&] {
    require(model && out, "model and out are required");
    emit(out, purank::training_log_jsonl(model->model));
  });
}

purank_status purank_predict(const purank_model* model, const purank_embeddings* table,
                             const char* const* tokens, size_t n_tokens,
                             int32_t* order_out, double* scores_out, size_t capacity) {
  return guarded([&] {
    require(model && order_out, "model and order_out are required");
    const auto c = model->model.params.categories;
    require(capacity >= c, "output buffers hold fewer entries than categories");
    purank::Request r;
    r.id = "<predict>";
    r.tokens = tokens_of(tokens, n_tokens);
    const auto p = purank::predict(model->model, r, table_for(model, table));
    for (std::size_t k = 0; k < c; ++k) {
      order_out[k] = p.order[k];
      if (scores_out) scores_out[k] = p.scores[k];
    }
  });
}

purank_status purank_evaluate(const purank_model* model, const purank_embeddings* table,
                              const purank_corpus* test, int k, char** json_out,
                              char** text_out) {
  return guarded([&] {
    require(model && test, "model and test corpus are required");
    const auto report =
        purank::evaluate_model(model->model, test->dataset, table_for(model, table), k);
    emit(json_out, purank::to_json(report).dump(2));
    const std::vector<std::pair<std::string, purank::RankingMetrics>> rows = {
        {std::string(purank::to_string(model->model.config.mode)), report.metrics}};
    std::string text = purank::format_classification_table(rows);
    text += '\n';
    text += purank::format_misclassification_table(report.misclassification,
                                                   test->dataset.categories);
    emit(text_out, text);
  });
}

purank_status purank_propagate(const purank_model* model, const purank_embeddings* table,
                               const purank_corpus* corpus, const char* variant,
                               const purank_corpus* gold, char** json_out,
                               char** text_out) {
  return guarded([&] {
    require(model && corpus, "model and corpus are required");
    const auto v = variant ? purank::propagation_variant_from_string(variant)
                           : (model->model.config.mode == purank::TrainMode::pu_nearest
                                  ? purank::PropagationVariant::nearest
                                  : purank::PropagationVariant::mean);
    const auto& d = corpus->dataset;
    const auto result = purank::propagate_with_model(model->model, d,
                                                     table_for(model, table), v);
    std::vector<std::string> ids;
    for (const auto& r : d.requests) ids.push_back(r.id);
    auto j = purank::to_json(result, ids);
    j["variant"] = std::string(purank::to_string(v));
    std::string text = fmt::format("variant {}  mean distance {:.6f}{}\n",
                                   purank::to_string(v), result.mean_distance,
                                   result.degenerate ? "  (degenerate)" : "");
    if (gold) {
      const auto& g = gold->dataset;
      require(g.requests.size() == d.requests.size(),
              "gold corpus must list the same requests");
      for (std::size_t i = 0; i < d.requests.size(); ++i) {
        require(g.requests[i].id == d.requests[i].id,
                "gold corpus must list the same requests in the same order");
      }
      const auto q = purank::propagation_quality(result.propagated_positives(),
                                                 g.gold_or_given(), d.given_categories(),
                                                 d.categories);
      j["quality"] = purank::to_json(q);
      text += purank::format_propagation_table(q);
      text += '\n';
      text += purank::format_false_positive_table(q);
    }
    emit(json_out, j.dump(2));
    emit(text_out, text);
  });
}

purank_status purank_trials(const purank_corpus* train, const purank_corpus* valid,
                            const purank_corpus* test, const purank_embeddings* table,
                            const char* config_a_json, const char* config_b_json,
                            const uint64_t* seed, char** json_out, char** text_out) {
  return guarded([&] {
    require(train && test && table && config_a_json,
            "train, test, table and config_a are required");
    purank::TrialData data;
    data.train = train->dataset;
    if (valid) {
      data.valid = valid->dataset;
    } else {
      data.valid.categories = train->dataset.categories;
      data.valid.split = purank::SplitTag::valid;
    }
    data.test = test->dataset;
    data.table = table->table;
    const auto a = config_of(config_a_json, seed);
    std::optional<purank::TrainConfig> b;
    if (config_b_json) {
      b = config_of(config_b_json, seed);
      b->trial_count = a.trial_count;
    }
    const auto report = purank::run_trials(data, a, b ? &*b : nullptr);
    emit(json_out, purank::to_json(report).dump(2));
    emit(text_out, purank::format_trials_table(report));
  });
}

}  // extern "C"
