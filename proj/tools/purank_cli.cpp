// Command-line front end. Links only against the purank C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "purank/purank.h"

namespace {

struct CliError {
  purank_status status;
  std::string message;
};

void check(purank_status s, const std::string& context) {
  if (s != PURANK_OK) {
    throw CliError{s, context + ": " + purank_status_string(s) + ": " + purank_last_error()};
  }
}

struct CorpusDeleter {
  void operator()(purank_corpus* c) const { purank_corpus_free(c); }
};
struct TableDeleter {
  void operator()(purank_embeddings* t) const { purank_embeddings_free(t); }
};
struct ModelDeleter {
  void operator()(purank_model* m) const { purank_model_free(m); }
};
struct StringDeleter {
  void operator()(char* s) const { purank_string_free(s); }
};

using Corpus = std::unique_ptr<purank_corpus, CorpusDeleter>;
using Table = std::unique_ptr<purank_embeddings, TableDeleter>;
using Model = std::unique_ptr<purank_model, ModelDeleter>;
using CString = std::unique_ptr<char, StringDeleter>;

purank_split parse_split(const std::string& s) {
  if (s == "train") return PURANK_SPLIT_TRAIN;
  if (s == "valid") return PURANK_SPLIT_VALID;
  if (s == "test") return PURANK_SPLIT_TEST;
  throw CliError{PURANK_ERR_INVALID_ARGUMENT, "unknown split '" + s + "'"};
}

Corpus load_corpus(const std::string& path, const std::string& categories,
                   purank_split split) {
  purank_corpus* c = nullptr;
  check(purank_corpus_load(path.c_str(), categories.c_str(), split, &c), path);
  return Corpus(c);
}

Table load_table(const std::string& path, bool oov_error) {
  purank_embeddings* t = nullptr;
  check(purank_embeddings_load(path.c_str(), oov_error ? 1 : 0, &t), path);
  return Table(t);
}

Model load_model(const std::string& path) {
  purank_model* m = nullptr;
  check(purank_model_load(path.c_str(), &m), path);
  return Model(m);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{PURANK_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{PURANK_ERR_IO, "cannot write " + path};
  out << text;
}

// JSON goes to --out when given, otherwise to stdout; tables go to stdout
// unless --quiet.
void deliver(const std::string& out_path, bool quiet, char* json, char* text) {
  CString j(json), t(text);
  if (!out_path.empty()) {
    write_file(out_path, std::string(j.get()) + "\n");
    if (!quiet && t) std::cout << t.get();
  } else {
    std::cout << j.get() << '\n';
  }
}

const uint64_t* seed_ptr(const std::optional<uint64_t>& s) { return s ? &*s : nullptr; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positive/unlabeled multi-label ranking with label propagation"};
  app.require_subcommand(1);
  int log_level = 3;
  app.add_option("--log-level", log_level, "0 trace .. 4 error, 6 off")->capture_default_str();
  std::string oov = "zero";
  app.add_option("--oov", oov, "Out-of-vocabulary tokens: zero | error")
      ->check(CLI::IsMember({"zero", "error"}))
      ->capture_default_str();

  std::optional<uint64_t> seed;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed (overrides config seeds)");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus and embeddings");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "Synthetic config JSON file");
  gen->add_option("--out-dir", gen_out, "Output directory")->required();
  add_seed(gen);

  // train
  auto* tr = app.add_subcommand("train", "Train a model; writes a checkpoint and log");
  std::string tr_train, tr_valid, tr_categories, tr_embeddings, tr_config, tr_out, tr_log;
  tr->add_option("--train", tr_train, "Training corpus (JSONL)")->required();
  tr->add_option("--valid", tr_valid, "Validation corpus (JSONL)");
  tr->add_option("--categories", tr_categories, "Category metadata JSON")->required();
  tr->add_option("--embeddings", tr_embeddings, "Embedding table")->required();
  tr->add_option("--config", tr_config, "Train config JSON file");
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--log", tr_log, "Per-epoch log (JSONL)");
  add_seed(tr);

  // propagate
  auto* pr = app.add_subcommand("propagate", "Run label propagation with a model's encoder");
  std::string pr_model, pr_corpus, pr_categories, pr_embeddings, pr_variant, pr_gold, pr_out;
  bool pr_quiet = false;
  pr->add_option("--model", pr_model, "Checkpoint")->required();
  pr->add_option("--corpus", pr_corpus, "Annotated corpus (JSONL)")->required();
  pr->add_option("--categories", pr_categories, "Category metadata JSON")->required();
  pr->add_option("--embeddings", pr_embeddings, "Embedding table");
  pr->add_option("--variant", pr_variant, "nearest | mean (default: model mode)");
  pr->add_option("--gold", pr_gold, "Same requests with complete gold sets");
  pr->add_option("--out", pr_out, "PropagationResult JSON path");
  pr->add_flag("--quiet", pr_quiet, "Suppress tables");
  add_seed(pr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on a test corpus");
  std::string ev_model, ev_test, ev_categories, ev_embeddings, ev_out;
  int ev_k = 5;
  bool ev_quiet = false;
  ev->add_option("--model", ev_model, "Checkpoint")->required();
  ev->add_option("--test", ev_test, "Test corpus with gold sets (JSONL)")->required();
  ev->add_option("--categories", ev_categories, "Category metadata JSON")->required();
  ev->add_option("--embeddings", ev_embeddings, "Embedding table");
  ev->add_option("--k", ev_k, "Recall cut-off")->capture_default_str();
  ev->add_option("--out", ev_out, "Metrics JSON path");
  ev->add_flag("--quiet", ev_quiet, "Suppress tables");
  add_seed(ev);

  // stats
  auto* st = app.add_subcommand("stats", "Corpus statistics");
  std::string st_corpus, st_categories, st_split = "train", st_votes, st_out;
  int st_raters = 5;
  bool st_quiet = false;
  st->add_option("--corpus", st_corpus, "Corpus (JSONL)")->required();
  st->add_option("--categories", st_categories, "Category metadata JSON")->required();
  st->add_option("--split", st_split, "train | valid | test")->capture_default_str();
  st->add_option("--votes", st_votes, "Vote records (JSONL) for Fleiss' kappa");
  st->add_option("--raters", st_raters, "Raters per vote record")->capture_default_str();
  st->add_option("--out", st_out, "StatsReport JSON path");
  st->add_flag("--quiet", st_quiet, "Suppress tables");
  add_seed(st);

  // trials
  auto* tl = app.add_subcommand("trials", "Repeated training with paired comparison");
  std::string tl_train, tl_valid, tl_test, tl_categories, tl_embeddings, tl_a, tl_b, tl_out;
  bool tl_quiet = false;
  tl->add_option("--train", tl_train, "Training corpus")->required();
  tl->add_option("--valid", tl_valid, "Validation corpus");
  tl->add_option("--test", tl_test, "Test corpus")->required();
  tl->add_option("--categories", tl_categories, "Category metadata JSON")->required();
  tl->add_option("--embeddings", tl_embeddings, "Embedding table")->required();
  tl->add_option("--config-a", tl_a, "Baseline train config JSON")->required();
  tl->add_option("--config-b", tl_b, "Comparison train config JSON");
  tl->add_option("--out", tl_out, "Report JSON path");
  tl->add_flag("--quiet", tl_quiet, "Suppress tables");
  add_seed(tl);

  // convert
  auto* cv = app.add_subcommand("convert", "Convert a TSV corpus to canonical JSONL");
  std::string cv_tsv, cv_categories, cv_split = "train", cv_out;
  cv->add_option("--tsv", cv_tsv, "id<TAB>text<TAB>category[<TAB>gold|gold]")->required();
  cv->add_option("--categories", cv_categories, "Category metadata JSON")->required();
  cv->add_option("--split", cv_split, "train | valid | test")->capture_default_str();
  cv->add_option("--out", cv_out, "Output JSONL")->required();
  add_seed(cv);

  // split
  auto* sp = app.add_subcommand("split", "Stratified train/valid/test split");
  std::string sp_corpus, sp_categories, sp_split = "test", sp_out;
  std::vector<double> sp_ratios;
  sp->add_option("--corpus", sp_corpus, "Corpus (JSONL)")->required();
  sp->add_option("--categories", sp_categories, "Category metadata JSON")->required();
  sp->add_option("--split", sp_split, "Tag to validate the input against")->capture_default_str();
  sp->add_option("--ratios", sp_ratios, "Three ratios summing to 1")
      ->expected(3)->delimiter(',')->required();
  sp->add_option("--out-dir", sp_out, "Output directory")->required();
  add_seed(sp);

  CLI11_PARSE(app, argc, argv);
  purank_set_log_level(log_level);

  try {
    if (*gen) {
      const std::string cfg = gen_config.empty() ? "{}" : read_file(gen_config);
      check(purank_generate(cfg.c_str(), seed_ptr(seed), gen_out.c_str()), "generate");
      std::cout << "wrote synthetic corpus to " << gen_out << '\n';
    } else if (*tr) {
      auto train = load_corpus(tr_train, tr_categories, PURANK_SPLIT_TRAIN);
      Corpus valid;
      if (!tr_valid.empty()) valid = load_corpus(tr_valid, tr_categories, PURANK_SPLIT_VALID);
      auto table = load_table(tr_embeddings, oov == "error");
      const std::string cfg = tr_config.empty() ? "{}" : read_file(tr_config);
      purank_model* raw = nullptr;
      check(purank_train(train.get(), valid.get(), table.get(), cfg.c_str(), seed_ptr(seed),
                         &raw),
            "train");
      Model model(raw);
      check(purank_model_save(model.get(), tr_out.c_str()), tr_out);
      if (!tr_log.empty()) {
        char* log = nullptr;
        check(purank_model_log_jsonl(model.get(), &log), "log");
        CString owned(log);
        write_file(tr_log, owned.get());
      }
      std::cout << "wrote checkpoint " << tr_out << '\n';
    } else if (*pr) {
      auto model = load_model(pr_model);
      auto corpus = load_corpus(pr_corpus, pr_categories, PURANK_SPLIT_TRAIN);
      Table table;
      if (!pr_embeddings.empty()) table = load_table(pr_embeddings, oov == "error");
      Corpus gold;
      if (!pr_gold.empty()) gold = load_corpus(pr_gold, pr_categories, PURANK_SPLIT_TEST);
      char *json = nullptr, *text = nullptr;
      check(purank_propagate(model.get(), table.get(), corpus.get(),
                             pr_variant.empty() ? nullptr : pr_variant.c_str(), gold.get(),
                             &json, &text),
            "propagate");
      deliver(pr_out, pr_quiet, json, text);
    } else if (*ev) {
      auto model = load_model(ev_model);
      auto test = load_corpus(ev_test, ev_categories, PURANK_SPLIT_TEST);
      Table table;
      if (!ev_embeddings.empty()) table = load_table(ev_embeddings, oov == "error");
      char *json = nullptr, *text = nullptr;
      check(purank_evaluate(model.get(), table.get(), test.get(), ev_k, &json, &text),
            "evaluate");
      deliver(ev_out, ev_quiet, json, text);
    } else if (*st) {
      auto corpus = load_corpus(st_corpus, st_categories, parse_split(st_split));
      char *json = nullptr, *text = nullptr;
      check(purank_corpus_stats(corpus.get(), st_votes.empty() ? nullptr : st_votes.c_str(),
                                st_raters, &json, &text),
            "stats");
      deliver(st_out, st_quiet, json, text);
    } else if (*tl) {
      auto train = load_corpus(tl_train, tl_categories, PURANK_SPLIT_TRAIN);
      Corpus valid;
      if (!tl_valid.empty()) valid = load_corpus(tl_valid, tl_categories, PURANK_SPLIT_VALID);
      auto test = load_corpus(tl_test, tl_categories, PURANK_SPLIT_TEST);
      auto table = load_table(tl_embeddings, oov == "error");
      const std::string a = read_file(tl_a);
      const std::string b = tl_b.empty() ? std::string() : read_file(tl_b);
      char *json = nullptr, *text = nullptr;
      check(purank_trials(train.get(), valid.get(), test.get(), table.get(), a.c_str(),
                          tl_b.empty() ? nullptr : b.c_str(), seed_ptr(seed), &json, &text),
            "trials");
      deliver(tl_out, tl_quiet, json, text);
    } else if (*cv) {
      check(purank_convert_tsv(cv_tsv.c_str(), cv_categories.c_str(), parse_split(cv_split),
                               cv_out.c_str()),
            "convert");
      std::cout << "wrote " << cv_out << '\n';
    } else if (*sp) {
      auto corpus = load_corpus(sp_corpus, sp_categories, parse_split(sp_split));
      purank_corpus* parts[3] = {nullptr, nullptr, nullptr};
      check(purank_corpus_split(corpus.get(), sp_ratios.data(), seed.value_or(0), parts),
            "split");
      Corpus owned[3] = {Corpus(parts[0]), Corpus(parts[1]), Corpus(parts[2])};
      std::filesystem::create_directories(sp_out);
      const char* names[3] = {"train.jsonl", "valid.jsonl", "test.jsonl"};
      for (int s = 0; s < 3; ++s) {
        const auto path = (std::filesystem::path(sp_out) / names[s]).string();
        check(purank_corpus_write(owned[s].get(), path.c_str()), path);
        std::cout << path << ": " << purank_corpus_size(owned[s].get()) << " requests\n";
      }
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.status == PURANK_ERR_INTERNAL ? 3 : (e.status == PURANK_ERR_IO ? 2 : 1);
  }
  return 0;
}
