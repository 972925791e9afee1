#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "purank/corpus.hpp"
#include "purank/encoder.hpp"
#include "purank/eval.hpp"
#include "purank/objective.hpp"
#include "purank/propagation.hpp"

namespace purank {

enum class TrainMode { pn, pu_nearest, pu_mean };

std::string_view to_string(TrainMode m);
TrainMode train_mode_from_string(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::pu_mean;
  int epochs_pn = 10;
  int epochs_pu = 50;
  int repropagate_every = 5;
  int batch_size = 32;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;  // categories is filled from the data
  AdamConfig optimizer;
  bool trainable_encoder = false;
  int trial_count = 10;
  int recall_k = 5;
  double init_scale = 0.01;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;        // global index across phases
  std::string phase;    // "pn" or "pu"
  int phase_epoch = 0;
  double loss = 0.0;
  std::optional<RankingMetrics> valid;
  bool repropagated = false;
  bool propagation_degenerate = false;
};

nlohmann::json to_json(const EpochLog& e);

struct TrainedModel {
  ModelParams params;        // best validation MRR within the final phase
  ModelParams final_params;  // weights after the last epoch
  /// Present only for a trainable encoder; the table matching `params`.
  std::optional<EmbeddingTable> table;
  std::optional<EmbeddingTable> final_table;
  TrainConfig config;
  AdamState optimizer;
  std::vector<EpochLog> log;
  int best_epoch = -1;

  const EmbeddingTable& table_or(const EmbeddingTable& fallback) const {
    return table ? *table : fallback;
  }
};

/// Optional hook used by tests to observe or override each propagation
/// result before it is used for training.
using PropagationHook = std::function<void(int phase_epoch, PropagationResult&)>;

TrainedModel train(const Dataset& train_set, const Dataset& valid_set,
                   const EmbeddingTable& table, const TrainConfig& cfg,
                   const PropagationHook& hook = {});

struct Prediction {
  std::vector<int> order;      // category ids, best first
  std::vector<double> scores;  // indexed by category id
};

Prediction predict(const TrainedModel& model, const Request& r,
                   const EmbeddingTable& table);
std::vector<std::vector<int>> predict_rankings(const ModelParams& p,
                                               const Dataset& d,
                                               const EmbeddingTable& table);

struct EvaluationReport {
  RankingMetrics metrics;
  std::vector<MisclassificationRow> misclassification;
  std::vector<std::vector<int>> rankings;
};

EvaluationReport evaluate_model(const TrainedModel& model, const Dataset& test,
                                const EmbeddingTable& table, int k = 5);
nlohmann::json to_json(const EvaluationReport& r, bool include_rankings = false);

/// Propagation over `d` with the model's current encoder.
PropagationResult propagate_with_model(const TrainedModel& model,
                                       const Dataset& d,
                                       const EmbeddingTable& table,
                                       PropagationVariant variant);

// --- trials ------------------------------------------------------------------

struct TrialData {
  Dataset train;
  Dataset valid;
  Dataset test;
  EmbeddingTable table{1};
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<double> values;
};

struct TrialSummary {
  TrainConfig config;
  std::vector<RankingMetrics> per_trial;
  MetricSummary accuracy, recall_at_k, mrr;
};

struct PairedComparison {
  std::string metric;
  std::vector<double> differences;  // b - a per seed
  double mean_difference = 0.0;
  double stddev_difference = 0.0;   // sample (n - 1)
  std::optional<double> t_statistic;
  int wins = 0;  // b > a
  int losses = 0;
  int ties = 0;
};

struct TrialsReport {
  std::vector<std::uint64_t> seeds;
  TrialSummary a;
  std::optional<TrialSummary> b;
  std::vector<PairedComparison> paired;
  /// Per-seed comparative rank percentage of b's top-1 within a's ranks 2-5.
  std::vector<std::optional<double>> comparative_rank;
};

using TrialDataFactory = std::function<TrialData(std::uint64_t seed)>;

/// Trial t trains with seed = cfg_a.seed + t (for both configs, so results
/// are paired) and evaluates on the test split. The factory variant builds
/// fresh data per seed.
TrialsReport run_trials(const TrialData& data, const TrainConfig& cfg_a,
                        const TrainConfig* cfg_b = nullptr);
TrialsReport run_trials(const TrialDataFactory& data, const TrainConfig& cfg_a,
                        const TrainConfig* cfg_b = nullptr);

MetricSummary summarize(std::vector<double> values);
PairedComparison paired_comparison(std::string metric,
                                   std::span<const double> a,
                                   std::span<const double> b);

nlohmann::json to_json(const TrialsReport& r);
std::string format_trials_table(const TrialsReport& r);

// --- checkpoints ---------------------------------------------------------

nlohmann::json checkpoint_to_json(const TrainedModel& m);
TrainedModel checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);
std::string training_log_jsonl(const TrainedModel& m);

}  // namespace purank
