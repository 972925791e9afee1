#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "purank/corpus.hpp"

namespace purank {

struct RankingMetrics {
  double accuracy = 0.0;
  double recall_at_k = 0.0;
  int k = 5;
  double mrr = 0.0;
  std::size_t n = 0;
};

/// rankings[i] lists category ids best first and must be a permutation of
/// 0..C-1. MRR uses the best-ranked gold category of each request.
RankingMetrics evaluate_ranking(std::span<const std::vector<int>> rankings,
                                std::span<const std::vector<int>> gold,
                                int k);

struct MisclassificationRow {
  int category = 0;
  std::size_t errors = 0;
  std::size_t total = 0;
};

/// Top-1 misses per given category, most errors first (ties by id).
std::vector<MisclassificationRow> misclassification_table(
    std::span<const std::vector<int>> rankings,
    std::span<const std::vector<int>> gold, std::span<const int> given,
    int categories);

using FunctionMatrix = std::array<std::array<double, kFunctionCount>, kFunctionCount>;

struct PropagationQuality {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // nothing propagated
  bool recall_undefined = false;     // no gold beyond the annotation
  std::size_t propagated = 0;
  std::size_t correct = 0;
  std::size_t gold_extra = 0;
  std::size_t false_positives = 0;
  /// [origin function][propagated function], normalised over all false
  /// positives (fractions summing to 1 when any exist).
  FunctionMatrix false_positive_ratio{};
};

/// `propagated[i]` are positives added beyond the annotated category;
/// gold extra is gold[i] minus given[i].
PropagationQuality propagation_quality(
    std::span<const std::vector<int>> propagated,
    std::span<const std::vector<int>> gold, std::span<const int> given,
    std::span<const Category> categories);

struct ComparativeRank {
  std::optional<double> percentage;  // empty when nothing qualifies
  std::size_t conditioned = 0;
  std::size_t satisfied = 0;
};

/// Among requests where A misses at rank 1 but hits in ranks 2-5 and B hits
/// at rank 1, the share (in percent) whose B top-1 sits in A's ranks 2-5.
ComparativeRank comparative_rank_analysis(
    std::span<const std::vector<int>> rankings_a,
    std::span<const std::vector<int>> rankings_b,
    std::span<const std::vector<int>> gold);

nlohmann::json to_json(const RankingMetrics& m);
nlohmann::json to_json(const PropagationQuality& q);
nlohmann::json to_json(const ComparativeRank& c);

std::string format_classification_table(
    std::span<const std::pair<std::string, RankingMetrics>> rows);
std::string format_misclassification_table(
    std::span<const MisclassificationRow> rows,
    std::span<const Category> categories, std::size_t limit = 5);
std::string format_propagation_table(const PropagationQuality& q);
std::string format_false_positive_table(const PropagationQuality& q);

}  // namespace purank
