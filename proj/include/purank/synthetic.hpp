#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "purank/corpus.hpp"
#include "purank/encoder.hpp"

namespace purank {

/// Clustered mixture: one center per synthetic function, one prototype per
/// category drawn around its function center, one request per draw of
/// prototype + isotropic noise.
struct SynthConfig {
  int num_categories = 20;
  int num_functions = 3;
  int train_per_category = 100;
  int valid_per_category = 20;
  int test_per_category = 20;
  // Defaults give mean gold-set size of about 5 at C = 20.
  int embedding_dim = 64;
  double function_spread = 0.5;
  double prototype_spread = 0.4;
  double noise_scale = 1.5;
  double gold_radius = 12.5;
  std::uint64_t seed = 0;

  void validate() const;
};

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& cfg);

struct SyntheticCorpus {
  Dataset train;
  Dataset valid;
  Dataset test;
  EmbeddingTable table;
  /// Complete gold sets of the train requests, hidden from `train`.
  std::vector<std::vector<int>> train_gold;
  std::vector<Vector> prototypes;
};

/// Train requests carry no gold set; valid and test requests carry every
/// category whose prototype lies within gold_radius of the pooled request
/// vector, plus the seed category.
SyntheticCorpus generate_synthetic(const SynthConfig& cfg);

/// `train` with `train_gold` attached (tagged as a complete split).
Dataset with_gold(const Dataset& d, const std::vector<std::vector<int>>& gold);

}  // namespace purank
