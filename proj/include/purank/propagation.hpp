#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "purank/encoder.hpp"
#include "purank/objective.hpp"

namespace purank {

enum class PropagationVariant { nearest, mean };

std::string_view to_string(PropagationVariant v);
PropagationVariant propagation_variant_from_string(std::string_view name);

struct PropagationConfig {
  PropagationVariant variant = PropagationVariant::mean;
  int categories = 2;
};

/// Mean variant keeps one centroid per category; nearest variant keeps the
/// member lists for nearest-neighbour queries.
struct Representatives {
  PropagationVariant variant = PropagationVariant::mean;
  std::vector<Vector> means;
  std::vector<std::vector<std::size_t>> members;
};

Representatives category_representatives(std::span<const Vector> xs,
                                         std::span<const int> given,
                                         int categories,
                                         PropagationVariant variant);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Scores over (request, category) pairs. The annotated pair of each
/// request is absent.
struct ScoreMap {
  std::size_t requests = 0;
  std::size_t categories = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> present;

  ScoreMap() = default;
  ScoreMap(std::size_t requests, std::size_t categories);
  static ScoreMap excluding_given(std::span<const int> given,
                                  std::size_t categories);

  bool has(std::size_t i, std::size_t j) const {
    return present[i * categories + j] != 0;
  }
  double at(std::size_t i, std::size_t j) const {
    return values[i * categories + j];
  }
  double& at(std::size_t i, std::size_t j) {
    return values[i * categories + j];
  }
  std::size_t count() const;

  bool operator==(const ScoreMap&) const = default;
};

/// Distance from each request to each foreign category's representative
/// (centroid, or the nearest annotated member with ties to the lower index).
ScoreMap representative_distances(std::span<const Vector> xs,
                                  std::span<const int> given,
                                  const Representatives& reps);

/// Arithmetic mean over every (request, foreign category) pair.
double mean_distance(std::span<const Vector> xs, std::span<const int> given,
                     const Representatives& reps);
double mean_distance(const ScoreMap& distances);

/// exp(-(d / mean_distance) * C / (C - 1)).
double similarity_from_distance(double distance, double mean_distance,
                                int categories);
double similarity(std::span<const double> x, std::span<const double> rep,
                  double mean_distance, int categories);

struct ScaledScores {
  ScoreMap scores;
  bool degenerate = false;  // max == min; every value set to 0
};

/// Global affine map of the present scores onto [-1, 1].
ScaledScores scale_scores(const ScoreMap& raw);

/// s >= 0 -> positive with weight s; s < 0 -> negative with weight -s;
/// the annotated pair is positive with weight 1.
WeightedLabelMatrix assign_labels(const ScoreMap& scaled,
                                  std::span<const int> given);

struct PropagationResult {
  ScoreMap raw;
  ScoreMap scaled;
  double mean_distance = 0.0;
  WeightedLabelMatrix labels;
  bool degenerate = false;
  std::vector<std::string> warnings;

  /// Categories that became positive beyond the annotated one, per request.
  std::vector<std::vector<int>> propagated_positives() const;
};

PropagationResult propagate(std::span<const Vector> xs,
                            std::span<const int> given,
                            const PropagationConfig& cfg);
PropagationResult propagate(const Dataset& d, std::span<const Vector> xs,
                            const PropagationConfig& cfg);

nlohmann::json to_json(const PropagationResult& r,
                       std::span<const std::string> request_ids = {});

}  // namespace purank
