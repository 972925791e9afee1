#include "purank/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "purank/error.hpp"

namespace purank {

std::string_view to_string(PropagationVariant v) {
  return v == PropagationVariant::nearest ? "nearest" : "mean";
}

PropagationVariant propagation_variant_from_string(std::string_view name) {
  if (name == "nearest") return PropagationVariant::nearest;
  if (name == "mean") return PropagationVariant::mean;
  throw Error(ErrorKind::parse, fmt::format("unknown propagation variant '{}'", name));
}

namespace {

void check_inputs(std::span<const Vector> xs, std::span<const int> given,
                  int categories) {
  if (categories < 2) {
    throw Error(ErrorKind::invalid_argument, "propagation needs at least two categories");
  }
  if (xs.size() != given.size()) {
    throw Error(ErrorKind::dimension, "one given category per vector is required");
  }
  for (std::size_t i = 0; i < given.size(); ++i) {
    if (given[i] < 0 || given[i] >= categories) {
      throw Error(ErrorKind::validation,
                  fmt::format("unknown category {} for request {}", given[i], i));
    }
    if (!xs.empty() && xs[i].size() != xs[0].size()) {
      throw Error(ErrorKind::dimension, "vectors of differing dimension");
    }
  }
}

}  // namespace

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension, "distance dim mismatch");
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

Representatives category_representatives(std::span<const Vector> xs,
                                         std::span<const int> given,
                                         int categories,
                                         PropagationVariant variant) {
  check_inputs(xs, given, categories);
  Representatives reps;
  reps.variant = variant;
  reps.members.resize(categories);
  for (std::size_t i = 0; i < xs.size(); ++i) reps.members[given[i]].push_back(i);
  for (int j = 0; j < categories; ++j) {
    if (reps.members[j].empty()) {
      throw Error(ErrorKind::validation,
                  fmt::format("category {} has no annotated request", j));
    }
  }
  if (variant == PropagationVariant::mean) {
    const std::size_t dim = xs.front().size();
    reps.means.assign(categories, Vector(dim, 0.0));
    for (int j = 0; j < categories; ++j) {
      auto& mu = reps.means[j];
      for (std::size_t i : reps.members[j]) {
        for (std::size_t d = 0; d < dim; ++d) mu[d] += xs[i][d];
      }
      const auto n = static_cast<double>(reps.members[j].size());
      for (auto& v : mu) v /= n;
    }
  }
  return reps;
}

ScoreMap::ScoreMap(std::size_t requests, std::size_t categories)
    : requests(requests),
      categories(categories),
      values(requests * categories, 0.0),
      present(requests * categories, 0) {}

ScoreMap ScoreMap::excluding_given(std::span<const int> given,
                                   std::size_t categories) {
  ScoreMap m(given.size(), categories);
  std::fill(m.present.begin(), m.present.end(), 1);
  for (std::size_t i = 0; i < given.size(); ++i) {
    m.present[i * categories + static_cast<std::size_t>(given[i])] = 0;
  }
  return m;
}

std::size_t ScoreMap::count() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), 1));
}

ScoreMap representative_distances(std::span<const Vector> xs,
                                  std::span<const int> given,
                                  const Representatives& reps) {
  const auto categories = reps.members.size();
  check_inputs(xs, given, static_cast<int>(categories));
  ScoreMap dist = ScoreMap::excluding_given(given, categories);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < categories; ++j) {
      if (!dist.has(i, j)) continue;
      if (reps.variant == PropagationVariant::mean) {
        dist.at(i, j) = euclidean_distance(xs[i], reps.means[j]);
      } else {
        // Members are in ascending index order, so strict < keeps the
        // lowest index among equidistant neighbours.
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t n : reps.members[j]) {
          const double d = euclidean_distance(xs[i], xs[n]);
          if (d < best) best = d;
        }
        dist.at(i, j) = best;
      }
    }
  }
  return dist;
}

double mean_distance(const ScoreMap& distances) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < distances.values.size(); ++k) {
    if (!distances.present[k]) continue;
    sum += distances.values[k];
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorKind::validation,
                "no (request, foreign category) pairs to average over");
  }
  return sum / static_cast<double>(n);
}

double mean_distance(std::span<const Vector> xs, std::span<const int> given,
                     const Representatives& reps) {
  return mean_distance(representative_distances(xs, given, reps));
}

double similarity_from_distance(double distance, double mean_dist, int categories) {
  if (!(mean_dist > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "mean distance must be positive");
  }
  if (categories < 2) {
    throw Error(ErrorKind::invalid_argument, "category count must be >= 2");
  }
  const double ratio =
      static_cast<double>(categories) / static_cast<double>(categories - 1);
  return std::exp(-(distance / mean_dist) * ratio);
}

double similarity(std::span<const double> x, std::span<const double> rep,
                  double mean_dist, int categories) {
  return similarity_from_distance(euclidean_distance(x, rep), mean_dist, categories);
}

ScaledScores scale_scores(const ScoreMap& raw) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < raw.values.size(); ++k) {
    if (!raw.present[k]) continue;
    lo = std::min(lo, raw.values[k]);
    hi = std::max(hi, raw.values[k]);
  }
  if (lo > hi) throw Error(ErrorKind::validation, "cannot scale an empty score map");

  ScaledScores out{raw, false};
  if (hi == lo) {
    spdlog::warn("similarity scores are all equal ({}); scaled scores set to 0", lo);
    out.degenerate = true;
    for (std::size_t k = 0; k < raw.values.size(); ++k) {
      if (raw.present[k]) out.scores.values[k] = 0.0;
    }
    return out;
  }
  const double span = hi - lo;
  for (std::size_t k = 0; k < raw.values.size(); ++k) {
    if (!raw.present[k]) continue;
    const double s = -1.0 + 2.0 * (raw.values[k] - lo) / span;
    out.scores.values[k] = std::clamp(s, -1.0, 1.0);
  }
  return out;
}

WeightedLabelMatrix assign_labels(const ScoreMap& scaled, std::span<const int> given) {
  if (given.size() != scaled.requests) {
    throw Error(ErrorKind::dimension, "score map and given categories disagree");
  }
  WeightedLabelMatrix labels(scaled.requests, scaled.categories);
  for (std::size_t i = 0; i < scaled.requests; ++i) {
    for (std::size_t j = 0; j < scaled.categories; ++j) {
      if (static_cast<int>(j) == given[i]) {
        labels.set(i, j, true, 1.0);
        continue;
      }
      if (!scaled.has(i, j)) {
        throw Error(ErrorKind::validation,
                    fmt::format("no scaled score for pair ({}, {})", i, j));
      }
      const double s = scaled.at(i, j);
      if (s >= 0.0) {
        labels.set(i, j, true, s);
      } else {
        labels.set(i, j, false, -s);
      }
    }
  }
  return labels;
}

std::vector<std::vector<int>> PropagationResult::propagated_positives() const {
  std::vector<std::vector<int>> out(labels.requests());
  for (std::size_t i = 0; i < labels.requests(); ++i) {
    for (std::size_t j = 0; j < labels.categories(); ++j) {
      if (raw.has(i, j) && labels.positive(i, j)) out[i].push_back(static_cast<int>(j));
    }
  }
  return out;
}

PropagationResult propagate(std::span<const Vector> xs, std::span<const int> given,
                            const PropagationConfig& cfg) {
  const auto reps = category_representatives(xs, given, cfg.categories, cfg.variant);
  PropagationResult res;
  const ScoreMap dist = representative_distances(xs, given, reps);
  res.mean_distance = mean_distance(dist);

  res.raw = dist;
  if (!(res.mean_distance > 0.0)) {
    const std::string msg =
        "mean distance is zero; every propagated pair becomes a weight-0 positive";
    spdlog::warn(msg);
    res.warnings.push_back(msg);
    res.degenerate = true;
    for (std::size_t k = 0; k < res.raw.values.size(); ++k) {
      if (res.raw.present[k]) res.raw.values[k] = 1.0;
    }
    res.scaled = res.raw;
    for (std::size_t k = 0; k < res.scaled.values.size(); ++k) {
      if (res.scaled.present[k]) res.scaled.values[k] = 0.0;
    }
    res.labels = assign_labels(res.scaled, given);
    return res;
  }

  for (std::size_t k = 0; k < res.raw.values.size(); ++k) {
    if (!res.raw.present[k]) continue;
    res.raw.values[k] =
        similarity_from_distance(dist.values[k], res.mean_distance, cfg.categories);
  }
  auto scaled = scale_scores(res.raw);
  if (scaled.degenerate) {
    res.degenerate = true;
    res.warnings.push_back("similarity scores are all equal; scaled scores set to 0");
  }
  res.scaled = std::move(scaled.scores);
  res.labels = assign_labels(res.scaled, given);
  return res;
}

PropagationResult propagate(const Dataset& d, std::span<const Vector> xs,
                            const PropagationConfig& cfg) {
  if (cfg.categories != d.category_count()) {
    throw Error(ErrorKind::invalid_argument,
                "propagation config category count differs from the dataset");
  }
  const auto given = d.given_categories();
  return propagate(xs, given, cfg);
}

nlohmann::json to_json(const PropagationResult& r,
                       std::span<const std::string> request_ids) {
  nlohmann::json j;
  j["mean_distance"] = r.mean_distance;
  j["degenerate"] = r.degenerate;
  j["warnings"] = r.warnings;
  j["categories"] = r.labels.categories();
  auto requests = nlohmann::json::array();
  for (std::size_t i = 0; i < r.labels.requests(); ++i) {
    nlohmann::json row;
    if (i < request_ids.size()) {
      row["id"] = request_ids[i];
    } else {
      row["index"] = i;
    }
    auto raw = nlohmann::json::array();
    auto scaled = nlohmann::json::array();
    auto positives = nlohmann::json::array();
    auto negatives = nlohmann::json::array();
    for (std::size_t c = 0; c < r.labels.categories(); ++c) {
      raw.push_back(r.raw.has(i, c) ? nlohmann::json(r.raw.at(i, c)) : nlohmann::json());
      scaled.push_back(r.scaled.has(i, c) ? nlohmann::json(r.scaled.at(i, c))
                                          : nlohmann::json());
      const nlohmann::json entry = {{"category", c}, {"weight", r.labels.weight(i, c)}};
      (r.labels.positive(i, c) ? positives : negatives).push_back(entry);
    }
    row["raw"] = std::move(raw);
    row["scaled"] = std::move(scaled);
    row["positives"] = std::move(positives);
    row["negatives"] = std::move(negatives);
    requests.push_back(std::move(row));
  }
  j["requests"] = std::move(requests);
  return j;
}

}  // namespace purank
