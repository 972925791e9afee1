#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "purank/encoder.hpp"

namespace purank {

/// One weight row per category; score_j = <w_j, x>.
struct ModelParams {
  std::size_t categories = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // categories x dim, row-major

  ModelParams() = default;
  ModelParams(std::size_t categories, std::size_t dim);

  std::span<const double> row(std::size_t j) const;
  std::span<double> row(std::size_t j);

  bool operator==(const ModelParams&) const = default;
};

struct ObjectiveConfig {
  double margin = -0.8;  // m
  double kappa = 5.0;
  int categories = 2;

  void validate() const;
};

// Clipped hinge: min(1 - m, max(0, 1 - t)).
double ramp_loss(double t, double margin);
// -1 strictly inside (m, 1), 0 elsewhere including both kinks.
double ramp_loss_subgrad(double t, double margin);

/// Partial harmonic sum 1 + 1/2 + ... + 1/r.
double rank_weight(int r);

std::vector<double> compute_scores(std::span<const double> x,
                                   const ModelParams& p);

/// 1-based ranks; higher score ranks first, ties go to the lower id.
std::vector<int> compute_ranks(std::span<const double> scores);

/// Categories ordered by rank (the inverse permutation of compute_ranks).
std::vector<int> ranking_order(std::span<const double> scores);

/// Signed per-(request, category) labels. Every pair is either positive or
/// negative; the weight is a magnitude in [0, 1].
class WeightedLabelMatrix {
 public:
  WeightedLabelMatrix() = default;
  WeightedLabelMatrix(std::size_t requests, std::size_t categories);

  /// PN labelling: the given category positive, every other one negative,
  /// all weights 1.
  static WeightedLabelMatrix from_given(std::span<const int> given,
                                        std::size_t categories);

  std::size_t requests() const noexcept { return requests_; }
  std::size_t categories() const noexcept { return categories_; }

  bool positive(std::size_t i, std::size_t j) const {
    return positive_[i * categories_ + j] != 0;
  }
  double weight(std::size_t i, std::size_t j) const {
    return weight_[i * categories_ + j];
  }
  void set(std::size_t i, std::size_t j, bool positive, double weight);

  /// Rows in the given order.
  WeightedLabelMatrix subset(std::span<const std::size_t> rows) const;

  /// Throws when a weight lies outside [0, 1] or a row has no positive.
  void validate() const;

  bool operator==(const WeightedLabelMatrix&) const = default;

 private:
  std::size_t requests_ = 0;
  std::size_t categories_ = 0;
  std::vector<std::uint8_t> positive_;
  std::vector<double> weight_;
};

enum class LossMode { pn, pu };

/// Unweighted ranked ramp loss with the given category as the only
/// positive.
double pn_loss(std::span<const Vector> xs, std::span<const int> given,
               const ModelParams& p, const ObjectiveConfig& cfg);

/// Same objective with the pairwise term scaled by w_ij * w_ik and the
/// pointwise term by w_ij. Row i of `labels` belongs to xs[i].
double pu_loss(std::span<const Vector> xs, const WeightedLabelMatrix& labels,
               const ModelParams& p, const ObjectiveConfig& cfg);

/// Shared evaluator. In pn mode the signs of `labels` are used and all
/// weights are taken as 1.
double ranked_ramp_loss(std::span<const Vector> xs,
                        const WeightedLabelMatrix& labels,
                        const ModelParams& p, const ObjectiveConfig& cfg,
                        LossMode mode);

struct Gradients {
  std::vector<double> weights;     // shaped like ModelParams::weights
  std::vector<double> embeddings;  // shaped like the table; empty if frozen
  double loss = 0.0;
};

/// Subgradient of ranked_ramp_loss with ranks and rank weights held fixed
/// at the current scores. When `table` is non-null and trainable, the
/// gradient is pushed through the pooling mean onto the token rows that
/// produced each request (batch[i].x must be the current encoding).
Gradients loss_gradients(std::span<const EncodedRequest> batch,
                         const WeightedLabelMatrix& labels,
                         const ModelParams& p, const ObjectiveConfig& cfg,
                         LossMode mode, const EmbeddingTable* table = nullptr);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> m_weights, v_weights;
  std::vector<double> m_embeddings, v_embeddings;

  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam on a flat parameter span. `step` is the 1-based step
/// index after incrementing.
void adam_update(std::span<double> params, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::uint64_t step,
                 const AdamConfig& cfg);

/// One optimizer step over the weights and, when the gradient carries an
/// embedding part, the trainable table.
void adam_step(ModelParams& p, const Gradients& g, AdamState& st,
               EmbeddingTable* table = nullptr);

}  // namespace purank
