#include "purank/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "purank/error.hpp"

namespace purank {

ModelParams::ModelParams(std::size_t categories, std::size_t dim)
    : categories(categories), dim(dim), weights(categories * dim, 0.0) {}

std::span<const double> ModelParams::row(std::size_t j) const {
  return std::span<const double>(weights).subspan(j * dim, dim);
}

std::span<double> ModelParams::row(std::size_t j) {
  return std::span<double>(weights).subspan(j * dim, dim);
}

void ObjectiveConfig::validate() const {
  if (!(margin < 1.0)) throw Error(ErrorKind::invalid_argument, "margin m must be < 1");
  if (!(kappa > 0.0)) throw Error(ErrorKind::invalid_argument, "kappa must be > 0");
  if (categories < 2) {
    throw Error(ErrorKind::invalid_argument, "category count must be >= 2");
  }
}

double ramp_loss(double t, double margin) {
  return std::min(1.0 - margin, std::max(0.0, 1.0 - t));
}

double ramp_loss_subgrad(double t, double margin) {
  return (t > margin && t < 1.0) ? -1.0 : 0.0;
}

double rank_weight(int r) {
  if (r < 1) throw Error(ErrorKind::invalid_argument, fmt::format("rank {} < 1", r));
  double s = 0.0;
  for (int j = 1; j <= r; ++j) s += 1.0 / j;
  return s;
}

std::vector<double> compute_scores(std::span<const double> x, const ModelParams& p) {
  if (x.size() != p.dim) {
    throw Error(ErrorKind::dimension,
                fmt::format("vector has dim {}, model expects {}", x.size(), p.dim));
  }
  std::vector<double> scores(p.categories);
  for (std::size_t j = 0; j < p.categories; ++j) {
    const auto w = p.row(j);
    double s = 0.0;
    for (std::size_t d = 0; d < p.dim; ++d) s += w[d] * x[d];
    scores[j] = s;
  }
  return scores;
}

std::vector<int> ranking_order(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<int> compute_ranks(std::span<const double> scores) {
  const auto order = ranking_order(scores);
  std::vector<int> ranks(scores.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ranks[order[pos]] = static_cast<int>(pos) + 1;
  }
  return ranks;
}

// --- labels ------------------------------------------------------------------

WeightedLabelMatrix::WeightedLabelMatrix(std::size_t requests, std::size_t categories)
    : requests_(requests),
      categories_(categories),
      positive_(requests * categories, 0),
      weight_(requests * categories, 1.0) {}

WeightedLabelMatrix WeightedLabelMatrix::from_given(std::span<const int> given,
                                                    std::size_t categories) {
  WeightedLabelMatrix m(given.size(), categories);
  for (std::size_t i = 0; i < given.size(); ++i) {
    if (given[i] < 0 || static_cast<std::size_t>(given[i]) >= categories) {
      throw Error(ErrorKind::validation,
                  fmt::format("unknown category {} for request {}", given[i], i));
    }
    m.set(i, static_cast<std::size_t>(given[i]), true, 1.0);
  }
  return m;
}

void WeightedLabelMatrix::set(std::size_t i, std::size_t j, bool positive,
                              double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("label weight {} outside [0, 1] at ({}, {})", weight, i, j));
  }
  positive_[i * categories_ + j] = positive ? 1 : 0;
  weight_[i * categories_ + j] = weight;
}

WeightedLabelMatrix WeightedLabelMatrix::subset(std::span<const std::size_t> rows) const {
  WeightedLabelMatrix out(rows.size(), categories_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r] * categories_;
    std::copy_n(positive_.begin() + static_cast<std::ptrdiff_t>(src), categories_,
                out.positive_.begin() + static_cast<std::ptrdiff_t>(r * categories_));
    std::copy_n(weight_.begin() + static_cast<std::ptrdiff_t>(src), categories_,
                out.weight_.begin() + static_cast<std::ptrdiff_t>(r * categories_));
  }
  return out;
}

void WeightedLabelMatrix::validate() const {
  for (std::size_t i = 0; i < requests_; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < categories_; ++j) {
      const double w = weight(i, j);
      if (!(w >= 0.0 && w <= 1.0)) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("label weight {} outside [0, 1] at ({}, {})", w, i, j));
      }
      any = any || positive(i, j);
    }
    if (!any) {
      throw Error(ErrorKind::validation,
                  fmt::format("request {} has an empty positive set", i));
    }
  }
}

// --- loss --------------------------------------------------------------------

namespace {

void check_shapes(std::size_t batch, const WeightedLabelMatrix& labels,
                  const ModelParams& p, const ObjectiveConfig& cfg) {
  cfg.validate();
  if (labels.requests() != batch) {
    throw Error(ErrorKind::dimension,
                fmt::format("{} label rows for {} requests", labels.requests(), batch));
  }
  if (labels.categories() != p.categories ||
      static_cast<std::size_t>(cfg.categories) != p.categories) {
    throw Error(ErrorKind::dimension, "category count mismatch between labels, "
                                      "model and objective config");
  }
  labels.validate();
}

// Loss of one request; accumulates d loss / d score_j into dscore.
double request_loss(std::span<const double> scores,
                    const WeightedLabelMatrix& labels, std::size_t i,
                    const ObjectiveConfig& cfg, LossMode mode,
                    std::span<double> dscore) {
  const std::size_t c = scores.size();
  const auto ranks = compute_ranks(scores);
  const bool weighted = mode == LossMode::pu;
  const double m = cfg.margin;
  double loss = 0.0;

  for (std::size_t j = 0; j < c; ++j) {
    if (!labels.positive(i, j)) continue;
    const double wj = weighted ? labels.weight(i, j) : 1.0;
    const double rank_coef = rank_weight(ranks[j]);
    for (std::size_t k = 0; k < c; ++k) {
      if (labels.positive(i, k)) continue;
      const double wk = weighted ? labels.weight(i, k) : 1.0;
      const double coef = wj * wk * rank_coef;
      const double t = scores[j] - scores[k];
      loss += coef * ramp_loss(t, m);
      if (!dscore.empty()) {
        const double g = coef * ramp_loss_subgrad(t, m);
        dscore[j] += g;
        dscore[k] -= g;
      }
    }
  }

  for (std::size_t j = 0; j < c; ++j) {
    const double y = labels.positive(i, j) ? 1.0 : -1.0;
    const double w = weighted ? labels.weight(i, j) : 1.0;
    loss += cfg.kappa * w * ramp_loss(y * scores[j], m);
    if (!dscore.empty()) {
      dscore[j] += cfg.kappa * w * ramp_loss_subgrad(y * scores[j], m) * y;
    }
  }
  return loss;
}

}  // namespace

double ranked_ramp_loss(std::span<const Vector> xs,
                        const WeightedLabelMatrix& labels, const ModelParams& p,
                        const ObjectiveConfig& cfg, LossMode mode) {
  check_shapes(xs.size(), labels, p, cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto scores = compute_scores(xs[i], p);
    total += request_loss(scores, labels, i, cfg, mode, {});
  }
  if (!std::isfinite(total)) throw Error(ErrorKind::numeric, "non-finite loss");
  return total;
}

double pn_loss(std::span<const Vector> xs, std::span<const int> given,
               const ModelParams& p, const ObjectiveConfig& cfg) {
  if (given.size() != xs.size()) {
    throw Error(ErrorKind::dimension, "one given category per request is required");
  }
  const auto labels = WeightedLabelMatrix::from_given(given, p.categories);
  return ranked_ramp_loss(xs, labels, p, cfg, LossMode::pn);
}

double pu_loss(std::span<const Vector> xs, const WeightedLabelMatrix& labels,
               const ModelParams& p, const ObjectiveConfig& cfg) {
  return ranked_ramp_loss(xs, labels, p, cfg, LossMode::pu);
}

Gradients loss_gradients(std::span<const EncodedRequest> batch,
                         const WeightedLabelMatrix& labels, const ModelParams& p,
                         const ObjectiveConfig& cfg, LossMode mode,
                         const EmbeddingTable* table) {
  check_shapes(batch.size(), labels, p, cfg);
  const bool through_encoder = table != nullptr && table->trainable();
  if (through_encoder && table->dim() != p.dim) {
    throw Error(ErrorKind::dimension, "embedding dim does not match the model");
  }

  Gradients g;
  g.weights.assign(p.weights.size(), 0.0);
  if (through_encoder) g.embeddings.assign(table->data().size(), 0.0);

  std::vector<double> dscore(p.categories);
  std::vector<double> dx(p.dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& x = batch[i].x;
    const auto scores = compute_scores(x, p);
    std::fill(dscore.begin(), dscore.end(), 0.0);
    g.loss += request_loss(scores, labels, i, cfg, mode, dscore);

    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t j = 0; j < p.categories; ++j) {
      if (dscore[j] == 0.0) continue;
      const auto w = p.row(j);
      double* gw = g.weights.data() + j * p.dim;
      for (std::size_t d = 0; d < p.dim; ++d) {
        gw[d] += dscore[j] * x[d];
        dx[d] += dscore[j] * w[d];
      }
    }

    if (through_encoder) {
      const auto& rows = batch[i].rows;
      const double share = 1.0 / static_cast<double>(rows.size());
      for (int r : rows) {
        if (r < 0) continue;
        double* ge = g.embeddings.data() + static_cast<std::size_t>(r) * p.dim;
        for (std::size_t d = 0; d < p.dim; ++d) ge[d] += dx[d] * share;
      }
    }
  }
  if (!std::isfinite(g.loss)) throw Error(ErrorKind::numeric, "non-finite loss");
  return g;
}

// --- optimizer ---------------------------------------------------------------

void adam_update(std::span<double> params, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::uint64_t step,
                 const AdamConfig& cfg) {
  if (grad.size() != params.size() || m.size() != params.size() ||
      v.size() != params.size()) {
    throw Error(ErrorKind::dimension, "optimizer state does not match parameters");
  }
  if (step < 1) throw Error(ErrorKind::invalid_argument, "adam step index starts at 1");
  for (double gi : grad) {
    if (!std::isfinite(gi)) throw Error(ErrorKind::numeric, "non-finite gradient entry");
  }
  const double t = static_cast<double>(step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
    const double m_hat = m[k] / bias1;
    const double v_hat = v[k] / bias2;
    params[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

void adam_step(ModelParams& p, const Gradients& g, AdamState& st,
               EmbeddingTable* table) {
  if (g.weights.size() != p.weights.size()) {
    throw Error(ErrorKind::dimension, "gradient does not match the weight matrix");
  }
  const bool with_table = !g.embeddings.empty();
  if (with_table && (table == nullptr || g.embeddings.size() != table->data().size())) {
    throw Error(ErrorKind::dimension, "embedding gradient does not match the table");
  }
  // Validate everything before mutating any state.
  for (double v : g.weights) {
    if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "non-finite gradient entry");
  }
  for (double v : g.embeddings) {
    if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "non-finite gradient entry");
  }

  if (st.m_weights.size() != p.weights.size()) {
    st.m_weights.assign(p.weights.size(), 0.0);
    st.v_weights.assign(p.weights.size(), 0.0);
  }
  ++st.step;
  adam_update(p.weights, g.weights, st.m_weights, st.v_weights, st.step, st.config);
  if (with_table) {
    if (st.m_embeddings.size() != g.embeddings.size()) {
      st.m_embeddings.assign(g.embeddings.size(), 0.0);
      st.v_embeddings.assign(g.embeddings.size(), 0.0);
    }
    adam_update(table->data(), g.embeddings, st.m_embeddings, st.v_embeddings,
                st.step, st.config);
  }
}

}  // namespace purank
