#include "purank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "purank/error.hpp"

namespace purank {

namespace {

// Stream ids keep parameter init and per-epoch shuffles independent.
constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kShuffleStream = 0x2000;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::vector<int>> rankings_for(const ModelParams& p,
                                           std::span<const Vector> xs) {
  std::vector<std::vector<int>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(ranking_order(compute_scores(x, p)));
  return out;
}

void check_all_annotated(const Dataset& d) {
  std::vector<char> seen(d.category_count(), 0);
  for (const auto& r : d.requests) seen[r.given_category] = 1;
  for (int c = 0; c < d.category_count(); ++c) {
    if (!seen[c]) {
      throw Error(ErrorKind::validation,
                  fmt::format("category {} has no annotated training request", c));
    }
  }
}

}  // namespace

TrainedModel train(const Dataset& train_set, const Dataset& valid_set,
                   const EmbeddingTable& table, const TrainConfig& cfg_in,
                   const PropagationHook& hook) {
  cfg_in.validate();
  train_set.validate();
  valid_set.validate();
  check_all_annotated(train_set);
  if (!valid_set.requests.empty() &&
      valid_set.category_count() != train_set.category_count()) {
    throw Error(ErrorKind::validation, "train and valid category sets differ");
  }

  const int n_cat = train_set.category_count();
  TrainConfig cfg = cfg_in;
  cfg.objective.categories = n_cat;
  cfg.objective.validate();

  TrainedModel model;
  model.config = cfg;

  EmbeddingTable work = table;
  work.set_trainable(cfg.trainable_encoder);
  const bool trainable = cfg.trainable_encoder;

  ModelParams params(static_cast<std::size_t>(n_cat), work.dim());
  {
    auto rng = stream(cfg.seed, kInitStream, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& w : params.weights) w = cfg.init_scale * normal(rng);
  }
  AdamState opt;
  opt.config = cfg.optimizer;

  const auto given = train_set.given_categories();
  const auto pn_labels = WeightedLabelMatrix::from_given(given, n_cat);
  std::vector<EncodedRequest> encoded = encode_all_with_rows(train_set, work);
  const auto valid_gold = valid_set.gold_or_given();

  const bool pu = cfg.mode != TrainMode::pn;
  const bool select_in_pu = pu && cfg.epochs_pu > 0;
  double best_mrr = -1.0;
  int global_epoch = 0;

  auto run_epoch = [&](const WeightedLabelMatrix& labels, LossMode mode) {
    std::vector<std::size_t> order(encoded.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = stream(cfg.seed, kShuffleStream, static_cast<std::uint64_t>(global_epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    std::vector<EncodedRequest> batch;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      batch.clear();
      for (std::size_t r : rows) {
        batch.push_back(trainable ? encode_with_rows(train_set.requests[r], work)
                                  : encoded[r]);
      }
      const auto sub = labels.subset(rows);
      Gradients g;
      try {
        g = loss_gradients(batch, sub, params, cfg.objective, mode,
                           trainable ? &work : nullptr);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        throw Error(ErrorKind::numeric,
                    fmt::format("{} at epoch {} (batch starting {})", e.what(),
                                global_epoch, start));
      }
      epoch_loss += g.loss;
      adam_step(params, g, opt, trainable ? &work : nullptr);
    }
    if (trainable) encoded = encode_all_with_rows(train_set, work);
    return epoch_loss;
  };

  auto finish_epoch = [&](EpochLog entry, bool selectable) {
    if (!valid_set.requests.empty()) {
      const auto xs = encode_all(valid_set, work);
      entry.valid = evaluate_ranking(rankings_for(params, xs), valid_gold, cfg.recall_k);
      if (selectable && entry.valid->mrr > best_mrr) {
        best_mrr = entry.valid->mrr;
        model.params = params;
        if (trainable) model.table = work;
        model.best_epoch = entry.epoch;
      }
    }
    model.log.push_back(std::move(entry));
    ++global_epoch;
  };

  for (int e = 0; e < cfg.epochs_pn; ++e) {
    EpochLog entry;
    entry.epoch = global_epoch;
    entry.phase = "pn";
    entry.phase_epoch = e;
    entry.loss = run_epoch(pn_labels, LossMode::pn);
    finish_epoch(std::move(entry), !select_in_pu);
  }

  if (pu) {
    const PropagationConfig pcfg{cfg.mode == TrainMode::pu_nearest
                                     ? PropagationVariant::nearest
                                     : PropagationVariant::mean,
                                 n_cat};
    WeightedLabelMatrix labels;
    for (int e = 0; e < cfg.epochs_pu; ++e) {
      EpochLog entry;
      entry.epoch = global_epoch;
      entry.phase = "pu";
      entry.phase_epoch = e;
      if (e % cfg.repropagate_every == 0) {
        std::vector<Vector> xs;
        xs.reserve(encoded.size());
        for (const auto& enc : encoded) xs.push_back(enc.x);
        auto result = propagate(xs, given, pcfg);
        if (hook) hook(e, result);
        if (result.degenerate) {
          spdlog::warn("propagation degenerate at PU epoch {}; training continues", e);
        }
        entry.repropagated = true;
        entry.propagation_degenerate = result.degenerate;
        labels = std::move(result.labels);
      }
      entry.loss = run_epoch(labels, LossMode::pu);
      finish_epoch(std::move(entry), true);
    }
  }

  model.final_params = params;
  if (trainable) model.final_table = work;
  if (model.best_epoch < 0) {
    model.params = params;
    if (trainable) model.table = work;
    model.best_epoch = global_epoch - 1;
  }
  model.optimizer = std::move(opt);
  return model;
}

Prediction predict(const TrainedModel& model, const Request& r,
                   const EmbeddingTable& table) {
  const auto x = encode(r, model.table_or(table));
  Prediction p;
  p.scores = compute_scores(x, model.params);
  p.order = ranking_order(p.scores);
  return p;
}

std::vector<std::vector<int>> predict_rankings(const ModelParams& p, const Dataset& d,
                                               const EmbeddingTable& table) {
  return rankings_for(p, encode_all(d, table));
}

EvaluationReport evaluate_model(const TrainedModel& model, const Dataset& test,
                                const EmbeddingTable& table, int k) {
  if (static_cast<std::size_t>(test.category_count()) != model.params.categories) {
    throw Error(ErrorKind::dimension, "test corpus and model differ in category count");
  }
  EvaluationReport r;
  r.rankings = predict_rankings(model.params, test, model.table_or(table));
  const auto gold = test.gold_or_given();
  r.metrics = evaluate_ranking(r.rankings, gold, k);
  const auto given = test.given_categories();
  r.misclassification =
      misclassification_table(r.rankings, gold, given, test.category_count());
  return r;
}

nlohmann::json to_json(const EvaluationReport& r, bool include_rankings) {
  nlohmann::json j;
  j["metrics"] = to_json(r.metrics);
  auto mis = nlohmann::json::array();
  for (const auto& row : r.misclassification) {
    mis.push_back({{"category", row.category}, {"errors", row.errors}, {"total", row.total}});
  }
  j["misclassification"] = std::move(mis);
  if (include_rankings) j["rankings"] = r.rankings;
  return j;
}

PropagationResult propagate_with_model(const TrainedModel& model, const Dataset& d,
                                       const EmbeddingTable& table,
                                       PropagationVariant variant) {
  const auto xs = encode_all(d, model.table_or(table));
  return propagate(d, xs, PropagationConfig{variant, d.category_count()});
}

// --- trials ------------------------------------------------------------------

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  const auto ms = mean_std(values);
  s.mean = ms.mean;
  s.stddev = ms.stddev;
  s.values = std::move(values);
  return s;
}

PairedComparison paired_comparison(std::string metric, std::span<const double> a,
                                   std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::dimension, "paired comparison needs equal-length samples");
  }
  PairedComparison c;
  c.metric = std::move(metric);
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = b[t] - a[t];
    c.differences.push_back(d);
    if (d > 0.0) ++c.wins;
    else if (d < 0.0) ++c.losses;
    else ++c.ties;
  }
  const auto n = static_cast<double>(c.differences.size());
  if (c.differences.empty()) return c;
  c.mean_difference = std::accumulate(c.differences.begin(), c.differences.end(), 0.0) / n;
  if (c.differences.size() >= 2) {
    double ss = 0.0;
    for (double d : c.differences) ss += (d - c.mean_difference) * (d - c.mean_difference);
    c.stddev_difference = std::sqrt(ss / (n - 1.0));
    if (c.stddev_difference > 0.0) {
      c.t_statistic = c.mean_difference / (c.stddev_difference / std::sqrt(n));
    }
  }
  return c;
}

namespace {

TrialSummary summarize_trials(const TrainConfig& cfg,
                              std::vector<RankingMetrics> per_trial) {
  TrialSummary s;
  s.config = cfg;
  std::vector<double> acc, rec, mrr;
  for (const auto& m : per_trial) {
    acc.push_back(m.accuracy);
    rec.push_back(m.recall_at_k);
    mrr.push_back(m.mrr);
  }
  s.accuracy = summarize(std::move(acc));
  s.recall_at_k = summarize(std::move(rec));
  s.mrr = summarize(std::move(mrr));
  s.per_trial = std::move(per_trial);
  return s;
}

}  // namespace

TrialsReport run_trials(const TrialDataFactory& data, const TrainConfig& cfg_a,
                        const TrainConfig* cfg_b) {
  cfg_a.validate();
  if (cfg_b) cfg_b->validate();
  TrialsReport report;
  std::vector<RankingMetrics> per_a, per_b;
  for (int t = 0; t < cfg_a.trial_count; ++t) {
    const std::uint64_t seed = cfg_a.seed + static_cast<std::uint64_t>(t);
    report.seeds.push_back(seed);
    const TrialData d = data(seed);
    const auto gold = d.test.gold_or_given();

    TrainConfig a = cfg_a;
    a.seed = seed;
    const auto model_a = train(d.train, d.valid, d.table, a);
    const auto eval_a = evaluate_model(model_a, d.test, d.table, a.recall_k);
    per_a.push_back(eval_a.metrics);
    spdlog::info("trial {} seed {} [{}] accuracy {:.4f} mrr {:.4f}", t, seed,
                 to_string(a.mode), eval_a.metrics.accuracy, eval_a.metrics.mrr);

    if (cfg_b) {
      TrainConfig b = *cfg_b;
      b.seed = seed;
      const auto model_b = train(d.train, d.valid, d.table, b);
      const auto eval_b = evaluate_model(model_b, d.test, d.table, a.recall_k);
      per_b.push_back(eval_b.metrics);
      report.comparative_rank.push_back(
          comparative_rank_analysis(eval_a.rankings, eval_b.rankings, gold).percentage);
      spdlog::info("trial {} seed {} [{}] accuracy {:.4f} mrr {:.4f}", t, seed,
                   to_string(b.mode), eval_b.metrics.accuracy, eval_b.metrics.mrr);
    }
  }
  report.a = summarize_trials(cfg_a, std::move(per_a));
  if (cfg_b) {
    report.b = summarize_trials(*cfg_b, std::move(per_b));
    report.paired.push_back(paired_comparison("accuracy", report.a.accuracy.values,
                                              report.b->accuracy.values));
    report.paired.push_back(paired_comparison("recall_at_k", report.a.recall_at_k.values,
                                              report.b->recall_at_k.values));
    report.paired.push_back(
        paired_comparison("mrr", report.a.mrr.values, report.b->mrr.values));
  }
  return report;
}

TrialsReport run_trials(const TrialData& data, const TrainConfig& cfg_a,
                        const TrainConfig* cfg_b) {
  return run_trials([&data](std::uint64_t) { return data; }, cfg_a, cfg_b);
}

}  // namespace purank
