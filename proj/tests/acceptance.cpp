// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "purank/corpus.hpp"
#include "purank/eval.hpp"
#include "purank/objective.hpp"
#include "purank/pipeline.hpp"
#include "purank/propagation.hpp"
#include "purank/synthetic.hpp"

using namespace purank;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::vector<std::string> failures;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (failures.size() < 10) failures.push_back(what);
    }
  }
};

// Every metric block seen anywhere in the run passes through here.
std::size_t g_evaluations = 0;
bool g_identity_ok = true;
void observe(const RankingMetrics& m) {
  ++g_evaluations;
  if (m.accuracy > m.recall_at_k) g_identity_ok = false;
}

Check closed_forms() {
  Check c;
  const auto t0 = Clock::now();
  auto near = [&](double a, double b, const char* what) {
    c.expect(std::abs(a - b) <= 1e-9, what);
  };
  near(ramp_loss(2.0, -0.8), 0.0, "ramp(2)");
  near(ramp_loss(0.5, -0.8), 0.5, "ramp(0.5)");
  near(ramp_loss(-2.0, -0.8), 1.8, "ramp(-2)");
  for (double t = -3.0; t <= 3.0; t += 0.125) near(ramp_loss(t, -0.8), oracle::ramp(t, -0.8), "ramp grid");
  near(rank_weight(1), 1.0, "L(1)");
  near(rank_weight(2), 1.5, "L(2)");
  near(rank_weight(4), 25.0 / 12.0, "L(4)");
  for (int r = 1; r <= 100; ++r) near(rank_weight(r), oracle::harmonic(r), "L(r)");
  near(similarity_from_distance(0.0, 1.3, 70), 1.0, "sim(0)");
  near(similarity_from_distance(2.0, 2.0, 70), std::exp(-70.0 / 69.0), "sim(d = mean)");
  near(similarity_from_distance(1.0, 2.0, 70), std::exp(-35.0 / 69.0), "sim(d = mean / 2)");

  ScoreMap m(1, 3);
  m.values = {0.2, 0.5, 0.8};
  m.present = {1, 1, 1};
  auto s = scale_scores(m);
  near(s.scores.values[0], -1.0, "scale lo");
  near(s.scores.values[1], 0.0, "scale mid");
  near(s.scores.values[2], 1.0, "scale hi");
  m.values = {0.0, 0.25, 1.0};
  s = scale_scores(m);
  near(s.scores.values[1], -0.5, "scale quarter");
  m.values = {0.4, 0.4, 0.4};
  s = scale_scores(m);
  c.expect(s.degenerate && s.scores.values == std::vector<double>{0, 0, 0}, "scale constant");

  near(fleiss_kappa(std::vector<VoteRecord>{{"a", 0, 3}, {"b", 0, 0}}, 3), 1.0, "kappa agree");
  near(fleiss_kappa(std::vector<VoteRecord>{{"a", 0, 2}, {"b", 0, 1}}, 3), -1.0 / 3.0,
       "kappa split");
  std::mt19937_64 rng(1);
  for (int it = 0; it < 200; ++it) {
    const int n = 2 + static_cast<int>(rng() % 5), items = 2 + static_cast<int>(rng() % 8);
    const int classes = 2 + static_cast<int>(rng() % 3);
    std::vector<std::vector<int>> counts(static_cast<std::size_t>(items),
                                         std::vector<int>(static_cast<std::size_t>(classes)));
    for (auto& row : counts) {
      for (int r = 0; r < n; ++r) ++row[rng() % static_cast<std::size_t>(classes)];
    }
    near(fleiss_kappa(counts), oracle::fleiss_by_pairs(counts), "kappa oracle");
  }
  const double secs = seconds_since(t0);
  std::printf("  runtime %.3f s\n", secs);
  c.expect(secs < 1.0, "runtime >= 1 s");
  return c;
}

std::vector<gen::LossInstance> loss_instances() {
  std::mt19937_64 rng(2024);
  std::vector<gen::LossInstance> out;
  for (int it = 0; it < 150; ++it) out.push_back(gen::loss_instance(rng));
  return out;
}

Check loss_oracle(const std::vector<gen::LossInstance>& insts) {
  Check c;
  double worst = 0.0;
  for (const auto& inst : insts) {
    const oracle::Matrix xs(inst.xs.begin(), inst.xs.end());
    const auto w = inst.w();
    const double pn = pn_loss(inst.xs, inst.given, inst.params, inst.cfg);
    const double pn_ref = oracle::ranked_loss(
        xs, gen::oracle_pn_labels(inst.given, inst.params.categories), w, inst.cfg.margin,
        inst.cfg.kappa, false);
    const double pu = pu_loss(inst.xs, inst.pu, inst.params, inst.cfg);
    const double pu_ref = oracle::ranked_loss(xs, gen::oracle_labels(inst.pu), w,
                                              inst.cfg.margin, inst.cfg.kappa, true);
    for (auto [a, b] : {std::pair{pn, pn_ref}, std::pair{pu, pu_ref}}) {
      const double rel = std::abs(a - b) / std::max(1.0, std::abs(b));
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-12, "loss differs from the triple-loop evaluator");
    }
  }
  std::printf("  %zu instances, worst relative error %.3g\n", insts.size(), worst);
  return c;
}

Check reduction(const std::vector<gen::LossInstance>& insts) {
  Check c;
  double worst = 0.0;
  for (const auto& inst : insts) {
    const auto unit = WeightedLabelMatrix::from_given(inst.given, inst.params.categories);
    const double a = pu_loss(inst.xs, unit, inst.params, inst.cfg);
    const double b = pn_loss(inst.xs, inst.given, inst.params, inst.cfg);
    worst = std::max(worst, std::abs(a - b));
    c.expect(std::abs(a - b) <= 1e-12, "pu with unit weights differs from pn");
  }
  std::printf("  %zu instances, worst absolute difference %.3g\n", insts.size(), worst);
  return c;
}

Check gradients() {
  Check c;
  const double h = 1e-5;
  std::mt19937_64 rng(77);
  int frozen = 0, trainable = 0;
  double worst = 0.0;
  for (int it = 0; it < 5000 && (frozen < 50 || trainable < 50); ++it) {
    auto inst = gen::loss_instance(rng);
    const bool use_tokens = trainable < 50 && (frozen >= 50 || it % 2 == 1);
    gen::TokenBatch tb;
    std::vector<EncodedRequest> batch;
    std::vector<Vector> xs;
    if (use_tokens) {
      tb = gen::token_batch(rng, inst.params.dim, inst.xs.size());
      for (const auto& r : tb.requests) batch.push_back(encode_with_rows(r, tb.table));
    } else {
      for (const auto& x : inst.xs) batch.push_back({x, {}});
    }
    for (const auto& b : batch) xs.push_back(b.x);
    const auto pn_labels = WeightedLabelMatrix::from_given(inst.given, inst.params.categories);
    if (!gen::smooth(xs, pn_labels, inst.params, inst.cfg.margin, 1e-3) ||
        !gen::smooth(xs, inst.pu, inst.params, inst.cfg.margin, 1e-3)) {
      continue;
    }
    // Saturated points (gradient exactly zero) are checked in absolute terms
    // and not counted.
    bool flat = false;
    for (auto mode : {LossMode::pn, LossMode::pu}) {
      const auto& labels = mode == LossMode::pn ? pn_labels : inst.pu;
      const auto g = loss_gradients(batch, labels, inst.params, inst.cfg, mode,
                                    use_tokens ? &tb.table : nullptr);
      ModelParams probe = inst.params;
      const auto fdw = oracle::central_difference(
          [&] { return ranked_ramp_loss(xs, labels, probe, inst.cfg, mode); }, probe.weights, h);
      const bool saturated = oracle::all_zero(g.weights);
      flat = flat || saturated;
      double err = saturated ? oracle::max_abs(fdw) : oracle::relative_error(g.weights, fdw);
      if (use_tokens) {
        EmbeddingTable t = tb.table;
        std::vector<double> values(t.data().begin(), t.data().end());
        const auto fde = oracle::central_difference(
            [&] {
              std::copy(values.begin(), values.end(), t.data().begin());
              std::vector<Vector> enc;
              for (const auto& r : tb.requests) enc.push_back(encode(r, t));
              return ranked_ramp_loss(enc, labels, inst.params, inst.cfg, mode);
            },
            values, h);
        err = std::max(err, saturated ? oracle::max_abs(fde)
                                      : oracle::relative_error(g.embeddings, fde));
      }
      worst = std::max(worst, err);
      c.expect(err <= 1e-4, "gradient differs from central differences");
    }
    if (!flat) ++(use_tokens ? trainable : frozen);
  }
  std::printf("  points per mode: frozen %d, trainable %d; worst relative error %.3g\n", frozen,
              trainable, worst);
  c.expect(frozen >= 50 && trainable >= 50, "fewer than 50 smooth points");
  return c;
}

Check propagation_fixture() {
  Check c;
  const std::vector<Vector> xs{{0.0}, {2.0}, {4.0}};
  const std::vector<int> given{0, 0, 1};
  const auto r = propagate(xs, given, {PropagationVariant::mean, 2});
  const double s01 = std::exp(-(4.0 / 3.0) * 2.0), s11 = std::exp(-(2.0 / 3.0) * 2.0),
               s20 = std::exp(-2.0);
  const double mid = -1.0 + 2.0 * (s20 - s01) / (s11 - s01);
  c.expect(r.mean_distance == 3.0, "mean distance");
  c.expect(std::abs(r.raw.at(0, 1) - s01) <= 1e-15 && std::abs(r.raw.at(1, 1) - s11) <= 1e-15 &&
               std::abs(r.raw.at(2, 0) - s20) <= 1e-15,
           "raw similarities");
  c.expect(r.scaled.at(0, 1) == -1.0 && r.scaled.at(1, 1) == 1.0 &&
               std::abs(r.scaled.at(2, 0) - mid) <= 1e-15,
           "scaled scores");
  c.expect(!r.labels.positive(0, 1) && r.labels.weight(0, 1) == 1.0 && r.labels.positive(1, 1) &&
               r.labels.weight(1, 1) == 1.0 && !r.labels.positive(2, 0) &&
               std::abs(r.labels.weight(2, 0) + mid) <= 1e-15,
           "labels");
  c.expect(r.propagated_positives() == std::vector<std::vector<int>>{{}, {1}, {}},
           "propagated positives");
  const auto again = propagate(xs, given, {PropagationVariant::mean, 2});
  c.expect(again.raw == r.raw && again.labels == r.labels, "determinism");

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int it = 0; it < 100; ++it) {
    const int cats = 2 + static_cast<int>(rng() % 10);
    std::vector<Vector> ys;
    std::vector<int> g;
    for (int j = 0; j < cats; ++j) {
      ys.push_back({normal(rng), normal(rng), normal(rng)});
      g.push_back(j);
    }
    const auto a = propagate(ys, g, {PropagationVariant::mean, cats});
    const auto b = propagate(ys, g, {PropagationVariant::nearest, cats});
    c.expect(a.raw == b.raw && a.scaled == b.scaled && a.labels == b.labels,
             "nearest and mean differ on singleton categories");
  }
  return c;
}

TrialData trial_data(std::uint64_t seed) {
  SynthConfig sc;
  sc.seed = seed;
  auto s = generate_synthetic(sc);
  return {std::move(s.train), std::move(s.valid), std::move(s.test), std::move(s.table)};
}

Check replication() {
  Check c;
  const auto t0 = Clock::now();
  TrainConfig pn;
  pn.mode = TrainMode::pn;
  pn.epochs_pn = 60;
  pn.epochs_pu = 0;
  pn.trial_count = 10;
  pn.seed = 0;
  TrainConfig pu = pn;
  pu.mode = TrainMode::pu_mean;
  pu.epochs_pn = 10;
  pu.epochs_pu = 50;

  {
    const auto probe = generate_synthetic(SynthConfig{});
    double gold = 0.0;
    for (const auto& r : probe.test.requests) gold += static_cast<double>(r.gold_categories->size());
    std::printf("  corpus: C = %d, train %zu, test %zu, mean test gold-set size %.2f\n",
                probe.train.category_count(), probe.train.requests.size(),
                probe.test.requests.size(), gold / static_cast<double>(probe.test.requests.size()));
  }

  const auto report = run_trials(trial_data, pn, &pu);
  for (const auto& m : report.a.per_trial) observe(m);
  for (const auto& m : report.b->per_trial) observe(m);
  std::printf("%s", format_trials_table(report).c_str());
  const auto& acc = report.paired.front();
  c.expect(acc.metric == "accuracy", "first paired metric is accuracy");
  std::printf("  accuracy pn %.4f, pu_mean %.4f; wins %d, losses %d, ties %d\n",
              report.a.accuracy.mean, report.b->accuracy.mean, acc.wins, acc.losses, acc.ties);
  c.expect(report.b->accuracy.mean > report.a.accuracy.mean, "pu_mean mean accuracy not above pn");
  c.expect(acc.wins >= 7, "fewer than 7 per-seed wins");
  const double secs = seconds_since(t0);
  std::printf("  runtime %.1f s\n", secs);
  c.expect(secs < 600.0, "runtime above 10 minutes");
  return c;
}

Check propagation_precision() {
  Check c;
  std::size_t propagated = 0, correct = 0, extra = 0, pairs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig sc;
    sc.seed = seed;
    const auto s = generate_synthetic(sc);
    const auto given = s.train.given_categories();
    const auto r = propagate(s.train, encode_all(s.train, s.table),
                             {PropagationVariant::mean, s.train.category_count()});
    const auto prop = r.propagated_positives();
    const auto q = propagation_quality(prop, s.train_gold, given, s.train.categories);
    const auto ref = oracle::propagation_pr(prop, s.train_gold, given);
    c.expect(q.correct == ref.correct && q.propagated == ref.propagated, "oracle mismatch");
    propagated += q.propagated;
    correct += q.correct;
    extra += q.gold_extra;
    pairs += given.size() * static_cast<std::size_t>(s.train.category_count() - 1);
    if (seed == 0) {
      std::printf("%s", format_propagation_table(q).c_str());
      std::printf("%s", format_false_positive_table(q).c_str());
    }
  }
  const double precision = propagated ? static_cast<double>(correct) / static_cast<double>(propagated) : 0.0;
  const double recall = extra ? static_cast<double>(correct) / static_cast<double>(extra) : 0.0;
  const double density = static_cast<double>(extra) / static_cast<double>(pairs);
  std::printf("  pooled over 10 seeds: propagated %zu, correct %zu, gold extra %zu\n", propagated,
              correct, extra);
  std::printf("  precision %.4f  recall %.4f  baseline density %.4f  ratio %.2f\n", precision,
              recall, density, precision / density);
  c.expect(propagated > 0, "nothing propagated");
  c.expect(precision >= 2.0 * density, "precision below twice the baseline");
  return c;
}

Check metric_identities() {
  Check c;
  std::size_t fixtures = 0;
  for (int cats = 1; cats <= 6; ++cats) {
    // Every gold set (non-empty subset) against every permutation.
    for (int mask = 1; mask < (1 << cats); ++mask) {
      std::vector<int> gold;
      for (int j = 0; j < cats; ++j) {
        if (mask & (1 << j)) gold.push_back(j);
      }
      std::vector<int> perm(static_cast<std::size_t>(cats));
      std::iota(perm.begin(), perm.end(), 0);
      std::vector<std::vector<int>> rankings, golds;
      do {
        rankings.push_back(perm);
        golds.push_back(gold);
      } while (std::next_permutation(perm.begin(), perm.end()));
      for (int k = 1; k <= cats; ++k) {
        for (std::size_t i = 0; i < rankings.size(); ++i) {
          const auto m = evaluate_ranking(std::span(&rankings[i], 1), std::span(&golds[i], 1), k);
          const auto ref = oracle::metrics({rankings[i]}, {golds[i]}, k);
          observe(m);
          c.expect(m.accuracy == ref.accuracy && m.recall_at_k == ref.recall &&
                       m.mrr == ref.mrr,
                   "single-ranking metric mismatch");
          ++fixtures;
        }
        const auto all = evaluate_ranking(rankings, golds, k);
        const auto ref = oracle::metrics(rankings, golds, k);
        observe(all);
        c.expect(all.accuracy == ref.accuracy && all.recall_at_k == ref.recall &&
                     std::abs(all.mrr - ref.mrr) <= 1e-15,
                 "aggregate metric mismatch");
      }
    }
  }
  std::printf("  %zu exhaustive fixtures; %zu evaluations observed, accuracy <= R@k on all: %s\n",
              fixtures, g_evaluations, g_identity_ok ? "yes" : "no");
  c.expect(g_identity_ok, "accuracy above R@k in an emitted evaluation");
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Check corpus_round_trip() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / "purank_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SynthConfig sc;
  sc.seed = 3;
  const auto s = generate_synthetic(sc);
  write_categories(s.train.categories, dir / "categories.json");
  for (const auto* d : {&s.train, &s.valid, &s.test}) {
    const auto name = std::string(to_string(d->split)) + ".jsonl";
    write_corpus(*d, dir / name);
    const auto back = load_corpus(dir / name, dir / "categories.json", d->split);
    c.expect(back.requests == d->requests, "requests differ after load: " + name);
    write_corpus(back, dir / ("again_" + name));
    c.expect(slurp(dir / name) == slurp(dir / ("again_" + name)), "bytes differ: " + name);
  }
  write_embeddings(s.table, dir / "emb.txt");
  const auto table = load_embeddings(dir / "emb.txt");
  c.expect(table == s.table, "embedding table differs after load");
  fs::remove_all(dir);

  for (int per : {10, 20, 50}) {
    Dataset d;
    d.categories = s.train.categories;
    for (int j = 0; j < d.category_count(); ++j) {
      for (int k = 0; k < per; ++k) {
        d.requests.push_back({fmt::format("r{}-{}", j, k), {"t"}, j, std::nullopt});
      }
    }
    const auto parts = split_dataset(d, {0.8, 0.1, 0.1}, 7);
    for (int j = 0; j < d.category_count(); ++j) {
      std::array<int, 3> n{};
      for (int p = 0; p < 3; ++p) {
        for (const auto& r : parts[static_cast<std::size_t>(p)].requests) n[p] += r.given_category == j;
      }
      c.expect(n[0] == per * 8 / 10 && n[1] == per / 10 && n[2] == per / 10,
               "stratified counts are not exact");
    }
  }
  std::printf("  released corpus not supplied; the corpus-count check is not applicable\n");
  return c;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const auto insts = loss_instances();
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria{
      {"closed-form unit suite", closed_forms},
      {"loss oracle equivalence", [&] { return loss_oracle(insts); }},
      {"pu/pn reduction", [&] { return reduction(insts); }},
      {"gradient checks", gradients},
      {"propagation determinism and correctness", propagation_fixture},
      {"scaled-down replication: pu_mean beats pn", replication},
      {"propagation precision", propagation_precision},
      {"metric identities", metric_identities},
      {"corpus round trip", corpus_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::printf("[%zu] %s\n", i + 1, criteria[i].name);
    Check c;
    try {
      c = criteria[i].run();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    for (const auto& f : c.failures) std::printf("  failure: %s\n", f.c_str());
    std::printf("%s %zu %s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].name);
    std::fflush(stdout);
    failed += c.ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
