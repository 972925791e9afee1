#include "purank/eval.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "purank/error.hpp"

namespace purank {

namespace {

void check_ranking(std::span<const int> ranking, std::size_t categories,
                   std::size_t i) {
  if (ranking.size() != categories) {
    throw Error(ErrorKind::validation,
                fmt::format("ranking {} has {} entries, expected {}", i,
                            ranking.size(), categories));
  }
  std::vector<char> seen(categories, 0);
  for (int c : ranking) {
    if (c < 0 || static_cast<std::size_t>(c) >= categories || seen[c]) {
      throw Error(ErrorKind::validation,
                  fmt::format("ranking {} is not a permutation", i));
    }
    seen[c] = 1;
  }
}

// 1-based position of the best-ranked gold category.
std::size_t best_gold_rank(std::span<const int> ranking, std::span<const int> gold) {
  for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
    if (std::find(gold.begin(), gold.end(), ranking[pos]) != gold.end()) return pos + 1;
  }
  return 0;
}

bool contains(std::span<const int> set, int v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

}  // namespace

RankingMetrics evaluate_ranking(std::span<const std::vector<int>> rankings,
                                std::span<const std::vector<int>> gold, int k) {
  if (rankings.size() != gold.size()) {
    throw Error(ErrorKind::dimension, "rankings and gold sets differ in length");
  }
  if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
  RankingMetrics m;
  m.k = k;
  m.n = rankings.size();
  if (rankings.empty()) return m;

  const std::size_t categories = rankings.front().size();
  double hits1 = 0.0, hitsk = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    check_ranking(rankings[i], categories, i);
    if (gold[i].empty()) {
      throw Error(ErrorKind::validation, fmt::format("empty gold set for request {}", i));
    }
    const std::size_t r = best_gold_rank(rankings[i], gold[i]);
    if (r == 0) {
      throw Error(ErrorKind::validation,
                  fmt::format("gold set of request {} lies outside the ranking", i));
    }
    if (r == 1) hits1 += 1.0;
    if (r <= static_cast<std::size_t>(k)) hitsk += 1.0;
    rr += 1.0 / static_cast<double>(r);
  }
  const double n = static_cast<double>(m.n);
  m.accuracy = hits1 / n;
  m.recall_at_k = hitsk / n;
  m.mrr = rr / n;
  if (m.accuracy > m.recall_at_k) {
    throw std::logic_error("metric invariant violated: accuracy > recall@k");
  }
  return m;
}

std::vector<MisclassificationRow> misclassification_table(
    std::span<const std::vector<int>> rankings,
    std::span<const std::vector<int>> gold, std::span<const int> given,
    int categories) {
  if (rankings.size() != gold.size() || rankings.size() != given.size()) {
    throw Error(ErrorKind::dimension, "rankings, gold and given differ in length");
  }
  std::vector<MisclassificationRow> rows(categories);
  for (int c = 0; c < categories; ++c) rows[c].category = c;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (given[i] < 0 || given[i] >= categories) {
      throw Error(ErrorKind::validation, fmt::format("unknown category {}", given[i]));
    }
    auto& row = rows[given[i]];
    ++row.total;
    if (rankings[i].empty() || !contains(gold[i], rankings[i].front())) ++row.errors;
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MisclassificationRow& a, const MisclassificationRow& b) {
                     return a.errors > b.errors;
                   });
  return rows;
}

PropagationQuality propagation_quality(std::span<const std::vector<int>> propagated,
                                       std::span<const std::vector<int>> gold,
                                       std::span<const int> given,
                                       std::span<const Category> categories) {
  if (propagated.size() != gold.size() || propagated.size() != given.size()) {
    throw Error(ErrorKind::dimension, "propagated, gold and given differ in length");
  }
  PropagationQuality q;
  std::array<std::array<std::size_t, kFunctionCount>, kFunctionCount> fp{};
  for (std::size_t i = 0; i < propagated.size(); ++i) {
    const std::set<int> gold_set(gold[i].begin(), gold[i].end());
    for (int g : gold_set) {
      if (g != given[i]) ++q.gold_extra;
    }
    const auto origin = static_cast<std::size_t>(categories[given[i]].function);
    for (int c : std::set<int>(propagated[i].begin(), propagated[i].end())) {
      if (c == given[i]) continue;
      ++q.propagated;
      if (gold_set.count(c)) {
        ++q.correct;
      } else {
        ++q.false_positives;
        ++fp[origin][static_cast<std::size_t>(categories[c].function)];
      }
    }
  }
  if (q.propagated == 0) {
    q.precision_undefined = true;
    q.precision = 0.0;
  } else {
    q.precision = static_cast<double>(q.correct) / static_cast<double>(q.propagated);
  }
  if (q.gold_extra == 0) {
    q.recall_undefined = true;
    q.recall = 0.0;
  } else {
    q.recall = static_cast<double>(q.correct) / static_cast<double>(q.gold_extra);
  }
  q.f1 = (q.precision + q.recall) > 0.0
             ? 2.0 * q.precision * q.recall / (q.precision + q.recall)
             : 0.0;
  if (q.false_positives > 0) {
    for (std::size_t a = 0; a < kFunctionCount; ++a) {
      for (std::size_t b = 0; b < kFunctionCount; ++b) {
        q.false_positive_ratio[a][b] =
            static_cast<double>(fp[a][b]) / static_cast<double>(q.false_positives);
      }
    }
  }
  return q;
}

ComparativeRank comparative_rank_analysis(std::span<const std::vector<int>> rankings_a,
                                          std::span<const std::vector<int>> rankings_b,
                                          std::span<const std::vector<int>> gold) {
  if (rankings_a.size() != rankings_b.size() || rankings_a.size() != gold.size()) {
    throw Error(ErrorKind::dimension, "both rankings must cover the same requests");
  }
  ComparativeRank out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& a = rankings_a[i];
    const auto& b = rankings_b[i];
    if (a.empty() || b.empty()) continue;
    if (contains(gold[i], a.front())) continue;
    const std::size_t upto = std::min<std::size_t>(5, a.size());
    bool a_hits_later = false;
    for (std::size_t pos = 1; pos < upto; ++pos) {
      a_hits_later = a_hits_later || contains(gold[i], a[pos]);
    }
    if (!a_hits_later || !contains(gold[i], b.front())) continue;
    ++out.conditioned;
    for (std::size_t pos = 1; pos < upto; ++pos) {
      if (a[pos] == b.front()) {
        ++out.satisfied;
        break;
      }
    }
  }
  if (out.conditioned > 0) {
    out.percentage = 100.0 * static_cast<double>(out.satisfied) /
                     static_cast<double>(out.conditioned);
  }
  return out;
}

// --- serialisation -----------------------------------------------------------

nlohmann::json to_json(const RankingMetrics& m) {
  return {{"accuracy", m.accuracy},
          {"recall_at_k", m.recall_at_k},
          {"k", m.k},
          {"mrr", m.mrr},
          {"n", m.n}};
}

nlohmann::json to_json(const PropagationQuality& q) {
  nlohmann::json fp = nlohmann::json::object();
  for (std::size_t a = 0; a < kFunctionCount; ++a) {
    for (std::size_t b = 0; b < kFunctionCount; ++b) {
      fp[std::string(to_string(static_cast<Function>(a)))]
        [std::string(to_string(static_cast<Function>(b)))] = q.false_positive_ratio[a][b];
    }
  }
  return {{"precision", q.precision},
          {"recall", q.recall},
          {"f1", q.f1},
          {"precision_undefined", q.precision_undefined},
          {"recall_undefined", q.recall_undefined},
          {"propagated", q.propagated},
          {"correct", q.correct},
          {"gold_extra", q.gold_extra},
          {"false_positives", q.false_positives},
          {"false_positive_ratio", fp}};
}

nlohmann::json to_json(const ComparativeRank& c) {
  return {{"percentage", c.percentage ? nlohmann::json(*c.percentage) : nlohmann::json()},
          {"conditioned", c.conditioned},
          {"satisfied", c.satisfied}};
}

std::string format_classification_table(
    std::span<const std::pair<std::string, RankingMetrics>> rows) {
  const int k = rows.empty() ? 5 : rows.front().second.k;
  std::string out = fmt::format("{:<24} | {:>8} | {:>8} | {:>7}\n", "Model", "Acc. (%)",
                                fmt::format("R@{} (%)", k), "MRR");
  out += std::string(56, '-') + '\n';
  for (const auto& [name, m] : rows) {
    out += fmt::format("{:<24} | {:>8.2f} | {:>8.2f} | {:>7.4f}\n", name,
                       100.0 * m.accuracy, 100.0 * m.recall_at_k, m.mrr);
  }
  return out;
}

std::string format_misclassification_table(std::span<const MisclassificationRow> rows,
                                           std::span<const Category> categories,
                                           std::size_t limit) {
  std::string out = fmt::format("{:>4} | {:<28} | {:>16}\n", "Rank", "Category",
                                "# Misclassified");
  out += std::string(54, '-') + '\n';
  for (std::size_t r = 0; r < rows.size() && r < limit; ++r) {
    const auto& row = rows[r];
    const std::string name = static_cast<std::size_t>(row.category) < categories.size()
                                 ? categories[row.category].name
                                 : std::to_string(row.category);
    out += fmt::format("{:>4} | {:<28} | {:>7} / {:<6}\n", r + 1, name, row.errors,
                       row.total);
  }
  return out;
}

std::string format_propagation_table(const PropagationQuality& q) {
  std::string out = fmt::format("{:>9} | {:>9} | {:>7}\n", "Pre. (%)", "Rec. (%)", "F1");
  out += std::string(31, '-') + '\n';
  out += fmt::format("{:>9} | {:>9} | {:>7.4f}\n",
                     q.precision_undefined ? std::string("n/a")
                                           : fmt::format("{:.2f}", 100.0 * q.precision),
                     q.recall_undefined ? std::string("n/a")
                                        : fmt::format("{:.2f}", 100.0 * q.recall),
                     q.f1);
  out += fmt::format("propagated {}, correct {}, gold extra {}\n", q.propagated,
                     q.correct, q.gold_extra);
  return out;
}

std::string format_false_positive_table(const PropagationQuality& q) {
  std::string out = fmt::format("{:<18} | {:<18} | {:>9}\n", "Original", "Propagated",
                                "Ratio (%)");
  out += std::string(51, '-') + '\n';
  for (std::size_t a = 0; a < kFunctionCount; ++a) {
    for (std::size_t b = 0; b < kFunctionCount; ++b) {
      out += fmt::format("{:<18} | {:<18} | {:>9.2f}\n",
                         b == 0 ? to_string(static_cast<Function>(a)) : "",
                         to_string(static_cast<Function>(b)),
                         100.0 * q.false_positive_ratio[a][b]);
    }
  }
  return out;
}

}  // namespace purank
