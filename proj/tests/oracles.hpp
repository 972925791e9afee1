// Reference implementations used to check the library. Written directly from
// the definitions, deliberately naive, and sharing no code with src/.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}

// Clipped hinge evaluated by cases.
inline double ramp(double t, double m) {
  if (t >= 1.0) return 0.0;
  if (t <= m) return 1.0 - m;
  return 1.0 - t;
}

inline double harmonic(int r) {
  double s = 0.0;
  for (int j = r; j >= 1; --j) s += 1.0 / j;  // summed in the other direction
  return s;
}

// Position (1-based) of category j when sorted by score, higher first, ties
// to the lower id. Counts the categories that beat j.
inline int rank_of(const std::vector<double>& scores, std::size_t j) {
  int r = 1;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (k == j) continue;
    if (scores[k] > scores[j] || (scores[k] == scores[j] && k < j)) ++r;
  }
  return r;
}

// One (request, category) label: sign and magnitude.
struct Label {
  bool positive = false;
  double weight = 1.0;
};

// Triple-loop evaluation of the ranked ramp objective. With `weighted` false
// every weight is 1 (the PN form).
inline double ranked_loss(const Matrix& xs, const std::vector<std::vector<Label>>& labels,
                          const Matrix& w, double m, double kappa, bool weighted) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> s(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) s[j] = dot(w[j], xs[i]);
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (!labels[i][j].positive) continue;
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (labels[i][k].positive) continue;
        const double a = weighted ? labels[i][j].weight * labels[i][k].weight : 1.0;
        total += a * harmonic(rank_of(s, j)) * ramp(s[j] - s[k], m);
      }
    }
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double y = labels[i][j].positive ? 1.0 : -1.0;
      const double a = weighted ? labels[i][j].weight : 1.0;
      total += kappa * a * ramp(y * s[j], m);
    }
  }
  return total;
}

// Fleiss' kappa by explicit pair enumeration: every item's ratings are
// expanded to a list and all ordered pairs of distinct raters are compared.
inline double fleiss_by_pairs(const std::vector<std::vector<int>>& counts) {
  const std::size_t classes = counts.front().size();
  std::vector<double> class_total(classes, 0.0);
  double all = 0.0;
  double agreement_sum = 0.0;
  for (const auto& item : counts) {
    std::vector<int> ratings;
    for (std::size_t c = 0; c < classes; ++c) {
      for (int q = 0; q < item[c]; ++q) ratings.push_back(static_cast<int>(c));
      class_total[c] += item[c];
      all += item[c];
    }
    double agree = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < ratings.size(); ++a) {
      for (std::size_t b = 0; b < ratings.size(); ++b) {
        if (a == b) continue;
        pairs += 1.0;
        if (ratings[a] == ratings[b]) agree += 1.0;
      }
    }
    agreement_sum += agree / pairs;
  }
  const double p_bar = agreement_sum / static_cast<double>(counts.size());
  double p_e = 0.0;
  for (double t : class_total) p_e += (t / all) * (t / all);
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

struct Metrics {
  double accuracy = 0.0, recall = 0.0, mrr = 0.0;
};

// Scans every position of every ranking.
inline Metrics metrics(const std::vector<std::vector<int>>& rankings,
                       const std::vector<std::vector<int>>& gold, int k) {
  Metrics out;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    std::size_t best = rankings[i].size() + 1;
    for (std::size_t pos = 0; pos < rankings[i].size(); ++pos) {
      for (int g : gold[i]) {
        if (rankings[i][pos] == g) best = std::min(best, pos + 1);
      }
    }
    if (best == 1) out.accuracy += 1.0;
    if (best <= static_cast<std::size_t>(k)) out.recall += 1.0;
    out.mrr += 1.0 / static_cast<double>(best);
  }
  const double n = static_cast<double>(rankings.size());
  out.accuracy /= n;
  out.recall /= n;
  out.mrr /= n;
  return out;
}

struct PrecisionRecall {
  double precision = 0.0, recall = 0.0;
  std::size_t propagated = 0, correct = 0, extra = 0;
};

// Set algebra over (request, category) pairs.
inline PrecisionRecall propagation_pr(const std::vector<std::vector<int>>& propagated,
                                      const std::vector<std::vector<int>>& gold,
                                      const std::vector<int>& given) {
  std::set<std::pair<std::size_t, int>> prop, extra;
  for (std::size_t i = 0; i < propagated.size(); ++i) {
    for (int c : propagated[i]) prop.insert({i, c});
    for (int c : gold[i]) {
      if (c != given[i]) extra.insert({i, c});
    }
  }
  std::vector<std::pair<std::size_t, int>> both;
  std::set_intersection(prop.begin(), prop.end(), extra.begin(), extra.end(),
                        std::back_inserter(both));
  PrecisionRecall out;
  out.propagated = prop.size();
  out.extra = extra.size();
  out.correct = both.size();
  out.precision = prop.empty() ? 0.0 : double(both.size()) / double(prop.size());
  out.recall = extra.empty() ? 0.0 : double(both.size()) / double(extra.size());
  return out;
}

// Central finite difference of f with respect to every entry of x.
inline std::vector<double> central_difference(const std::function<double()>& f,
                                              std::vector<double>& x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = f();
    x[k] = keep - h;
    const double down = f();
    x[k] = keep;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline bool all_zero(const std::vector<double>& a) {
  for (double v : a) {
    if (v != 0.0) return false;
  }
  return true;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace oracle
