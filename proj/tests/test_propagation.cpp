#include <doctest.h>

#include <cmath>
#include <random>

#include "purank/error.hpp"
#include "purank/propagation.hpp"

using namespace purank;

namespace {

// Requests at 0 and 2 (category 0) and at 4 (category 1), on a line.
const std::vector<Vector> kLine{{0.0}, {2.0}, {4.0}};
const std::vector<int> kLineGiven{0, 0, 1};

ScoreMap map_of(std::initializer_list<double> values) {
  ScoreMap m(1, values.size());
  std::size_t k = 0;
  for (double v : values) {
    m.values[k] = v;
    m.present[k] = 1;
    ++k;
  }
  return m;
}

}  // namespace

TEST_CASE("similarity closed forms") {
  CHECK(similarity_from_distance(0.0, 1.3, 70) == 1.0);
  CHECK(std::abs(similarity_from_distance(2.0, 2.0, 70) - std::exp(-70.0 / 69.0)) <= 1e-12);
  CHECK(std::abs(similarity_from_distance(2.0, 2.0, 70) - 0.3625863) <= 1e-7);
  CHECK(std::abs(similarity_from_distance(1.0, 2.0, 70) - std::exp(-35.0 / 69.0)) <= 1e-12);
  CHECK(std::abs(similarity_from_distance(1.0, 2.0, 70) - 0.6021514) <= 1e-7);
  CHECK_THROWS_AS(similarity_from_distance(1.0, 0.0, 70), Error);
  CHECK_THROWS_AS(similarity_from_distance(1.0, -1.0, 70), Error);
  const Vector a{0.0, 0.0}, b{3.0, 4.0};
  CHECK(std::abs(similarity(a, b, 5.0, 2) - std::exp(-2.0)) <= 1e-12);
}

TEST_CASE("similarity is strictly decreasing in distance") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  for (int it = 0; it < 1000; ++it) {
    const double a = d(rng), b = d(rng);
    if (a == b) continue;
    const double sa = similarity_from_distance(a, 2.5, 20);
    const double sb = similarity_from_distance(b, 2.5, 20);
    CHECK((a < b) == (sa > sb));
    CHECK(sa > 0.0);
    CHECK(sa <= 1.0);
  }
}

TEST_CASE("scale scores fixtures") {
  auto s = scale_scores(map_of({0.2, 0.5, 0.8}));
  CHECK_FALSE(s.degenerate);
  CHECK(std::abs(s.scores.values[0] + 1.0) <= 1e-12);
  CHECK(std::abs(s.scores.values[1]) <= 1e-12);
  CHECK(std::abs(s.scores.values[2] - 1.0) <= 1e-12);

  s = scale_scores(map_of({0.0, 0.25, 1.0}));
  CHECK(std::abs(s.scores.values[0] + 1.0) <= 1e-12);
  CHECK(std::abs(s.scores.values[1] + 0.5) <= 1e-12);
  CHECK(std::abs(s.scores.values[2] - 1.0) <= 1e-12);

  s = scale_scores(map_of({0.4, 0.4, 0.4}));
  CHECK(s.degenerate);
  CHECK(s.scores.values == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("scaled scores span exactly [-1, 1]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n(2, 30);
  for (int it = 0; it < 200; ++it) {
    ScoreMap m(1, static_cast<std::size_t>(n(rng)));
    for (std::size_t k = 0; k < m.categories; ++k) {
      m.values[k] = u(rng);
      m.present[k] = u(rng) < 0.8 || k < 2;
    }
    const auto s = scale_scores(m);
    if (s.degenerate) continue;
    double lo = 2, hi = -2;
    for (std::size_t k = 0; k < m.categories; ++k) {
      if (!m.present[k]) continue;
      lo = std::min(lo, s.scores.values[k]);
      hi = std::max(hi, s.scores.values[k]);
    }
    CHECK(lo == -1.0);
    CHECK(hi == 1.0);
  }
}

TEST_CASE("label assignment rules") {
  ScoreMap m = ScoreMap::excluding_given(std::vector<int>{0}, 4);
  m.at(0, 1) = 0.7;
  m.at(0, 2) = -0.3;
  m.at(0, 3) = 0.0;
  const auto labels = assign_labels(m, std::vector<int>{0});
  CHECK(labels.positive(0, 0));
  CHECK(labels.weight(0, 0) == 1.0);
  CHECK(labels.positive(0, 1));
  CHECK(labels.weight(0, 1) == 0.7);
  CHECK_FALSE(labels.positive(0, 2));
  CHECK(labels.weight(0, 2) == 0.3);
  CHECK(labels.positive(0, 3));
  CHECK(labels.weight(0, 3) == 0.0);
}

TEST_CASE("representatives") {
  const std::vector<Vector> xs{{0.0, 0.0}, {2.0, 2.0}, {5.0, -1.0}};
  const std::vector<int> given{0, 0, 1};
  const auto mean = category_representatives(xs, given, 2, PropagationVariant::mean);
  CHECK(mean.means[0] == Vector{1.0, 1.0});
  CHECK(mean.means[1] == Vector{5.0, -1.0});
  const auto nearest = category_representatives(xs, given, 2, PropagationVariant::nearest);
  CHECK(nearest.members[0] == std::vector<std::size_t>{0, 1});
  CHECK(nearest.members[1] == std::vector<std::size_t>{2});

  const std::vector<Vector> copies(4, Vector{0.3, -0.7});
  const auto same = category_representatives(copies, std::vector<int>{1, 1, 0, 0}, 2,
                                             PropagationVariant::mean);
  CHECK(std::abs(same.means[0][0] - 0.3) <= 1e-15);
  CHECK(std::abs(same.means[1][1] + 0.7) <= 1e-15);

  CHECK_THROWS_AS(category_representatives(xs, given, 3, PropagationVariant::mean), Error);
}

TEST_CASE("mean distance enumerates every foreign pair") {
  const std::vector<Vector> xs{{0.0}, {3.0}};
  const std::vector<int> given{0, 1};
  const std::vector<Vector> xs3{{0.0}, {1.0}, {3.0}};
  const std::vector<int> given3{0, 1, 2};
  const auto reps = category_representatives(xs3, given3, 3, PropagationVariant::mean);
  // Foreign distances: r0 -> 1, 3; r1 -> 1, 2; r2 -> 3, 2.
  CHECK(std::abs(mean_distance(xs3, given3, reps) - 12.0 / 6.0) <= 1e-15);
  const auto reps2 = category_representatives(xs, given, 2, PropagationVariant::nearest);
  CHECK(mean_distance(xs, given, reps2) == 3.0);
}

TEST_CASE("hand-derived two-category propagation, mean variant") {
  const auto r = propagate(kLine, kLineGiven, {PropagationVariant::mean, 2});
  // Centroids 1 and 4. Foreign distances 4, 2, 3; mean 3; ratio 2.
  CHECK(r.mean_distance == 3.0);
  CHECK_FALSE(r.degenerate);
  CHECK_FALSE(r.raw.has(0, 0));
  CHECK_FALSE(r.raw.has(1, 0));
  CHECK_FALSE(r.raw.has(2, 1));
  CHECK(r.raw.count() == 3);
  const double s01 = std::exp(-(4.0 / 3.0) * 2.0);
  const double s11 = std::exp(-(2.0 / 3.0) * 2.0);
  const double s20 = std::exp(-(3.0 / 3.0) * 2.0);
  CHECK(std::abs(r.raw.at(0, 1) - s01) <= 1e-15);
  CHECK(std::abs(r.raw.at(1, 1) - s11) <= 1e-15);
  CHECK(std::abs(r.raw.at(2, 0) - s20) <= 1e-15);
  CHECK(r.scaled.at(0, 1) == -1.0);
  CHECK(r.scaled.at(1, 1) == 1.0);
  const double mid = -1.0 + 2.0 * (s20 - s01) / (s11 - s01);
  CHECK(std::abs(r.scaled.at(2, 0) - mid) <= 1e-15);
  CHECK(std::abs(mid - (-0.32152)) <= 1e-5);

  const auto& l = r.labels;
  CHECK(l.positive(0, 0));
  CHECK(l.weight(0, 0) == 1.0);
  CHECK_FALSE(l.positive(0, 1));
  CHECK(l.weight(0, 1) == 1.0);
  CHECK(l.positive(1, 1));
  CHECK(l.weight(1, 1) == 1.0);
  CHECK(l.positive(2, 1));
  CHECK_FALSE(l.positive(2, 0));
  CHECK(std::abs(l.weight(2, 0) + mid) <= 1e-15);
  CHECK(r.propagated_positives() == std::vector<std::vector<int>>{{}, {1}, {}});
}

TEST_CASE("hand-derived two-category propagation, nearest variant") {
  const auto r = propagate(kLine, kLineGiven, {PropagationVariant::nearest, 2});
  // Nearest foreign members: r0 -> r2 (4), r1 -> r2 (2), r2 -> r1 (2).
  CHECK(std::abs(r.mean_distance - 8.0 / 3.0) <= 1e-15);
  CHECK(std::abs(r.raw.at(0, 1) - std::exp(-3.0)) <= 1e-15);
  CHECK(std::abs(r.raw.at(1, 1) - std::exp(-1.5)) <= 1e-15);
  CHECK(std::abs(r.raw.at(2, 0) - std::exp(-1.5)) <= 1e-15);
  CHECK(r.scaled.at(0, 1) == -1.0);
  CHECK(r.scaled.at(1, 1) == 1.0);
  CHECK(r.scaled.at(2, 0) == 1.0);
  CHECK_FALSE(r.labels.positive(0, 1));
  CHECK(r.labels.positive(1, 1));
  CHECK(r.labels.positive(2, 0));
  CHECK(r.labels.weight(2, 0) == 1.0);
}

TEST_CASE("requests sitting on two prototypes give a constant, degenerate map") {
  // Every foreign pair is exactly the prototype distance apart, so min equals
  // max and the scaling rule for a constant map applies.
  const std::vector<Vector> xs{{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  const std::vector<int> given{0, 0, 1};
  const auto r = propagate(xs, given, {PropagationVariant::mean, 2});
  CHECK(r.degenerate);
  CHECK_FALSE(r.warnings.empty());
  CHECK(r.raw.at(0, 1) == r.raw.at(2, 0));
  for (std::size_t i = 0; i < 3; ++i) {
    const auto foreign = static_cast<std::size_t>(1 - given[i]);
    CHECK(r.scaled.at(i, foreign) == 0.0);
    CHECK(r.labels.positive(i, foreign));
    CHECK(r.labels.weight(i, foreign) == 0.0);
  }
}

TEST_CASE("nearest ties go to the lower request index") {
  // r2 is equidistant from r0 and r1; both in category 0.
  const std::vector<Vector> xs{{-1.0}, {1.0}, {0.0}};
  const std::vector<int> given{0, 0, 1};
  const auto reps = category_representatives(xs, given, 2, PropagationVariant::nearest);
  const auto d = representative_distances(xs, given, reps);
  CHECK(d.at(2, 0) == 1.0);
}

TEST_CASE("zero mean distance is degenerate") {
  const std::vector<Vector> xs(3, Vector{0.5, 0.5});
  const auto r = propagate(xs, std::vector<int>{0, 1, 1}, {PropagationVariant::mean, 2});
  CHECK(r.degenerate);
  CHECK_FALSE(r.warnings.empty());
  CHECK(r.labels.positive(0, 1));
  CHECK(r.labels.weight(0, 1) == 0.0);
  CHECK(r.labels.positive(1, 0));
  CHECK(r.labels.weight(1, 0) == 0.0);
  CHECK(r.labels.weight(1, 1) == 1.0);
}

TEST_CASE("variants coincide on singleton categories") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int it = 0; it < 50; ++it) {
    const int c = 2 + static_cast<int>(rng() % 8);
    std::vector<Vector> xs;
    std::vector<int> given;
    for (int j = 0; j < c; ++j) {
      xs.push_back({normal(rng), normal(rng), normal(rng)});
      given.push_back(j);
    }
    const auto a = propagate(xs, given, {PropagationVariant::mean, c});
    const auto b = propagate(xs, given, {PropagationVariant::nearest, c});
    CHECK(a.raw == b.raw);
    CHECK(a.scaled == b.scaled);
    CHECK(a.labels == b.labels);
    CHECK(a.mean_distance == b.mean_distance);
  }
}

TEST_CASE("propagation partitions categories and is deterministic") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  for (int it = 0; it < 30; ++it) {
    const int c = 2 + static_cast<int>(rng() % 6);
    std::vector<Vector> xs;
    std::vector<int> given;
    for (int i = 0; i < 3 * c; ++i) {
      xs.push_back({normal(rng), normal(rng)});
      given.push_back(i % c);
    }
    for (auto variant : {PropagationVariant::mean, PropagationVariant::nearest}) {
      const auto a = propagate(xs, given, {variant, c});
      const auto b = propagate(xs, given, {variant, c});
      CHECK(a.raw == b.raw);
      CHECK(a.labels == b.labels);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(a.labels.positive(i, static_cast<std::size_t>(given[i])));
        CHECK(a.labels.weight(i, static_cast<std::size_t>(given[i])) == 1.0);
        CHECK_FALSE(a.raw.has(i, static_cast<std::size_t>(given[i])));
        for (int j = 0; j < c; ++j) {
          CHECK(a.labels.weight(i, j) >= 0.0);
          CHECK(a.labels.weight(i, j) <= 1.0);
          if (j == given[i]) continue;
          CHECK(a.scaled.at(i, j) >= -1.0);
          CHECK(a.scaled.at(i, j) <= 1.0);
          CHECK(a.raw.at(i, j) > 0.0);
          CHECK(a.raw.at(i, j) <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("propagation result serializes annotated pairs as null") {
  const auto r = propagate(kLine, kLineGiven, {PropagationVariant::mean, 2});
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto j = to_json(r, ids);
  CHECK(j.at("mean_distance").get<double>() == 3.0);
  CHECK(j.dump().find("\"a\"") != std::string::npos);
}
