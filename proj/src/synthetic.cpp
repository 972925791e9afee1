#include "purank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "purank/error.hpp"

namespace purank {

void SynthConfig::validate() const {
  if (num_categories < 2) {
    throw Error(ErrorKind::invalid_argument, "num_categories must be >= 2");
  }
  if (num_functions < 1 || num_functions > static_cast<int>(kFunctionCount)) {
    throw Error(ErrorKind::invalid_argument, "num_functions must be in [1, 3]");
  }
  if (train_per_category < 1 || valid_per_category < 0 || test_per_category < 0) {
    throw Error(ErrorKind::invalid_argument,
                "train_per_category must be >= 1; valid/test counts >= 0");
  }
  if (embedding_dim < 1) {
    throw Error(ErrorKind::invalid_argument, "embedding_dim must be >= 1");
  }
  if (!(function_spread >= 0.0) || !(prototype_spread >= 0.0) ||
      !(noise_scale >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "spreads must be non-negative");
  }
  if (!(gold_radius > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "gold_radius must be positive");
  }
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw Error(ErrorKind::parse, "synthetic config must be a JSON object");
  }
  SynthConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "num_categories") c.num_categories = value.get<int>();
      else if (key == "num_functions") c.num_functions = value.get<int>();
      else if (key == "train_per_category") c.train_per_category = value.get<int>();
      else if (key == "valid_per_category") c.valid_per_category = value.get<int>();
      else if (key == "test_per_category") c.test_per_category = value.get<int>();
      else if (key == "embedding_dim") c.embedding_dim = value.get<int>();
      else if (key == "function_spread") c.function_spread = value.get<double>();
      else if (key == "prototype_spread") c.prototype_spread = value.get<double>();
      else if (key == "noise_scale") c.noise_scale = value.get<double>();
      else if (key == "gold_radius") c.gold_radius = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw Error(ErrorKind::parse, fmt::format("unknown synthetic config key '{}'", key));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("bad value for '{}': {}", key, e.what()));
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"num_categories", c.num_categories},
          {"num_functions", c.num_functions},
          {"train_per_category", c.train_per_category},
          {"valid_per_category", c.valid_per_category},
          {"test_per_category", c.test_per_category},
          {"embedding_dim", c.embedding_dim},
          {"function_spread", c.function_spread},
          {"prototype_spread", c.prototype_spread},
          {"noise_scale", c.noise_scale},
          {"gold_radius", c.gold_radius},
          {"seed", c.seed}};
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

}  // namespace

SyntheticCorpus generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto dim = static_cast<std::size_t>(cfg.embedding_dim);
  const int n_cat = cfg.num_categories;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> token_count(1, 3);

  std::vector<Category> categories(n_cat);
  for (int j = 0; j < n_cat; ++j) {
    const int f = j * cfg.num_functions / n_cat;
    categories[j] = {j, fmt::format("category_{:02d}", j), static_cast<Function>(f),
                     fmt::format("action_{:02d}", j)};
  }

  std::vector<Vector> centers(cfg.num_functions, Vector(dim));
  for (auto& c : centers) {
    for (auto& v : c) v = cfg.function_spread * normal(rng);
  }
  std::vector<Vector> prototypes(n_cat, Vector(dim));
  for (int j = 0; j < n_cat; ++j) {
    const auto& center = centers[static_cast<int>(categories[j].function)];
    for (std::size_t d = 0; d < dim; ++d) {
      prototypes[j][d] = center[d] + cfg.prototype_spread * normal(rng);
    }
  }

  SyntheticCorpus out{.train = {},
                      .valid = {},
                      .test = {},
                      .table = EmbeddingTable(dim),
                      .train_gold = {},
                      .prototypes = prototypes};

  auto build = [&](Dataset& d, SplitTag tag, int per_category,
                   std::vector<std::vector<int>>* hidden_gold) {
    d.categories = categories;
    d.split = tag;
    const auto prefix = to_string(tag);
    int next = 0;
    for (int i = 0; i < per_category; ++i) {
      for (int j = 0; j < n_cat; ++j) {
        Vector v(dim);
        for (std::size_t k = 0; k < dim; ++k) {
          v[k] = prototypes[j][k] + cfg.noise_scale * normal(rng);
        }
        Request r;
        r.id = fmt::format("{}-{:06d}", prefix, next++);
        r.given_category = j;

        // Split v into k token vectors whose mean is v.
        const int k = token_count(rng);
        Vector last(dim);
        for (std::size_t q = 0; q < dim; ++q) last[q] = static_cast<double>(k) * v[q];
        for (int t = 0; t < k; ++t) {
          Vector tok(dim);
          if (t + 1 < k) {
            for (std::size_t q = 0; q < dim; ++q) {
              tok[q] = v[q] + cfg.noise_scale * normal(rng);
              last[q] -= tok[q];
            }
          } else {
            tok = last;
          }
          r.tokens.push_back(fmt::format("{}/{}", r.id, t));
          out.table.add(r.tokens.back(), tok);
        }

        // Gold sets are defined on the pooled vector the encoder produces.
        const Vector x = encode(r, out.table);
        std::vector<int> gold;
        for (int c = 0; c < n_cat; ++c) {
          if (c == j || distance(x, prototypes[c]) <= cfg.gold_radius) {
            gold.push_back(c);
          }
        }
        if (hidden_gold) {
          hidden_gold->push_back(std::move(gold));
        } else {
          r.gold_categories = std::move(gold);
        }
        d.requests.push_back(std::move(r));
      }
    }
  };

  build(out.train, SplitTag::train, cfg.train_per_category, &out.train_gold);
  build(out.valid, SplitTag::valid, cfg.valid_per_category, nullptr);
  build(out.test, SplitTag::test, cfg.test_per_category, nullptr);
  return out;
}

Dataset with_gold(const Dataset& d, const std::vector<std::vector<int>>& gold) {
  if (gold.size() != d.requests.size()) {
    throw Error(ErrorKind::invalid_argument, "gold list does not match the dataset");
  }
  Dataset out = d;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    out.requests[i].gold_categories = gold[i];
  }
  out.split = SplitTag::test;
  out.validate();
  return out;
}

}  // namespace purank
