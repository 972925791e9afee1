#include "purank/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "purank/error.hpp"

namespace purank {

namespace {

constexpr std::array<std::string_view, kFunctionCount> kFunctionNames = {
    "spot_search", "restaurant_search", "app_launch"};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, fmt::format("cannot open {}", path.string()));
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  }
  return out;
}

Request parse_request(const nlohmann::json& j, int categories, SplitTag split,
                      std::size_t line) {
  auto fail = [line](ErrorKind kind, std::string_view what) {
    return Error(kind, fmt::format("{} at line {}", what, line));
  };
  if (!j.is_object()) throw fail(ErrorKind::parse, "expected a JSON object");

  Request r;
  if (!j.contains("id") || !j["id"].is_string()) {
    throw fail(ErrorKind::parse, "missing string field 'id'");
  }
  r.id = j["id"].get<std::string>();

  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    throw fail(ErrorKind::parse, "missing array field 'tokens'");
  }
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw fail(ErrorKind::parse, "non-string token");
    r.tokens.push_back(t.get<std::string>());
  }
  if (r.tokens.empty()) throw fail(ErrorKind::validation, "empty token list");

  if (!j.contains("given_category") ||
      !j["given_category"].is_number_integer()) {
    throw fail(ErrorKind::parse, "missing integer field 'given_category'");
  }
  const auto given = j["given_category"].get<long long>();
  if (given < 0 || given >= categories) {
    throw fail(ErrorKind::validation, fmt::format("unknown category {}", given));
  }
  r.given_category = static_cast<int>(given);

  if (j.contains("gold_categories") && !j["gold_categories"].is_null()) {
    if (!j["gold_categories"].is_array()) {
      throw fail(ErrorKind::parse, "'gold_categories' must be an array");
    }
    std::vector<int> gold;
    for (const auto& g : j["gold_categories"]) {
      if (!g.is_number_integer()) {
        throw fail(ErrorKind::parse, "non-integer gold category");
      }
      const auto id = g.get<long long>();
      if (id < 0 || id >= categories) {
        throw fail(ErrorKind::validation, fmt::format("unknown category {}", id));
      }
      gold.push_back(static_cast<int>(id));
    }
    if (std::find(gold.begin(), gold.end(), r.given_category) == gold.end()) {
      throw fail(ErrorKind::validation, "gold set does not contain the given category");
    }
    r.gold_categories = std::move(gold);
  } else if (split == SplitTag::test) {
    throw fail(ErrorKind::validation, "incomplete gold labels");
  }
  return r;
}

}  // namespace

std::string_view to_string(Function f) {
  return kFunctionNames.at(static_cast<std::size_t>(f));
}

Function function_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kFunctionNames.size(); ++i) {
    if (kFunctionNames[i] == name) return static_cast<Function>(i);
  }
  throw Error(ErrorKind::parse, fmt::format("unknown function '{}'", name));
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::valid: return "valid";
    case SplitTag::test: return "test";
  }
  return "train";
}

SplitTag split_from_string(std::string_view name) {
  if (name == "train") return SplitTag::train;
  if (name == "valid") return SplitTag::valid;
  if (name == "test") return SplitTag::test;
  throw Error(ErrorKind::parse, fmt::format("unknown split '{}'", name));
}

std::vector<int> Dataset::given_categories() const {
  std::vector<int> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(r.given_category);
  return out;
}

std::vector<std::vector<int>> Dataset::gold_or_given() const {
  std::vector<std::vector<int>> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    out.push_back(r.gold_categories ? *r.gold_categories
                                    : std::vector<int>{r.given_category});
  }
  return out;
}

void Dataset::validate() const {
  for (std::size_t c = 0; c < categories.size(); ++c) {
    if (categories[c].id != static_cast<int>(c)) {
      throw Error(ErrorKind::validation,
                  fmt::format("category ids must be dense; found {} at {}",
                              categories[c].id, c));
    }
  }
  const int n = category_count();
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    if (r.tokens.empty()) {
      throw Error(ErrorKind::validation,
                  fmt::format("empty token list in request {}", r.id));
    }
    if (r.given_category < 0 || r.given_category >= n) {
      throw Error(ErrorKind::validation,
                  fmt::format("unknown category {} in request {}",
                              r.given_category, r.id));
    }
    if (r.gold_categories) {
      for (int g : *r.gold_categories) {
        if (g < 0 || g >= n) {
          throw Error(ErrorKind::validation,
                      fmt::format("unknown category {} in request {}", g, r.id));
        }
      }
      if (std::find(r.gold_categories->begin(), r.gold_categories->end(),
                    r.given_category) == r.gold_categories->end()) {
        throw Error(ErrorKind::validation,
                    fmt::format("gold set of {} lacks its given category", r.id));
      }
    } else if (split == SplitTag::test) {
      throw Error(ErrorKind::validation,
                  fmt::format("incomplete gold labels in request {}", r.id));
    }
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::validation,
                  fmt::format("duplicate request id {}", r.id));
    }
  }
}

// --- categories --------------------------------------------------------------

std::vector<Category> parse_categories(const nlohmann::json& doc) {
  const nlohmann::json& list =
      doc.is_object() && doc.contains("categories") ? doc["categories"] : doc;
  if (!list.is_array()) {
    throw Error(ErrorKind::parse, "category file must hold a JSON array");
  }
  std::vector<Category> out;
  for (const auto& c : list) {
    if (!c.is_object() || !c.contains("id") || !c["id"].is_number_integer()) {
      throw Error(ErrorKind::parse, "category entry without integer 'id'");
    }
    Category cat;
    cat.id = c["id"].get<int>();
    cat.name = c.value("name", fmt::format("category_{}", cat.id));
    cat.function = function_from_string(c.value("function", "spot_search"));
    cat.action_template = c.value("template", "");
    out.push_back(std::move(cat));
  }
  std::sort(out.begin(), out.end(),
            [](const Category& a, const Category& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].id != static_cast<int>(i)) {
      throw Error(ErrorKind::validation,
                  "category ids must be unique and dense from 0");
    }
  }
  if (out.size() < 2) {
    throw Error(ErrorKind::validation, "at least two categories are required");
  }
  return out;
}

std::vector<Category> load_categories(const std::filesystem::path& path) {
  auto in = open_input(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse,
                fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_categories(doc);
}

nlohmann::json categories_to_json(std::span<const Category> categories) {
  auto out = nlohmann::json::array();
  for (const auto& c : categories) {
    out.push_back({{"id", c.id},
                   {"name", c.name},
                   {"function", std::string(to_string(c.function))},
                   {"template", c.action_template}});
  }
  return out;
}

void write_categories(std::span<const Category> categories,
                      const std::filesystem::path& path) {
  auto out = open_output(path);
  out << categories_to_json(categories).dump(2) << '\n';
}

// --- requests ----------------------------------------------------------------

Dataset parse_corpus(std::istream& in, std::vector<Category> categories,
                     SplitTag split) {
  Dataset d;
  d.categories = std::move(categories);
  d.split = split;
  const int n = d.category_count();

  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::parse,
                  fmt::format("parse error at line {}: {}", line_no, e.what()));
    }
    Request r = parse_request(j, n, split, line_no);
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::validation,
                  fmt::format("duplicate request id {} at line {}", r.id, line_no));
    }
    d.requests.push_back(std::move(r));
  }
  return d;
}

Dataset load_corpus(const std::filesystem::path& path,
                    const std::filesystem::path& categories_path,
                    SplitTag split) {
  auto categories = load_categories(categories_path);
  auto in = open_input(path);
  return parse_corpus(in, std::move(categories), split);
}

std::string corpus_to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& r : d.requests) {
    nlohmann::json j = {{"id", r.id},
                        {"tokens", r.tokens},
                        {"given_category", r.given_category}};
    if (r.gold_categories) j["gold_categories"] = *r.gold_categories;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const Dataset& d, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << corpus_to_jsonl(d);
}

std::vector<VoteRecord> load_votes(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<VoteRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("request_id").get<std::string>(),
                     j.at("category").get<int>(), j.at("votes").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse,
                  fmt::format("parse error at line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

Dataset convert_tsv(std::istream& in, std::vector<Category> categories,
                    SplitTag split) {
  std::unordered_map<std::string, int> by_name;
  for (const auto& c : categories) by_name.emplace(c.name, c.id);
  auto lookup = [&](const std::string& name, std::size_t line_no) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorKind::validation,
                  fmt::format("unknown category '{}' at line {}", name, line_no));
    }
    return it->second;
  };

  Dataset d;
  d.categories = std::move(categories);
  d.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 3) {
      throw Error(ErrorKind::parse,
                  fmt::format("expected at least 3 columns at line {}", line_no));
    }
    Request r;
    r.id = cols[0];
    std::istringstream words(cols[1]);
    for (std::string w; words >> w;) r.tokens.push_back(w);
    if (r.tokens.empty()) {
      throw Error(ErrorKind::validation,
                  fmt::format("empty token list at line {}", line_no));
    }
    r.given_category = lookup(cols[2], line_no);
    if (cols.size() > 3 && !cols[3].empty()) {
      std::set<int> gold{r.given_category};
      std::stringstream gs(cols[3]);
      for (std::string name; std::getline(gs, name, '|');) {
        if (!name.empty()) gold.insert(lookup(name, line_no));
      }
      r.gold_categories = std::vector<int>(gold.begin(), gold.end());
    }
    d.requests.push_back(std::move(r));
  }
  d.validate();
  return d;
}

// --- splitting ---------------------------------------------------------------

std::array<Dataset, 3> split_dataset(const Dataset& d,
                                     std::array<double, 3> ratios,
                                     std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0)) {
      throw Error(ErrorKind::invalid_argument, "split ratios must be non-negative");
    }
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw Error(ErrorKind::invalid_argument, "split ratios must sum to 1");
  }

  const int n_cat = d.category_count();
  std::vector<std::vector<std::size_t>> members(n_cat);
  for (std::size_t i = 0; i < d.requests.size(); ++i) {
    members[d.requests[i].given_category].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<int> assignment(d.requests.size(), 0);
  for (int c = 0; c < n_cat; ++c) {
    auto& idx = members[c];
    const auto n = static_cast<long long>(idx.size());
    const long long first = std::llround(static_cast<double>(n) * ratios[0]);
    const long long second = std::llround(static_cast<double>(n) * ratios[1]);
    const long long third = n - first - second;
    const std::array<long long, 3> counts = {first, second, third};
    for (int s = 0; s < 3; ++s) {
      if (counts[s] < 0 || (ratios[s] > 0.0 && counts[s] == 0)) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("infeasible ratios for category {} ({} requests)",
                                c, n));
      }
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (long long k = 0; k < n; ++k) {
      assignment[idx[k]] = k < first ? 0 : (k < first + second ? 1 : 2);
    }
  }

  std::array<Dataset, 3> out;
  constexpr std::array<SplitTag, 3> tags = {SplitTag::train, SplitTag::valid,
                                           SplitTag::test};
  for (int s = 0; s < 3; ++s) {
    out[s].categories = d.categories;
    out[s].split = tags[s];
  }
  for (std::size_t i = 0; i < d.requests.size(); ++i) {
    out[assignment[i]].requests.push_back(d.requests[i]);
  }
  return out;
}

// --- statistics --------------------------------------------------------------

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(ss / n);
  return out;
}

StatsReport corpus_stats(const Dataset& d, std::span<const VoteRecord> votes) {
  std::array<std::vector<double>, kFunctionCount> lengths, added;
  std::vector<double> all_lengths, all_added;
  bool any_gold = false;
  for (const auto& r : d.requests) {
    const auto f = static_cast<std::size_t>(d.categories.at(r.given_category).function);
    const auto len = static_cast<double>(r.tokens.size());
    lengths[f].push_back(len);
    all_lengths.push_back(len);
    if (r.gold_categories) {
      any_gold = true;
      const auto extra = static_cast<double>(r.gold_categories->size()) - 1.0;
      added[f].push_back(extra);
      all_added.push_back(extra);
    }
  }

  StatsReport report;
  for (std::size_t f = 0; f < kFunctionCount; ++f) {
    auto& g = report.per_function[f];
    g.label = std::string(to_string(static_cast<Function>(f)));
    g.requests = lengths[f].size();
    g.token_length = mean_std(lengths[f]);
    if (any_gold) g.added_categories = mean_std(added[f]);
  }
  report.overall.label = "all";
  report.overall.requests = d.requests.size();
  report.overall.token_length = mean_std(all_lengths);
  if (any_gold) report.overall.added_categories = mean_std(all_added);

  if (!votes.empty()) {
    std::map<int, std::size_t> hist;
    for (const auto& v : votes) ++hist[v.votes];
    report.vote_histogram = std::move(hist);
  }
  return report;
}

namespace {

nlohmann::json to_json(const MeanStd& m) {
  return {{"mean", m.mean}, {"stddev", m.stddev}, {"n", m.n}};
}

nlohmann::json to_json(const GroupStats& g) {
  nlohmann::json j = {{"function", g.label},
                      {"requests", g.requests},
                      {"token_length", to_json(g.token_length)}};
  if (g.added_categories) j["added_categories"] = to_json(*g.added_categories);
  return j;
}

std::string cell(const MeanStd& m) {
  return fmt::format("{:.2f} (±{:.2f})", m.mean, m.stddev);
}

}  // namespace

nlohmann::json to_json(const StatsReport& report) {
  nlohmann::json j;
  j["per_function"] = nlohmann::json::array();
  for (const auto& g : report.per_function) j["per_function"].push_back(to_json(g));
  j["overall"] = to_json(report.overall);
  if (report.vote_histogram) {
    auto h = nlohmann::json::object();
    for (const auto& [votes, count] : *report.vote_histogram) {
      h[std::to_string(votes)] = count;
    }
    j["vote_histogram"] = h;
  }
  return j;
}

std::string format_stats_table(const StatsReport& report) {
  const bool added = report.overall.added_categories.has_value();
  std::string out = fmt::format("{:<18} | {:>20} | {:>9}", "Function",
                                "Length", "# requests");
  if (added) out += fmt::format(" | {:>20}", "# added categories");
  out += '\n';
  out += std::string(out.size() - 1, '-') + '\n';
  auto row = [&](const GroupStats& g) {
    out += fmt::format("{:<18} | {:>20} | {:>10}", g.label, cell(g.token_length),
                       g.requests);
    if (added) out += fmt::format(" | {:>20}", cell(*g.added_categories));
    out += '\n';
  };
  for (const auto& g : report.per_function) row(g);
  row(report.overall);

  if (report.vote_histogram) {
    std::size_t total = 0;
    for (const auto& [v, c] : *report.vote_histogram) total += c;
    out += fmt::format("\n{:>6} | {:>14}\n", "#votes", "pairs (%)");
    for (const auto& [v, c] : *report.vote_histogram) {
      out += fmt::format("{:>6} | {:>6} ({:.2f})\n", v, c,
                         100.0 * static_cast<double>(c) / static_cast<double>(total));
    }
  }
  return out;
}

// --- agreement ---------------------------------------------------------------

double fleiss_kappa(std::span<const std::vector<int>> counts) {
  if (counts.empty()) {
    throw Error(ErrorKind::invalid_argument, "fleiss_kappa needs at least one item");
  }
  const std::size_t k = counts.front().size();
  long long raters = -1;
  std::vector<double> class_totals(k, 0.0);
  double agreement_sum = 0.0;
  for (const auto& row : counts) {
    if (row.size() != k) {
      throw Error(ErrorKind::invalid_argument, "ragged count matrix");
    }
    long long n = 0;
    long long sq = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (row[c] < 0) throw Error(ErrorKind::invalid_argument, "negative count");
      n += row[c];
      sq += static_cast<long long>(row[c]) * row[c];
      class_totals[c] += row[c];
    }
    if (raters < 0) raters = n;
    if (n != raters) {
      throw Error(ErrorKind::invalid_argument,
                  "every item must be rated by the same number of raters");
    }
    if (n < 2) throw Error(ErrorKind::invalid_argument, "need at least two raters");
    agreement_sum += static_cast<double>(sq - n) / static_cast<double>(n * (n - 1));
  }
  const double items = static_cast<double>(counts.size());
  const double p_bar = agreement_sum / items;
  double p_e = 0.0;
  for (double t : class_totals) {
    const double p = t / (items * static_cast<double>(raters));
    p_e += p * p;
  }
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

double fleiss_kappa(std::span<const VoteRecord> votes, int n_raters,
                    int n_classes) {
  if (n_classes != 2) {
    throw Error(ErrorKind::invalid_argument,
                "vote records encode binary judgements; n_classes must be 2");
  }
  if (n_raters < 2) throw Error(ErrorKind::invalid_argument, "n_raters must be >= 2");
  std::vector<std::vector<int>> counts;
  counts.reserve(votes.size());
  for (const auto& v : votes) {
    if (v.votes < 0 || v.votes > n_raters) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("votes {} outside [0, {}] for {}", v.votes, n_raters,
                              v.request_id));
    }
    counts.push_back({v.votes, n_raters - v.votes});
  }
  return fleiss_kappa(counts);
}

}  // namespace purank
