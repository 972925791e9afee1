#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace purank {

/// The three system-action groups a category belongs to.
enum class Function { spot_search = 0, restaurant_search = 1, app_launch = 2 };
inline constexpr std::size_t kFunctionCount = 3;

std::string_view to_string(Function f);
Function function_from_string(std::string_view name);

struct Category {
  int id = 0;
  std::string name;
  Function function = Function::spot_search;
  std::string action_template;
};

enum class SplitTag { train, valid, test };

std::string_view to_string(SplitTag tag);
SplitTag split_from_string(std::string_view name);

/// One user utterance. gold_categories is only present on completely
/// annotated splits and always contains given_category.
struct Request {
  std::string id;
  std::vector<std::string> tokens;
  int given_category = 0;
  std::optional<std::vector<int>> gold_categories;

  bool operator==(const Request&) const = default;
};

struct Dataset {
  std::vector<Category> categories;
  std::vector<Request> requests;
  SplitTag split = SplitTag::train;

  int category_count() const { return static_cast<int>(categories.size()); }

  /// Category ids of every request's annotated positive, in request order.
  std::vector<int> given_categories() const;

  /// Gold set of each request; falls back to {given} when absent.
  std::vector<std::vector<int>> gold_or_given() const;

  /// Throws Error{validation} when an invariant is broken.
  void validate() const;
};

struct VoteRecord {
  std::string request_id;
  int category = 0;
  int votes = 0;
};

// --- I/O -------------------------------------------------------------------

std::vector<Category> parse_categories(const nlohmann::json& doc);
std::vector<Category> load_categories(const std::filesystem::path& path);
nlohmann::json categories_to_json(std::span<const Category> categories);
void write_categories(std::span<const Category> categories,
                      const std::filesystem::path& path);

/// Parses canonical JSON-lines. Errors carry the 1-based line number.
Dataset parse_corpus(std::istream& in, std::vector<Category> categories,
                     SplitTag split);
Dataset load_corpus(const std::filesystem::path& path,
                    const std::filesystem::path& categories_path,
                    SplitTag split);

std::string corpus_to_jsonl(const Dataset& d);
void write_corpus(const Dataset& d, const std::filesystem::path& path);

std::vector<VoteRecord> load_votes(const std::filesystem::path& path);

/// Converts a tab-separated file (id, text, category name, optional
/// '|'-separated gold names) into the canonical form. Text is split on
/// whitespace.
Dataset convert_tsv(std::istream& in, std::vector<Category> categories,
                    SplitTag split);

// --- splitting and statistics ---------------------------------------------

/// Per-category stratified split into (train, valid, test). Order within
/// each output follows the input order.
std::array<Dataset, 3> split_dataset(const Dataset& d,
                                     std::array<double, 3> ratios,
                                     std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

struct GroupStats {
  std::string label;
  std::size_t requests = 0;
  MeanStd token_length;
  std::optional<MeanStd> added_categories;
};

struct StatsReport {
  std::array<GroupStats, kFunctionCount> per_function;
  GroupStats overall;
  std::optional<std::map<int, std::size_t>> vote_histogram;
};

StatsReport corpus_stats(const Dataset& d,
                         std::span<const VoteRecord> votes = {});
nlohmann::json to_json(const StatsReport& report);
std::string format_stats_table(const StatsReport& report);

/// Fleiss' kappa over an item x class count matrix where every row sums to
/// the same number of raters. When expected agreement is exactly 1 (every
/// rating falls in a single class) kappa is defined as 1.
double fleiss_kappa(std::span<const std::vector<int>> counts);

/// Binary-judgment convenience: each record contributes one item with
/// `votes` raters in class 0 and `n_raters - votes` in class 1.
double fleiss_kappa(std::span<const VoteRecord> votes, int n_raters,
                    int n_classes = 2);

}  // namespace purank
