#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "purank/corpus.hpp"

namespace purank {

using Vector = std::vector<double>;

enum class OovPolicy { zero_vector, error };

std::string_view to_string(OovPolicy p);
OovPolicy oov_policy_from_string(std::string_view name);

/// Token embedding table. Rows are stored contiguously (row-major) so that a
/// trainable table can be updated by the optimizer as one flat span.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim, bool trainable = false,
                          OovPolicy oov = OovPolicy::zero_vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool trainable() const noexcept { return trainable_; }
  void set_trainable(bool on) noexcept { trainable_ = on; }
  OovPolicy oov_policy() const noexcept { return oov_; }
  void set_oov_policy(OovPolicy p) noexcept { oov_ = p; }

  /// Appends a token; duplicate tokens, wrong lengths and non-finite
  /// entries are rejected.
  int add(std::string token, std::span<const double> values);

  std::optional<int> find(std::string_view token) const;
  const std::string& token(int row) const { return tokens_.at(row); }

  std::span<const double> row(int r) const;
  std::span<double> row(int r);

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t dim_;
  bool trainable_;
  OovPolicy oov_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::vector<double> data_;
};

/// Text format: header `dim D count N`, then N lines of `token v1 .. vD`.
EmbeddingTable read_embeddings(std::istream& in, bool trainable = false,
                               OovPolicy oov = OovPolicy::zero_vector);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               bool trainable = false,
                               OovPolicy oov = OovPolicy::zero_vector);
void write_embeddings(const EmbeddingTable& table, std::ostream& out);
void write_embeddings(const EmbeddingTable& table,
                      const std::filesystem::path& path);

/// A pooled request vector together with the table rows it was pooled
/// from (-1 marks an out-of-vocabulary token mapped to the zero vector).
struct EncodedRequest {
  Vector x;
  std::vector<int> rows;
};

/// Mean of the token vectors.
Vector encode(const Request& r, const EmbeddingTable& table);
EncodedRequest encode_with_rows(const Request& r, const EmbeddingTable& table);

std::vector<Vector> encode_all(const Dataset& d, const EmbeddingTable& table);
std::vector<EncodedRequest> encode_all_with_rows(const Dataset& d,
                                                 const EmbeddingTable& table);

}  // namespace purank
