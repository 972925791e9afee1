#include "purank/encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "purank/error.hpp"

namespace purank {

std::string_view to_string(OovPolicy p) {
  return p == OovPolicy::error ? "error" : "zero_vector";
}

OovPolicy oov_policy_from_string(std::string_view name) {
  if (name == "zero_vector") return OovPolicy::zero_vector;
  if (name == "error") return OovPolicy::error;
  throw Error(ErrorKind::parse, fmt::format("unknown oov policy '{}'", name));
}

EmbeddingTable::EmbeddingTable(std::size_t dim, bool trainable, OovPolicy oov)
    : dim_(dim), trainable_(trainable), oov_(oov) {
  if (dim == 0) {
    throw Error(ErrorKind::invalid_argument, "embedding dim must be >= 1");
  }
}

int EmbeddingTable::add(std::string token, std::span<const double> values) {
  if (values.size() != dim_) {
    throw Error(ErrorKind::dimension,
                fmt::format("token '{}' has {} values, expected {}", token,
                            values.size(), dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::numeric,
                  fmt::format("token '{}' has a non-finite entry", token));
    }
  }
  const int row = static_cast<int>(tokens_.size());
  if (!index_.emplace(token, row).second) {
    throw Error(ErrorKind::validation, fmt::format("duplicate token '{}'", token));
  }
  tokens_.push_back(std::move(token));
  data_.insert(data_.end(), values.begin(), values.end());
  return row;
}

std::optional<int> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::row(int r) const {
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(r) * dim_, dim_);
}

std::span<double> EmbeddingTable::row(int r) {
  return std::span<double>(data_).subspan(static_cast<std::size_t>(r) * dim_, dim_);
}

EmbeddingTable read_embeddings(std::istream& in, bool trainable, OovPolicy oov) {
  std::string header;
  if (!std::getline(in, header)) {
    throw Error(ErrorKind::parse, "embedding file is empty");
  }
  std::istringstream hs(header);
  std::string dim_kw, count_kw;
  long long dim = 0, count = 0;
  if (!(hs >> dim_kw >> dim >> count_kw >> count) || dim_kw != "dim" ||
      count_kw != "count" || dim < 1 || count < 0) {
    throw Error(ErrorKind::parse,
                "parse error at line 1: expected 'dim D count N'");
  }
  EmbeddingTable table(static_cast<std::size_t>(dim), trainable, oov);
  std::vector<double> values(static_cast<std::size_t>(dim));
  std::string line;
  for (long long k = 0; k < count; ++k) {
    const auto line_no = k + 2;
    if (!std::getline(in, line)) {
      throw Error(ErrorKind::parse,
                  fmt::format("expected {} tokens, file ends at line {}", count,
                              line_no));
    }
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    for (auto& v : values) {
      std::string field;
      if (!(ls >> field)) {
        throw Error(ErrorKind::parse,
                    fmt::format("parse error at line {}: too few values", line_no));
      }
      try {
        std::size_t used = 0;
        v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw Error(ErrorKind::parse,
                    fmt::format("parse error at line {}: bad number '{}'", line_no,
                                field));
      }
    }
    std::string extra;
    if (ls >> extra) {
      throw Error(ErrorKind::parse,
                  fmt::format("parse error at line {}: too many values", line_no));
    }
    table.add(token, values);
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               bool trainable, OovPolicy oov) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open {}", path.string()));
  return read_embeddings(in, trainable, oov);
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << "dim " << table.dim() << " count " << table.size() << '\n';
  for (std::size_t r = 0; r < table.size(); ++r) {
    out << table.token(static_cast<int>(r));
    for (double v : table.row(static_cast<int>(r))) {
      out << ' ' << fmt::format("{:.17g}", v);
    }
    out << '\n';
  }
}

void write_embeddings(const EmbeddingTable& table,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  write_embeddings(table, out);
}

EncodedRequest encode_with_rows(const Request& r, const EmbeddingTable& table) {
  if (r.tokens.empty()) {
    throw Error(ErrorKind::validation,
                fmt::format("empty token list in request {}", r.id));
  }
  EncodedRequest out;
  out.x.assign(table.dim(), 0.0);
  out.rows.reserve(r.tokens.size());
  for (const auto& tok : r.tokens) {
    const auto row = table.find(tok);
    if (!row) {
      if (table.oov_policy() == OovPolicy::error) {
        throw Error(ErrorKind::validation,
                    fmt::format("out-of-vocabulary token '{}' in request {}", tok,
                                r.id));
      }
      spdlog::warn("out-of-vocabulary token '{}' in request {} mapped to zero",
                   tok, r.id);
      out.rows.push_back(-1);
      continue;
    }
    out.rows.push_back(*row);
    const auto v = table.row(*row);
    for (std::size_t d = 0; d < out.x.size(); ++d) out.x[d] += v[d];
  }
  const auto n = static_cast<double>(r.tokens.size());
  for (auto& v : out.x) v /= n;
  return out;
}

Vector encode(const Request& r, const EmbeddingTable& table) {
  return encode_with_rows(r, table).x;
}

std::vector<EncodedRequest> encode_all_with_rows(const Dataset& d,
                                                 const EmbeddingTable& table) {
  std::vector<EncodedRequest> out;
  out.reserve(d.requests.size());
  for (const auto& r : d.requests) out.push_back(encode_with_rows(r, table));
  return out;
}

std::vector<Vector> encode_all(const Dataset& d, const EmbeddingTable& table) {
  std::vector<Vector> out;
  out.reserve(d.requests.size());
  for (const auto& r : d.requests) out.push_back(encode(r, table));
  return out;
}

}  // namespace purank
