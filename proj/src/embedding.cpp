#include "corpusscope/embedding.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "corpusscope/errors.hpp"
#include "corpusscope/rng.hpp"

namespace corpusscope {

EmbeddingTable::EmbeddingTable(std::size_t dim, OovPolicy oov, bool trainable)
    : dim_(dim), oov_(oov), trainable_(trainable), vectors_(0, static_cast<Eigen::Index>(dim)) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dim_)
    throw FormatError(fmt::format("vector for '{}' has length {}, expected {}", token,
                                  vector.size(), dim_));
  const auto row = static_cast<std::ptrdiff_t>(tokens_.size());
  if (!index_.emplace(token, row).second) throw FormatError("duplicate token '" + token + "'");
  tokens_.push_back(std::move(token));
  vectors_.conservativeResize(row + 1, Eigen::NoChange);
  vectors_.row(row) = Eigen::Map<const Eigen::RowVectorXd>(vector.data(), vector.size());
}

std::ptrdiff_t EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd EmbeddingTable::lookup(std::string_view token) const {
  const auto row = find(token);
  if (row >= 0) return vectors_.row(row).transpose();
  if (oov_.kind == OovPolicy::Kind::Hashed) return hashed_vector(token, oov_.seed, dim_);
  return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
}

std::uint64_t EmbeddingTable::checksum() const {
  std::uint64_t h = fnv1a64("embedding-table");
  for (const auto& t : tokens_) h = splitmix64(h ^ fnv1a64(t));
  const double* data = vectors_.data();
  for (Eigen::Index i = 0; i < vectors_.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, data + i, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

Eigen::VectorXd hashed_vector(std::string_view token, std::uint64_t seed, std::size_t dim) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  std::uint64_t state = derive_seed(seed, token);
  for (std::size_t i = 0; i < dim; ++i) {
    state = splitmix64(state);
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable parse_embedding_text(std::string_view document) {
  EmbeddingTable table;
  bool have_dim = false;
  std::size_t line_no = 0;
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= document.size()) {
    auto end = document.find('\n', start);
    if (end == std::string_view::npos) end = document.size();
    auto line = document.substr(start, end - start);
    start = end + 1;
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (!have_dim && table.size() == 0 && fields.size() == 2) {
      std::size_t count = 0, dim = 0;
      if (parse_size(fields[0], count) && parse_size(fields[1], dim)) continue;  // header
    }
    if (fields.size() < 2)
      throw FormatError(fmt::format("line {}: expected a token followed by its vector", line_no));
    values.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0;
      if (!parse_double(fields[i], v))
        throw FormatError(fmt::format("line {}: '{}' is not a number", line_no, fields[i]));
      values.push_back(v);
    }
    if (!have_dim) {
      table = EmbeddingTable(values.size(), OovPolicy::zeros(), false);
      have_dim = true;
    } else if (values.size() != table.dim()) {
      throw FormatError(fmt::format("line {}: vector has length {}, expected {}", line_no,
                                    values.size(), table.dim()));
    }
    try {
      table.add(std::string(fields[0]), values);
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (!have_dim) throw FormatError("embedding file has no vectors; dimension cannot be inferred");
  return table;
}

EmbeddingTable load_embedding_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_embedding_text(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string to_embedding_text(const EmbeddingTable& table) {
  std::string out;
  const auto& m = table.vectors();
  for (std::size_t r = 0; r < table.size(); ++r) {
    out += table.tokens()[r];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += ' ';
      // fmt's default float formatting is shortest round-trip.
      out += fmt::format("{}", m(static_cast<Eigen::Index>(r), c));
    }
    out += '\n';
  }
  return out;
}

void write_embedding_text(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_embedding_text(table);
}

EmbeddingTable new_trainable_table(const std::vector<std::string>& symbols, std::size_t dim,
                                   std::uint64_t seed) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
  if (symbols.empty()) throw InputError("trainable table needs at least one symbol");
  EmbeddingTable table(dim, OovPolicy::zeros(), true);
  Rng rng(seed);
  std::vector<double> v(dim);
  for (const auto& s : symbols) {
    for (auto& x : v) x = uniform(rng, -0.05, 0.05);
    table.add(s, v);
  }
  return table;
}

InputMatrix embed_sequence(std::span<const std::string> tokens, const EmbeddingTable& table,
                           std::size_t max_len) {
  if (max_len == 0) throw InputError("max_len must be at least 1");
  InputMatrix m;
  m.values = RowMatrixXd::Zero(static_cast<Eigen::Index>(max_len),
                               static_cast<Eigen::Index>(table.dim()));
  m.mask.assign(max_len, false);
  m.source_rows.assign(max_len, -1);
  const std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto row = table.find(tokens[i]);
    m.mask[i] = true;
    m.source_rows[i] = row;
    if (row >= 0)
      m.values.row(r) = table.vectors().row(row);
    else if (table.oov_policy().kind == OovPolicy::Kind::Hashed)
      m.values.row(r) = hashed_vector(tokens[i], table.oov_policy().seed, table.dim()).transpose();
  }
  return m;
}

}  // namespace corpusscope
