#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace corpusscope {

struct OovPolicy {
  enum class Kind { Zeros, Hashed };
  Kind kind = Kind::Zeros;
  std::uint64_t seed = 0;

  static OovPolicy zeros() { return {}; }
  static OovPolicy hashed(std::uint64_t seed) { return {Kind::Hashed, seed}; }
};

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Token -> dense vector map. Vectors are stored as rows of one matrix so a
/// trainable table can be updated in place by the optimizer.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, OovPolicy oov, bool trainable);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  bool trainable() const { return trainable_; }
  const OovPolicy& oov_policy() const { return oov_; }
  void set_oov_policy(OovPolicy oov) { oov_ = oov; }

  /// Appends a vector; throws FormatError on length mismatch or duplicate.
  void add(std::string token, std::span<const double> vector);

  /// Row of `token`, or -1 when out of vocabulary.
  std::ptrdiff_t find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) >= 0; }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const RowMatrixXd& vectors() const { return vectors_; }
  RowMatrixXd& mutable_vectors() { return vectors_; }

  /// Vector for `token`, falling back to the OOV policy.
  Eigen::VectorXd lookup(std::string_view token) const;

  /// Order-sensitive FNV digest over tokens and raw vector bytes.
  std::uint64_t checksum() const;

 private:
  std::size_t dim_ = 0;
  OovPolicy oov_{};
  bool trainable_ = false;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::ptrdiff_t> index_;
  RowMatrixXd vectors_;
};

/// Deterministic pseudo-random vector for (token, seed), uniform in [-0.5, 0.5).
Eigen::VectorXd hashed_vector(std::string_view token, std::uint64_t seed, std::size_t dim);

/// Text format: `token v1 ... vdim` per line; an optional "<count> <dim>"
/// header line is skipped. Throws FormatError with the offending line.
EmbeddingTable load_embedding_text(const std::filesystem::path& path);
EmbeddingTable parse_embedding_text(std::string_view document);

/// Writes the text format with shortest round-trip decimal representation.
void write_embedding_text(const EmbeddingTable& table, const std::filesystem::path& path);
std::string to_embedding_text(const EmbeddingTable& table);

/// Trainable table with entries drawn uniformly from [-0.05, 0.05].
EmbeddingTable new_trainable_table(const std::vector<std::string>& symbols, std::size_t dim,
                                   std::uint64_t seed);

/// Padded/truncated embedding of one token sequence.
struct InputMatrix {
  RowMatrixXd values;          // max_len x dim
  std::vector<bool> mask;      // true = real token
  std::vector<std::ptrdiff_t> source_rows;  // table row per position, -1 for OOV or padding

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

InputMatrix embed_sequence(std::span<const std::string> tokens, const EmbeddingTable& table,
                           std::size_t max_len);

}  // namespace corpusscope
