#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace corpusscope {

struct Utterance {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  /// Parallel frame-ID stream; need not align with tokens. Empty when the
  /// source record carried none.
  std::vector<std::string> frames;
  std::string label;
  std::set<std::string> tags;

  bool has_tag(std::string_view tag) const { return tags.find(std::string(tag)) != tags.end(); }
};

/// Ordered utterance collection. Label vocabulary is the sorted set of
/// labels present, so two corpora over the same label set always agree on
/// label indices.
class Corpus {
 public:
  Corpus() = default;
  /// Validates id uniqueness and non-empty tokens; throws InputError.
  Corpus(std::string name, std::vector<Utterance> utterances);

  const std::string& name() const { return name_; }
  const std::vector<Utterance>& utterances() const { return utterances_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return utterances_.size(); }
  bool empty() const { return utterances_.empty(); }
  const Utterance& operator[](std::size_t i) const { return utterances_[i]; }

  /// Index of `label` in labels(), or -1.
  int label_index(std::string_view label) const;

  /// Sub-corpus of the given positions, in the given order.
  Corpus subset(const std::vector<std::size_t>& indices, std::string name = {}) const;

 private:
  std::string name_;
  std::vector<Utterance> utterances_;
  std::vector<std::string> labels_;
};

enum class CorpusFormat { Jsonl, Csv };

/// Lowercase, strip .,!?;:"()[] and split on whitespace. Apostrophes stay.
std::vector<std::string> tokenize(std::string_view text);

/// Picks the format from the file extension (.csv -> Csv, otherwise Jsonl).
CorpusFormat format_from_path(const std::filesystem::path& path);

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus load_corpus(const std::filesystem::path& path);

/// Parses corpus records from an in-memory document. `name` becomes the
/// corpus name.
Corpus parse_corpus(std::string_view document, CorpusFormat format, std::string name);

/// One JSON object per line in the ingest schema.
void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
std::string to_jsonl(const Corpus& corpus);

struct LabelMapping {
  std::map<std::string, std::string> rules;
  std::set<std::string> drop;

  /// Maps every label in `labels` to itself.
  static LabelMapping identity(const std::vector<std::string>& labels);
  /// Throws MappingError if rules and drop overlap or a target is empty.
  void validate() const;
};

Corpus apply_label_mapping(const Corpus& corpus, const LabelMapping& mapping);

Corpus filter_by_tag(const Corpus& corpus, std::string_view tag);
/// Utterances NOT carrying `tag`.
Corpus filter_without_tag(const Corpus& corpus, std::string_view tag);

std::map<std::string, std::size_t> class_histogram(const Corpus& corpus);
std::map<std::string, std::size_t> tag_histogram(const Corpus& corpus);

}  // namespace corpusscope
