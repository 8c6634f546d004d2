#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpusscope/corpus.hpp"
#include "corpusscope/emomodel.hpp"
#include "corpusscope/evalharness.hpp"

namespace corpusscope {

// ---------------------------------------------------------------------------
// Lexical overlap

enum class OverlapMode {
  /// Shares a contiguous n-token subsequence with another utterance.
  Contiguous,
  /// Shares at least n distinct token types with another utterance.
  Bag,
};

std::string to_string(OverlapMode m);
OverlapMode parse_overlap_mode(std::string_view s);

struct OverlapPoint {
  int n = 0;
  std::size_t considered = 0;   // utterances with >= n tokens
  std::size_t overlapping = 0;
  /// overlapping / considered; empty when nothing was considered.
  std::optional<double> proportion;
};

struct OverlapCurve {
  OverlapMode mode = OverlapMode::Contiguous;
  std::vector<OverlapPoint> points;
};

/// Inverted-index implementation. Utterances never match themselves;
/// distinct utterances with identical text do.
OverlapCurve overlap_curve(const Corpus& corpus, int n_min, int n_max, OverlapMode mode);

// ---------------------------------------------------------------------------
// Target-label confidence

struct ConfidenceBracket {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;

  std::size_t total() const { return correct + incorrect; }
};

/// Brackets tile [0, 1]: [i*w, (i+1)*w), the last one closed at 1.0.
struct ConfidenceHistogram {
  double bracket_width = 0.05;
  std::vector<ConfidenceBracket> brackets;

  std::size_t total() const;
  /// Share of scored utterances whose bracket starts at or above `lo`.
  double mass_at_or_above(double lo) const;
};

/// Number of brackets for `width`; throws InputError unless 1/width is
/// integral.
std::size_t bracket_count(double bracket_width);

/// Empty histogram with all brackets laid out.
ConfidenceHistogram make_histogram(double bracket_width);

/// Bracket index for a probability in [0, 1].
std::size_t bracket_index(double probability, std::size_t count);

/// Adds one scored utterance: the true label's probability picks the
/// bracket; correct iff argmax (lowest index on ties) equals the target.
void add_to_histogram(ConfidenceHistogram& h, std::span<const double> probs, int target);

ConfidenceHistogram confidence_histogram(const EmotionModel& model, const Corpus& corpus, const Embeddings& emb,
                                         double bracket_width = 0.05);

/// Histogram over precomputed (e.g. out-of-fold) predictions.
ConfidenceHistogram confidence_histogram(std::span<const ScoredPrediction> predictions,
                                         double bracket_width = 0.05);

// ---------------------------------------------------------------------------
// Lexical exclusivity

struct ExclusivityEntry {
  std::string token;
  std::map<std::string, std::size_t> label_counts;
  std::size_t total = 0;
  double exclusivity = 0.0;  // largest label share
  std::string dominant_label;
};

struct ExclusivityReport {
  std::vector<ExclusivityEntry> entries;
  double median_exclusivity() const;
};

/// Tokens with at least `min_occurrences` occurrences, sorted by
/// exclusivity then count (descending), then token.
ExclusivityReport exclusivity_report(const Corpus& corpus, std::size_t min_occurrences);

}  // namespace corpusscope
