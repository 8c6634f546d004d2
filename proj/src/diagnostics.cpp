#include "corpusscope/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "corpusscope/errors.hpp"

namespace corpusscope {

std::string to_string(OverlapMode m) { return m == OverlapMode::Bag ? "bag" : "contiguous"; }

OverlapMode parse_overlap_mode(std::string_view s) {
  if (s == "contiguous") return OverlapMode::Contiguous;
  if (s == "bag") return OverlapMode::Bag;
  throw InputError("unknown overlap mode '" + std::string(s) + "' (expected contiguous|bag)");
}

namespace {

// Length-prefixed concatenation, so distinct token sequences never collide.
std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = start; i < start + n; ++i) {
    key += std::to_string(tokens[i].size());
    key += ':';
    key += tokens[i];
  }
  return key;
}

std::vector<bool> contiguous_overlaps(const Corpus& corpus, std::size_t n) {
  constexpr std::size_t kMany = static_cast<std::size_t>(-1);
  // n-gram -> the single utterance holding it, or kMany once two distinct
  // utterances hold it.
  std::unordered_map<std::string, std::size_t> owner;
  std::vector<std::vector<std::string>> grams(corpus.size());
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    const auto& tokens = corpus[u].tokens;
    if (tokens.size() < n) continue;
    std::unordered_set<std::string> seen;
    for (std::size_t s = 0; s + n <= tokens.size(); ++s) {
      auto key = ngram_key(tokens, s, n);
      if (!seen.insert(key).second) continue;
      auto [it, fresh] = owner.emplace(key, u);
      if (!fresh && it->second != u) it->second = kMany;
      grams[u].push_back(std::move(key));
    }
  }
  std::vector<bool> overlapping(corpus.size(), false);
  for (std::size_t u = 0; u < corpus.size(); ++u)
    for (const auto& g : grams[u])
      if (owner.at(g) == kMany) {
        overlapping[u] = true;
        break;
      }
  return overlapping;
}

// Largest number of distinct token types each utterance shares with any
// other utterance.
std::vector<std::size_t> max_shared_types(const Corpus& corpus) {
  std::unordered_map<std::string, std::vector<std::size_t>> postings;
  std::vector<std::vector<std::string>> types(corpus.size());
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    std::unordered_set<std::string> distinct(corpus[u].tokens.begin(), corpus[u].tokens.end());
    types[u].assign(distinct.begin(), distinct.end());
    for (const auto& t : types[u]) postings[t].push_back(u);
  }
  std::vector<std::size_t> best(corpus.size(), 0);
  std::vector<std::size_t> counts(corpus.size(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    touched.clear();
    for (const auto& t : types[u]) {
      for (auto v : postings[t]) {
        if (v == u) continue;
        if (counts[v]++ == 0) touched.push_back(v);
      }
    }
    for (auto v : touched) {
      best[u] = std::max(best[u], counts[v]);
      counts[v] = 0;
    }
  }
  return best;
}

}  // namespace

OverlapCurve overlap_curve(const Corpus& corpus, int n_min, int n_max, OverlapMode mode) {
  if (n_min < 1) throw InputError("n_min must be at least 1");
  if (n_max < n_min) throw InputError("n_max must be at least n_min");
  OverlapCurve curve;
  curve.mode = mode;
  std::vector<std::size_t> shared;
  if (mode == OverlapMode::Bag) shared = max_shared_types(corpus);
  for (int n = n_min; n <= n_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    OverlapPoint p;
    p.n = n;
    std::vector<bool> hit;
    if (mode == OverlapMode::Contiguous) hit = contiguous_overlaps(corpus, un);
    for (std::size_t u = 0; u < corpus.size(); ++u) {
      if (corpus[u].tokens.size() < un) continue;
      ++p.considered;
      const bool overlaps = mode == OverlapMode::Contiguous ? hit[u] : shared[u] >= un;
      if (overlaps) ++p.overlapping;
    }
    if (p.considered > 0)
      p.proportion = static_cast<double>(p.overlapping) / static_cast<double>(p.considered);
    curve.points.push_back(p);
  }
  return curve;
}

// ---------------------------------------------------------------------------

std::size_t ConfidenceHistogram::total() const {
  std::size_t t = 0;
  for (const auto& b : brackets) t += b.total();
  return t;
}

double ConfidenceHistogram::mass_at_or_above(double lo) const {
  const auto all = total();
  if (all == 0) return 0.0;
  std::size_t above = 0;
  for (const auto& b : brackets)
    if (b.lo >= lo - 1e-12) above += b.total();
  return static_cast<double>(above) / static_cast<double>(all);
}

std::size_t bracket_count(double bracket_width) {
  if (!(bracket_width > 0.0 && bracket_width <= 1.0))
    throw InputError("bracket width must lie in (0, 1]");
  const double count = std::round(1.0 / bracket_width);
  if (std::abs(count * bracket_width - 1.0) > 1e-9)
    throw InputError(fmt::format("bracket width {} does not tile [0, 1] (1/width is not an integer)", bracket_width));
  return static_cast<std::size_t>(count);
}

ConfidenceHistogram make_histogram(double bracket_width) {
  const auto count = bracket_count(bracket_width);
  ConfidenceHistogram h;
  h.bracket_width = bracket_width;
  for (std::size_t i = 0; i < count; ++i)
    h.brackets.push_back({static_cast<double>(i) / static_cast<double>(count),
                          static_cast<double>(i + 1) / static_cast<double>(count), 0, 0});
  return h;
}

std::size_t bracket_index(double probability, std::size_t count) {
  const double c = static_cast<double>(count);
  const double p = std::clamp(probability, 0.0, 1.0);
  auto i = static_cast<std::size_t>(std::min(std::floor(p * c), c - 1.0));
  // Compare against the same edges the brackets report.
  while (i + 1 < count && p >= static_cast<double>(i + 1) / c) ++i;
  while (i > 0 && p < static_cast<double>(i) / c) --i;
  return i;
}

void add_to_histogram(ConfidenceHistogram& h, std::span<const double> probs, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= probs.size())
    throw InputError("target index out of range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  auto& b = h.brackets[bracket_index(probs[static_cast<std::size_t>(target)], h.brackets.size())];
  if (best == static_cast<std::size_t>(target))
    ++b.correct;
  else
    ++b.incorrect;
}

ConfidenceHistogram confidence_histogram(const EmotionModel& model, const Corpus& corpus, const Embeddings& emb,
                                         double bracket_width) {
  auto h = make_histogram(bracket_width);
  const auto& labels = model.labels();
  for (const auto& u : corpus.utterances()) {
    auto it = std::find(labels.begin(), labels.end(), u.label);
    if (it == labels.end()) throw PreconditionError("label '" + u.label + "' is unknown to the model");
    const auto probs = predict(model, u, emb);
    add_to_histogram(h, std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())),
                     static_cast<int>(it - labels.begin()));
  }
  return h;
}

ConfidenceHistogram confidence_histogram(std::span<const ScoredPrediction> predictions, double bracket_width) {
  auto h = make_histogram(bracket_width);
  for (const auto& p : predictions) add_to_histogram(h, p.probs, p.target);
  return h;
}

// ---------------------------------------------------------------------------

double ExclusivityReport::median_exclusivity() const {
  if (entries.empty()) return 0.0;
  std::vector<double> v;
  v.reserve(entries.size());
  for (const auto& e : entries) v.push_back(e.exclusivity);
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

ExclusivityReport exclusivity_report(const Corpus& corpus, std::size_t min_occurrences) {
  if (min_occurrences < 1) throw InputError("min_occurrences must be at least 1");
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& u : corpus.utterances())
    for (const auto& t : u.tokens) ++counts[t][u.label];

  ExclusivityReport report;
  for (auto& [token, by_label] : counts) {
    ExclusivityEntry e;
    e.token = token;
    std::size_t top = 0;
    for (const auto& [label, n] : by_label) {
      e.total += n;
      if (n > top) {
        top = n;
        e.dominant_label = label;
      }
    }
    if (e.total < min_occurrences) continue;
    e.exclusivity = static_cast<double>(top) / static_cast<double>(e.total);
    e.label_counts = std::move(by_label);
    report.entries.push_back(std::move(e));
  }
  std::sort(report.entries.begin(), report.entries.end(), [](const ExclusivityEntry& a, const ExclusivityEntry& b) {
    if (a.exclusivity != b.exclusivity) return a.exclusivity > b.exclusivity;
    if (a.total != b.total) return a.total > b.total;
    return a.token < b.token;
  });
  return report;
}

}  // namespace corpusscope
