#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpusscope/corpus.hpp"

namespace corpusscope {

/// Controls a synthetic corpus mixing near-duplicate "scripted" copies of a
/// template pool with fresh "improvised" sentences.
struct SynthConfig {
  std::string name = "synth";
  int n_utterances = 1000;
  int n_labels = 4;
  int vocab_size = 2000;
  int min_sentence_len = 6;
  int max_sentence_len = 14;
  int template_count = 80;
  /// Share of utterances drawn from the template pool.
  double duplication_rate = 0.5;
  /// Probability that a sentence carries one label-indicative cue token.
  double label_signal_strength = 0.5;
  /// Random token substitutions applied to each template copy.
  int paraphrase_noise = 1;
  int cues_per_label = 3;
  /// Distinct frame IDs for ordinary tokens; 0 emits no frame stream.
  int frame_inventory = 64;
  std::uint64_t seed = 0;

  /// Throws InputError on invalid ranges.
  void validate() const;
  /// Number of template copies: ceil(duplication_rate * n_utterances).
  std::size_t scripted_count() const;
};

nlohmann::ordered_json to_json(const SynthConfig& c);

/// Label names shared by every generated corpus with `n_labels` labels.
std::vector<std::string> synth_labels(int n_labels);

/// Cue token `index` of `label`; identical across corpora.
std::string cue_token(const std::string& label, int index);

Corpus generate(const SynthConfig& config);

/// Two corpora with the same label and cue conventions. If both configs
/// carry the same seed the second one's seed is re-derived so the pair is
/// independent.
std::pair<Corpus, Corpus> generate_pair(const SynthConfig& source, SynthConfig target);

}  // namespace corpusscope
