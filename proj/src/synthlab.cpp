#include "corpusscope/synthlab.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "corpusscope/errors.hpp"
#include "corpusscope/rng.hpp"

namespace corpusscope {

void SynthConfig::validate() const {
  if (n_utterances < 1) throw InputError("n_utterances must be positive");
  if (n_labels < 1) throw InputError("n_labels must be positive");
  if (min_sentence_len < 1 || max_sentence_len < min_sentence_len)
    throw InputError("sentence length range must satisfy 1 <= min <= max");
  if (vocab_size < max_sentence_len)
    throw InputError(fmt::format("vocab_size {} is too small for sentences of up to {} tokens", vocab_size,
                                 max_sentence_len));
  if (!(duplication_rate >= 0.0 && duplication_rate <= 1.0)) throw InputError("duplication_rate must lie in [0, 1]");
  if (!(label_signal_strength >= 0.0 && label_signal_strength <= 1.0))
    throw InputError("label_signal_strength must lie in [0, 1]");
  if (paraphrase_noise < 0) throw InputError("paraphrase_noise must be non-negative");
  if (cues_per_label < 1) throw InputError("cues_per_label must be positive");
  if (frame_inventory < 0) throw InputError("frame_inventory must be non-negative");
  if (scripted_count() > 0 && template_count < n_labels)
    throw InputError("template_count must be at least n_labels when duplication_rate > 0");
}

std::size_t SynthConfig::scripted_count() const {
  return static_cast<std::size_t>(std::ceil(duplication_rate * n_utterances - 1e-9));
}

nlohmann::ordered_json to_json(const SynthConfig& c) {
  return {{"name", c.name},
          {"n_utterances", c.n_utterances},
          {"n_labels", c.n_labels},
          {"vocab_size", c.vocab_size},
          {"min_sentence_len", c.min_sentence_len},
          {"max_sentence_len", c.max_sentence_len},
          {"template_count", c.template_count},
          {"duplication_rate", c.duplication_rate},
          {"label_signal_strength", c.label_signal_strength},
          {"paraphrase_noise", c.paraphrase_noise},
          {"cues_per_label", c.cues_per_label},
          {"frame_inventory", c.frame_inventory},
          {"seed", c.seed}};
}

std::vector<std::string> synth_labels(int n_labels) {
  if (n_labels == 4) return {"angry", "happy", "neutral", "sad"};
  std::vector<std::string> out;
  for (int i = 0; i < n_labels; ++i) out.push_back(fmt::format("label{:03}", i));
  return out;
}

std::string cue_token(const std::string& label, int index) { return fmt::format("cue-{}-{}", label, index); }

namespace {

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : c_(c), rng_(derive_seed(c.seed, "synth")), labels_(synth_labels(c.n_labels)) {}

  std::string word() {
    return fmt::format("w{:05}", uniform_index(rng_, static_cast<std::uint64_t>(c_.vocab_size)));
  }

  std::vector<std::string> sentence(int label) {
    const auto span = static_cast<std::uint64_t>(c_.max_sentence_len - c_.min_sentence_len + 1);
    const auto len = static_cast<std::size_t>(c_.min_sentence_len) + uniform_index(rng_, span);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i) tokens.push_back(word());
    if (bernoulli(rng_, c_.label_signal_strength)) {
      const auto cue = static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(c_.cues_per_label)));
      const auto pos = uniform_index(rng_, tokens.size() + 1);
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos), cue_token(labels_[static_cast<std::size_t>(label)], cue));
    }
    return tokens;
  }

  void paraphrase(std::vector<std::string>& tokens) {
    for (int k = 0; k < c_.paraphrase_noise; ++k) tokens[uniform_index(rng_, tokens.size())] = word();
  }

  std::vector<std::string> frames(const std::vector<std::string>& tokens) const {
    std::vector<std::string> out;
    if (c_.frame_inventory == 0) return out;
    for (const auto& t : tokens) {
      if (t.rfind("cue-", 0) == 0) {
        out.push_back("frame-" + t.substr(4, t.rfind('-') - 4));
      } else {
        out.push_back(fmt::format("frame{:03}", fnv1a64(t) % static_cast<std::uint64_t>(c_.frame_inventory)));
      }
    }
    return out;
  }

  Corpus run() {
    const auto n = static_cast<std::size_t>(c_.n_utterances);
    const auto labels = static_cast<std::size_t>(c_.n_labels);
    const auto scripted = c_.scripted_count();

    // Template pool, labels assigned round-robin.
    std::vector<std::vector<std::size_t>> templates_by_label(labels);
    std::vector<std::vector<std::string>> templates;
    if (scripted > 0) {
      for (int t = 0; t < c_.template_count; ++t) {
        const auto label = static_cast<std::size_t>(t) % labels;
        templates_by_label[label].push_back(templates.size());
        templates.push_back(sentence(static_cast<int>(label)));
      }
    }

    struct Draft {
      std::vector<std::string> tokens;
      std::size_t label;
      bool scripted;
    };
    std::vector<Draft> drafts;
    drafts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto label = i % labels;
      if (i < scripted) {
        const auto& pool = templates_by_label[label];
        auto tokens = templates[pool[(i / labels) % pool.size()]];
        paraphrase(tokens);
        drafts.push_back({std::move(tokens), label, true});
      } else {
        drafts.push_back({sentence(static_cast<int>(label)), label, false});
      }
    }
    shuffle(drafts, rng_);

    std::vector<Utterance> utterances;
    utterances.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& d = drafts[i];
      Utterance u;
      u.id = fmt::format("{}-s{}-{:06}", c_.name, c_.seed, i);
      u.label = labels_[d.label];
      u.frames = frames(d.tokens);
      u.tags = {d.scripted ? "scripted" : "improvised"};
      for (const auto& t : d.tokens) u.text += (u.text.empty() ? "" : " ") + t;
      u.tokens = std::move(d.tokens);
      utterances.push_back(std::move(u));
    }
    return Corpus(c_.name, std::move(utterances));
  }

 private:
  const SynthConfig& c_;
  Rng rng_;
  std::vector<std::string> labels_;
};

}  // namespace

Corpus generate(const SynthConfig& config) {
  config.validate();
  return Generator(config).run();
}

std::pair<Corpus, Corpus> generate_pair(const SynthConfig& source, SynthConfig target) {
  if (source.n_labels != target.n_labels)
    throw InputError(fmt::format("label counts differ: {} vs {}", source.n_labels, target.n_labels));
  if (target.seed == source.seed) target.seed = derive_seed(source.seed, "pair-target");
  return {generate(source), generate(target)};
}

}  // namespace corpusscope
