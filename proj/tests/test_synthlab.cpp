#include <doctest.h>

#include <map>
#include <set>

#include "corpusscope/diagnostics.hpp"
#include "corpusscope/errors.hpp"
#include "corpusscope/synthlab.hpp"
#include "oracles.hpp"

using namespace corpusscope;

TEST_CASE("scripted count follows the duplication rate") {
  SynthConfig c;
  c.n_utterances = 100;
  c.duplication_rate = 0.5;
  const auto corpus = generate(c);
  CHECK(filter_by_tag(corpus, "scripted").size() == 50);
  CHECK(filter_by_tag(corpus, "improvised").size() == 50);

  c.n_utterances = 7;
  c.duplication_rate = 0.3;  // 2.1 rounds up
  CHECK(c.scripted_count() == 3);
  c.duplication_rate = 0.0;
  CHECK(c.scripted_count() == 0);
}

TEST_CASE("full duplication without noise overlaps completely at the minimum length") {
  SynthConfig c;
  c.n_utterances = 200;
  c.duplication_rate = 1.0;
  c.paraphrase_noise = 0;
  c.template_count = 10;
  c.seed = 3;
  const auto corpus = generate(c);
  const auto curve = overlap_curve(corpus, c.min_sentence_len, c.min_sentence_len, OverlapMode::Contiguous);
  CHECK(curve.points[0].considered == corpus.size());
  CHECK(*curve.points[0].proportion == 1.0);
  CHECK(oracle::same_curve(curve, oracle::overlap_curve(corpus, c.min_sentence_len, c.min_sentence_len,
                                                        OverlapMode::Contiguous)));
}

TEST_CASE("no duplication gives near-zero contiguous overlap") {
  SynthConfig c;
  c.n_utterances = 300;
  c.duplication_rate = 0.0;
  c.vocab_size = 1000;
  c.seed = 4;
  const auto corpus = generate(c);
  const auto curve = overlap_curve(corpus, 4, 10, OverlapMode::Contiguous);
  CHECK(oracle::same_curve(curve, oracle::overlap_curve(corpus, 4, 10, OverlapMode::Contiguous)));
  for (const auto& p : curve.points) CHECK(*p.proportion <= 0.01);
}

TEST_CASE("generation is a pure function of the config") {
  SynthConfig c;
  c.n_utterances = 150;
  c.seed = 11;
  CHECK(to_jsonl(generate(c)) == to_jsonl(generate(c)));
  SynthConfig d = c;
  d.seed = 12;
  CHECK(to_jsonl(generate(c)) != to_jsonl(generate(d)));
}

TEST_CASE("tags partition every generated corpus") {
  for (double rate : {0.0, 0.25, 0.6, 1.0}) {
    SynthConfig c;
    c.n_utterances = 120;
    c.duplication_rate = rate;
    const auto corpus = generate(c);
    for (const auto& u : corpus.utterances()) {
      CHECK(u.tags.size() == 1);
      CHECK((u.has_tag("scripted") != u.has_tag("improvised")));
    }
  }
}

TEST_CASE("labels are balanced") {
  for (int labels : {2, 4, 5}) {
    SynthConfig c;
    c.n_labels = labels;
    c.n_utterances = 20 * labels;
    c.template_count = 3 * labels;
    const auto h = class_histogram(generate(c));
    CHECK(h.size() == static_cast<std::size_t>(labels));
    for (const auto& [l, n] : h) CHECK(n == 20);
  }
}

TEST_CASE("label signal strength controls cue injection") {
  SynthConfig c;
  c.n_utterances = 200;
  c.duplication_rate = 0.0;
  c.label_signal_strength = 1.0;
  const auto cued = generate(c);
  for (const auto& u : cued.utterances()) {
    int cues = 0;
    for (const auto& t : u.tokens)
      if (t.rfind("cue-" + u.label + "-", 0) == 0) ++cues;
    CHECK(cues == 1);
  }
  c.label_signal_strength = 0.0;
  const auto plain = generate(c);
  for (const auto& u : plain.utterances())
    for (const auto& t : u.tokens) CHECK(t.rfind("cue-", 0) != 0);
}

TEST_CASE("frame streams") {
  SynthConfig c;
  c.n_utterances = 40;
  const auto with = generate(c);
  for (const auto& u : with.utterances()) CHECK(u.frames.size() == u.tokens.size());
  c.frame_inventory = 0;
  const auto without = generate(c);
  for (const auto& u : without.utterances()) CHECK(u.frames.empty());
}

TEST_CASE("generated corpora survive a JSONL round trip") {
  SynthConfig c;
  c.n_utterances = 60;
  const auto corpus = generate(c);
  const auto back = parse_corpus(to_jsonl(corpus), CorpusFormat::Jsonl, corpus.name());
  CHECK(to_jsonl(back) == to_jsonl(corpus));
}

TEST_CASE("config validation") {
  SynthConfig c;
  c.vocab_size = 5;
  c.max_sentence_len = 14;
  CHECK_THROWS_AS(generate(c), InputError);
  c = SynthConfig{};
  c.duplication_rate = 1.5;
  CHECK_THROWS_AS(generate(c), InputError);
  c = SynthConfig{};
  c.min_sentence_len = 9;
  c.max_sentence_len = 8;
  CHECK_THROWS_AS(generate(c), InputError);
}

TEST_CASE("generate_pair") {
  SynthConfig a;
  a.n_utterances = 100;
  a.seed = 5;
  SUBCASE("identical configs still give disjoint ids") {
    const auto [x, y] = generate_pair(a, a);
    std::set<std::string> ids;
    for (const auto& u : x.utterances()) ids.insert(u.id);
    for (const auto& u : y.utterances()) CHECK(ids.count(u.id) == 0);
    CHECK(to_jsonl(x) != to_jsonl(y));
  }
  SUBCASE("shared label vocabulary") {
    SynthConfig b = a;
    b.seed = 6;
    b.duplication_rate = 0.0;
    b.name = "other";
    const auto [x, y] = generate_pair(a, b);
    CHECK(x.labels() == y.labels());
    CHECK(x.labels() == std::vector<std::string>{"angry", "happy", "neutral", "sad"});
  }
  SUBCASE("label count mismatch") {
    SynthConfig b = a;
    b.n_labels = 3;
    CHECK_THROWS_AS(generate_pair(a, b), InputError);
  }
}
