#include <doctest.h>

#include <cmath>

#include "corpusscope/diagnostics.hpp"
#include "corpusscope/errors.hpp"
#include "corpusscope/synthlab.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace corpusscope;
using namespace corpusscope::testing;

namespace {

Corpus three_sentences() {
  return Corpus("three", {make_utterance("s1", "a b c d", "x"), make_utterance("s2", "a b c d", "y"),
                          make_utterance("s3", "x y z", "x")});
}

std::vector<double> random_probs(Rng& rng, std::size_t classes) {
  std::vector<double> p(classes);
  double sum = 0;
  // Occasionally very peaked, to populate the top brackets.
  const double power = bernoulli(rng, 0.5) ? 1.0 : 8.0;
  for (auto& v : p) sum += (v = std::pow(uniform01(rng), power) + 1e-12);
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

TEST_CASE("overlap_curve on three sentences") {
  const auto c = three_sentences();
  const auto curve = overlap_curve(c, 3, 4, OverlapMode::Contiguous);
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[0].n == 3);
  CHECK(curve.points[0].considered == 3);
  CHECK(curve.points[0].overlapping == 2);
  CHECK(*curve.points[0].proportion == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(curve.points[1].considered == 2);
  CHECK(curve.points[1].overlapping == 2);
  CHECK(*curve.points[1].proportion == 1.0);

  const auto beyond = overlap_curve(c, 5, 5, OverlapMode::Contiguous);
  CHECK(beyond.points[0].considered == 0);
  CHECK_FALSE(beyond.points[0].proportion.has_value());
}

TEST_CASE("overlap_curve argument checks") {
  CHECK_THROWS_AS(overlap_curve(three_sentences(), 0, 3, OverlapMode::Bag), InputError);
  CHECK_THROWS_AS(overlap_curve(three_sentences(), 4, 3, OverlapMode::Bag), InputError);
  CHECK(parse_overlap_mode("bag") == OverlapMode::Bag);
  CHECK_THROWS_AS(parse_overlap_mode("fuzzy"), InputError);
}

TEST_CASE("disjoint vocabularies never overlap") {
  std::vector<Utterance> us;
  for (int i = 0; i < 30; ++i) {
    std::string text;
    for (int j = 0; j < 1 + i % 9; ++j) text += "u" + std::to_string(i) + "t" + std::to_string(j) + " ";
    us.push_back(make_utterance("d" + std::to_string(i), text, "x"));
  }
  const Corpus c("disjoint", std::move(us));
  for (auto mode : {OverlapMode::Contiguous, OverlapMode::Bag})
    for (const auto& p : overlap_curve(c, 1, 10, mode).points)
      if (p.proportion) CHECK(*p.proportion == 0.0);
}

TEST_CASE("an utterance never matches itself") {
  const Corpus c("one", {make_utterance("a", "p q r p q r", "x"), make_utterance("b", "s t", "x")});
  for (auto mode : {OverlapMode::Contiguous, OverlapMode::Bag})
    for (const auto& p : overlap_curve(c, 1, 3, mode).points) CHECK(p.overlapping == 0);
}

TEST_CASE("overlap_curve equals the pairwise oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const auto c = random_corpus(rng, 80);
    for (auto mode : {OverlapMode::Contiguous, OverlapMode::Bag}) {
      CAPTURE(trial);
      CHECK(oracle::same_curve(overlap_curve(c, 1, 10, mode), oracle::overlap_curve(c, 1, 10, mode)));
    }
  }
}

TEST_CASE("overlap_curve ignores corpus order") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_corpus(rng, 60);
    std::vector<std::size_t> order(c.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    const auto permuted = c.subset(order);
    for (auto mode : {OverlapMode::Contiguous, OverlapMode::Bag})
      CHECK(oracle::same_curve(overlap_curve(c, 1, 8, mode), overlap_curve(permuted, 1, 8, mode)));
  }
}

TEST_CASE("contiguous overlap is non-increasing in n on fixed-length corpora") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Utterance> us;
    for (int i = 0; i < 50; ++i) {
      std::string text;
      for (int j = 0; j < 8; ++j) text += "w" + std::to_string(uniform_index(rng, 6)) + " ";
      us.push_back(make_utterance("f" + std::to_string(i), text, "x"));
    }
    const auto curve = overlap_curve(Corpus("fixed", std::move(us)), 1, 8, OverlapMode::Contiguous);
    for (std::size_t i = 1; i < curve.points.size(); ++i)
      CHECK(*curve.points[i].proportion <= *curve.points[i - 1].proportion);
  }
}

TEST_CASE("bracket layout") {
  CHECK(bracket_count(0.05) == 20);
  CHECK(bracket_count(0.1) == 10);
  CHECK(bracket_count(1.0) == 1);
  CHECK_THROWS_AS(bracket_count(0.03), InputError);
  CHECK_THROWS_AS(bracket_count(0.0), InputError);
  CHECK_THROWS_AS(bracket_count(1.5), InputError);
  const auto h = make_histogram(0.05);
  REQUIRE(h.brackets.size() == 20);
  CHECK(h.brackets.front().lo == 0.0);
  CHECK(h.brackets.back().hi == 1.0);
  for (std::size_t i = 1; i < h.brackets.size(); ++i) CHECK(h.brackets[i].lo == h.brackets[i - 1].hi);
  CHECK(bracket_index(1.0, 20) == 19);
  CHECK(bracket_index(0.0, 20) == 0);
  CHECK(bracket_index(0.95, 20) == 19);
  CHECK(bracket_index(0.5, 20) == 10);
  CHECK(bracket_index(0.3, 10) == 3);
  CHECK(bracket_index(std::nextafter(0.3, 0.0), 10) == 2);
}

TEST_CASE("confidence histogram examples") {
  SUBCASE("confident and correct") {
    auto h = make_histogram(0.05);
    add_to_histogram(h, std::vector<double>{0.97, 0.01, 0.01, 0.01}, 0);
    CHECK(h.brackets[19].lo == doctest::Approx(0.95));
    CHECK(h.brackets[19].correct == 1);
    CHECK(h.total() == 1);
    CHECK(h.mass_at_or_above(0.95) == 1.0);
  }
  SUBCASE("low target probability and wrong") {
    auto h = make_histogram(0.05);
    add_to_histogram(h, std::vector<double>{0.26, 0.25, 0.24, 0.25}, 1);
    CHECK(h.brackets[5].lo == doctest::Approx(0.25));
    CHECK(h.brackets[5].incorrect == 1);
    CHECK(h.brackets[5].correct == 0);
  }
  SUBCASE("ties resolve to the lowest index") {
    auto h = make_histogram(0.1);
    add_to_histogram(h, std::vector<double>{0.5, 0.5}, 1);
    CHECK(h.brackets[5].incorrect == 1);
  }
  SUBCASE("target out of range") {
    auto h = make_histogram(0.1);
    CHECK_THROWS_AS(add_to_histogram(h, std::vector<double>{0.5, 0.5}, 2), InputError);
  }
}

TEST_CASE("confidence histograms are sound for any predictions") {
  Rng rng(31);
  for (double width : {0.05, 0.1, 0.25, 0.5}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ScoredPrediction> preds;
      const std::size_t n = 1 + uniform_index(rng, 400);
      for (std::size_t i = 0; i < n; ++i) {
        ScoredPrediction p;
        p.index = i;
        p.probs = random_probs(rng, 4);
        p.target = static_cast<int>(uniform_index(rng, 4));
        preds.push_back(p);
      }
      const auto h = confidence_histogram(preds, width);
      CHECK(h.total() == n);
      for (const auto& b : h.brackets)
        if (b.lo >= 0.5) CHECK(b.incorrect == 0);
    }
  }
}

TEST_CASE("confidence histogram from a model") {
  const auto corpus = separable_toy_corpus();
  const auto words = hashed_words(8);
  const Embeddings emb{&words, nullptr};
  Rng rng(3);
  const auto m = build_model(small_config(Variant::Fusion), corpus.labels(), collect_frame_symbols(corpus), rng);
  const auto h = confidence_histogram(m, corpus, emb, 0.05);
  CHECK(h.total() == corpus.size());
  for (const auto& b : h.brackets)
    if (b.lo >= 0.5) CHECK(b.incorrect == 0);
  CHECK_THROWS_AS(confidence_histogram(m, corpus, emb, 0.03), InputError);
}

TEST_CASE("exclusivity examples") {
  std::vector<Utterance> us;
  for (int i = 0; i < 5; ++i) us.push_back(make_utterance("a" + std::to_string(i), "beast", "angry"));
  us.push_back(make_utterance("m1", "maybe", "happy"));
  us.push_back(make_utterance("m2", "maybe", "happy"));
  us.push_back(make_utterance("m3", "maybe maybe", "sad"));
  const Corpus c("ex", std::move(us));
  const auto r = exclusivity_report(c, 1);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].token == "beast");
  CHECK(r.entries[0].exclusivity == 1.0);
  CHECK(r.entries[0].total == 5);
  CHECK(r.entries[0].dominant_label == "angry");
  CHECK(r.entries[1].token == "maybe");
  CHECK(r.entries[1].exclusivity == 0.5);
  CHECK(r.entries[1].total == 4);
  CHECK(exclusivity_report(c, 5).entries.size() == 1);
  CHECK(exclusivity_report(c, 6).entries.empty());
  CHECK_THROWS_AS(exclusivity_report(c, 0), InputError);
}

TEST_CASE("exclusivity totals match corpus token counts") {
  Rng rng(5);
  const auto c = random_corpus(rng, 150);
  std::size_t tokens = 0;
  for (const auto& u : c.utterances()) tokens += u.tokens.size();
  std::size_t reported = 0;
  const auto r = exclusivity_report(c, 1);
  for (const auto& e : r.entries) {
    reported += e.total;
    CHECK(e.exclusivity > 0.0);
    CHECK(e.exclusivity <= 1.0);
  }
  CHECK(reported == tokens);
  for (std::size_t i = 1; i < r.entries.size(); ++i) CHECK(r.entries[i - 1].exclusivity >= r.entries[i].exclusivity);
}

TEST_CASE("template-heavy corpora have more exclusive vocabulary") {
  SynthConfig random;
  random.n_utterances = 800;
  random.vocab_size = 300;
  random.duplication_rate = 0.0;
  random.label_signal_strength = 0.0;
  random.seed = 1;
  SynthConfig scripted = random;
  scripted.duplication_rate = 1.0;
  scripted.template_count = 12;
  scripted.paraphrase_noise = 0;
  scripted.seed = 2;
  const double random_median = exclusivity_report(generate(random), 3).median_exclusivity();
  const double scripted_median = exclusivity_report(generate(scripted), 3).median_exclusivity();
  CHECK(random_median < scripted_median);
}
