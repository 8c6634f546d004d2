#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "corpusscope/evalharness.hpp"
#include "corpusscope/errors.hpp"
#include "corpusscope/synthlab.hpp"
#include "test_support.hpp"

using namespace corpusscope;
using namespace corpusscope::testing;

namespace {

Corpus sized_corpus(std::size_t n, int labels = 4) {
  std::vector<Utterance> us;
  for (std::size_t i = 0; i < n; ++i)
    us.push_back(make_utterance("u" + std::to_string(i), "tok" + std::to_string(i % 13) + " x y",
                                "l" + std::to_string(i % static_cast<std::size_t>(labels))));
  return Corpus("sized", std::move(us));
}

void check_plan_invariants(const FoldPlan& plan, std::size_t n) {
  REQUIRE(plan.assignments.size() == n);
  const auto sizes = plan.fold_sizes();
  REQUIRE(sizes.size() == static_cast<std::size_t>(plan.k));
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);

  std::vector<int> test_hits(n, 0);
  for (int i = 0; i < plan.k; ++i) {
    CHECK(plan.test_fold(i) == i);
    CHECK(plan.validation_fold(i) == (i + 1) % plan.k);
    std::vector<int> seen(n, 0);
    for (auto idx : plan.test_indices(i)) {
      ++seen[idx];
      ++test_hits[idx];
      CHECK(plan.assignments[idx] == i);
    }
    for (auto idx : plan.validation_indices(i)) {
      ++seen[idx];
      CHECK(plan.assignments[idx] == (i + 1) % plan.k);
    }
    for (auto idx : plan.train_indices(i)) {
      ++seen[idx];
      CHECK(plan.assignments[idx] != i);
      CHECK(plan.assignments[idx] != (i + 1) % plan.k);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }
  CHECK(std::all_of(test_hits.begin(), test_hits.end(), [](int s) { return s == 1; }));
}

struct SmallExperiment {
  Corpus corpus;
  EmbeddingTable words = hashed_words(8);
  ModelConfig mc = small_config(Variant::Word);
  TrainConfig tc;

  SmallExperiment() {
    SynthConfig sc;
    sc.n_utterances = 80;
    sc.vocab_size = 300;
    sc.min_sentence_len = 4;
    sc.max_sentence_len = 8;
    sc.template_count = 8;
    sc.label_signal_strength = 1.0;
    sc.seed = 4;
    corpus = generate(sc);
    mc.max_len = 8;
    tc.epochs = 4;
    tc.batch_size = 10;
    tc.seed = 12;
  }
  Embeddings emb() const { return {&words, nullptr}; }
};

}  // namespace

TEST_CASE("fold plans for 10, 37 and 5616 utterances") {
  for (std::size_t n : {10, 37, 5616}) {
    CAPTURE(n);
    for (bool stratified : {false, true}) {
      const auto plan = make_fold_plan(sized_corpus(n), 10, 3, stratified);
      check_plan_invariants(plan, n);
    }
  }
  SUBCASE("10 utterances give 8-1-1 per fold") {
    const auto plan = make_fold_plan(sized_corpus(10), 10, 1);
    for (int i = 0; i < 10; ++i) {
      CHECK(plan.train_indices(i).size() == 8);
      CHECK(plan.validation_indices(i).size() == 1);
      CHECK(plan.test_indices(i).size() == 1);
    }
  }
  SUBCASE("5616 utterances give folds of 561 or 562") {
    for (auto s : make_fold_plan(sized_corpus(5616), 10, 1).fold_sizes()) CHECK((s == 561 || s == 562));
  }
}

TEST_CASE("fold plans are seeded") {
  const auto c = sized_corpus(100);
  CHECK(make_fold_plan(c, 10, 7).assignments == make_fold_plan(c, 10, 7).assignments);
  CHECK(make_fold_plan(c, 10, 7).assignments != make_fold_plan(c, 10, 8).assignments);
}

TEST_CASE("fold plan preconditions") {
  CHECK_THROWS_AS(make_fold_plan(sized_corpus(9), 10, 1), PreconditionError);
  CHECK_THROWS_AS(make_fold_plan(sized_corpus(9), 1, 1), PreconditionError);
}

TEST_CASE("stratified plans balance each label within one sample per fold") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + uniform_index(rng, 300);
    std::vector<Utterance> us;
    for (std::size_t i = 0; i < n; ++i) {
      // Skewed label distribution.
      const double r = uniform01(rng);
      const std::string label = r < 0.5 ? "a" : r < 0.8 ? "b" : r < 0.95 ? "c" : "d";
      us.push_back(make_utterance("u" + std::to_string(i), "w", label));
    }
    const Corpus c("s", std::move(us));
    const int k = 2 + static_cast<int>(uniform_index(rng, 9));
    const auto plan = make_fold_plan(c, k, rng(), true);
    check_plan_invariants(plan, n);
    for (const auto& label : c.labels()) {
      std::vector<int> per_fold(static_cast<std::size_t>(k), 0);
      for (std::size_t i = 0; i < n; ++i)
        if (c[i].label == label) ++per_fold[static_cast<std::size_t>(plan.assignments[i])];
      CHECK(*std::max_element(per_fold.begin(), per_fold.end()) - *std::min_element(per_fold.begin(), per_fold.end()) <= 1);
    }
  }
}

TEST_CASE("mean and sample standard deviation") {
  const auto two = mean_and_sample_std({60.0, 70.0});
  CHECK(two.mean == doctest::Approx(65.0).epsilon(1e-15));
  CHECK(two.std == doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
  CHECK(two.std == doctest::Approx(7.071).epsilon(1e-4));
  CHECK(mean_and_sample_std({42.5, 42.5, 42.5}).std == 0.0);
  CHECK(mean_and_sample_std({3.0}).std == 0.0);
}

TEST_CASE("accuracy of a constant predictor on a skewed 4656-utterance corpus") {
  std::vector<Utterance> us;
  const std::map<std::string, int> counts{{"anger", 665}, {"happy", 1558}, {"neutral", 1794}, {"sad", 639}};
  for (const auto& [label, n] : counts)
    for (int i = 0; i < n; ++i) us.push_back(make_utterance(label + std::to_string(i), "same words here", label));
  const Corpus c("skewed", std::move(us));
  REQUIRE(c.size() == 4656);

  const auto words = hashed_words(8);
  const Embeddings emb{&words, nullptr};
  auto mc = small_config(Variant::Word);
  mc.max_len = 3;
  Rng rng(1);
  auto m = build_model(mc, c.labels(), {}, rng);
  m.output_layer().weight.value.setZero();
  m.output_layer().bias.value.setZero();
  m.output_layer().bias.value(c.label_index("neutral"), 0) = 1.0;

  const auto r = accuracy(m, c, emb);
  CHECK(r.percent == doctest::Approx(100.0 * 1794.0 / 4656.0).epsilon(1e-12));
  CHECK(r.percent == doctest::Approx(38.53).epsilon(1e-4));
  CHECK(r.confusion.col(c.label_index("neutral")).sum() == 4656);
  CHECK(r.confusion.sum() == 4656);

  CHECK_THROWS_AS(accuracy(m, Corpus{}, emb), PreconditionError);
}

TEST_CASE("accuracy of a perfect predictor") {
  const auto corpus = separable_toy_corpus();
  const auto words = hashed_words(8);
  const Embeddings emb{&words, nullptr};
  auto mc = small_config(Variant::Word);
  mc.filters = 150;
  mc.hidden = 32;
  Rng rng(6);
  auto m = build_model(mc, corpus.labels(), {}, rng);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 2;
  tc.seed = 5;
  tc.optimizer.learning_rate = 0.01;
  const auto trained = train(m, corpus, Corpus{}, emb, tc).model;
  const auto r = accuracy(trained, corpus, emb);
  CHECK(r.percent == 100.0);
  ConfusionMatrix expected = ConfusionMatrix::Zero(4, 4);
  expected.diagonal().setConstant(2);
  CHECK(r.confusion == expected);
}

TEST_CASE("run_cv bookkeeping") {
  SmallExperiment x;
  const auto plan = make_fold_plan(x.corpus, 4, 3);
  const auto r = run_cv(x.corpus, x.mc, x.tc, x.emb(), plan);
  REQUIRE(r.fold_accuracy.size() == 4);
  const auto ms = mean_and_sample_std(r.fold_accuracy);
  CHECK(std::abs(r.mean - std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / 4.0) <= 1e-9);
  CHECK(r.std == ms.std);
  CHECK(r.labels == x.corpus.labels());
  for (int i = 0; i < 4; ++i) {
    const auto test = plan.test_indices(i);
    const auto& m = r.confusion[static_cast<std::size_t>(i)];
    CHECK(m.sum() == static_cast<long>(test.size()));
    for (int l = 0; l < 4; ++l) {
      const auto expected = std::count_if(test.begin(), test.end(),
                                          [&](std::size_t idx) { return x.corpus.label_index(x.corpus[idx].label) == l; });
      CHECK(m.row(l).sum() == expected);
    }
    CHECK(r.fold_accuracy[static_cast<std::size_t>(i)] ==
          doctest::Approx(100.0 * static_cast<double>(m.diagonal().sum()) / static_cast<double>(test.size())));
  }
  REQUIRE(r.predictions.size() == x.corpus.size());
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    CHECK(r.predictions[i].index == i);
    CHECK(r.predictions[i].fold == plan.assignments[i]);
  }
}

TEST_CASE("run_cv results do not depend on the worker count") {
  SmallExperiment x;
  x.mc.dropout = 0.2;
  const auto plan = make_fold_plan(x.corpus, 3, 9);
  HarnessOptions one{1, {}};
  HarnessOptions three{3, {}};
  const auto a = run_cv(x.corpus, x.mc, x.tc, x.emb(), plan, one);
  const auto b = run_cv(x.corpus, x.mc, x.tc, x.emb(), plan, three);
  CHECK(a.fold_accuracy == b.fold_accuracy);
  REQUIRE(a.predictions.size() == b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) CHECK(a.predictions[i].probs == b.predictions[i].probs);
}

TEST_CASE("run_cv reports the failing fold") {
  SmallExperiment x;
  const auto plan = make_fold_plan(x.corpus, 4, 3);
  const auto wrong = hashed_words(5);
  try {
    run_cv(x.corpus, x.mc, x.tc, Embeddings{&wrong, nullptr}, plan);
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).rfind("fold 0:", 0) == 0);
  }
}

TEST_CASE("run_transfer") {
  SmallExperiment x;
  SynthConfig other;
  other.n_utterances = 40;
  other.vocab_size = 300;
  other.min_sentence_len = 4;
  other.max_sentence_len = 8;
  other.duplication_rate = 0.0;
  other.seed = 99;
  const auto target = generate(other);
  const auto plan = make_fold_plan(x.corpus, 3, 1);
  const auto r = run_transfer(x.corpus, target, x.mc, x.tc, x.emb(), plan);
  REQUIRE(r.run_accuracy.size() == 3);
  for (const auto& m : r.confusion) CHECK(m.sum() == static_cast<long>(target.size()));
  CHECK(std::abs(r.mean - std::accumulate(r.run_accuracy.begin(), r.run_accuracy.end(), 0.0) / 3.0) <= 1e-9);

  SUBCASE("source results ignore the target corpus") {
    const auto plain = run_cv(x.corpus, x.mc, x.tc, x.emb(), plan);
    CHECK(plain.fold_accuracy == r.source_cv.fold_accuracy);
    const auto r2 = run_transfer(x.corpus, x.corpus, x.mc, x.tc, x.emb(), plan);
    CHECK(r2.source_cv.fold_accuracy == r.source_cv.fold_accuracy);
  }
  SUBCASE("label mismatch names the labels") {
    std::vector<Utterance> us(target.utterances());
    us[0].label = "bored";
    const Corpus bad("bad", us);
    try {
      run_transfer(x.corpus, bad, x.mc, x.tc, x.emb(), plan);
      FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
      CHECK(std::string(e.what()).find("bored") != std::string::npos);
    }
  }
}

TEST_CASE("require_same_labels") {
  const auto a = sized_corpus(8, 4);
  CHECK_NOTHROW(require_same_labels(a, sized_corpus(12, 4)));
  CHECK_THROWS_AS(require_same_labels(a, sized_corpus(12, 5)), PreconditionError);
  CHECK_THROWS_AS(require_same_labels(a, sized_corpus(12, 3)), PreconditionError);
}
