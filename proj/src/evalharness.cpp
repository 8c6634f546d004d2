#include "corpusscope/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "corpusscope/errors.hpp"
#include "corpusscope/rng.hpp"

namespace corpusscope {

std::vector<std::size_t> FoldPlan::members(int part) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == part) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  const int test = test_fold(fold), val = validation_fold(fold);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != test && assignments[i] != val) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

FoldPlan make_fold_plan(const Corpus& corpus, int k, std::uint64_t seed, bool stratified) {
  if (k < 2) throw PreconditionError("k must be at least 2");
  if (corpus.size() < static_cast<std::size_t>(k))
    throw PreconditionError(fmt::format("corpus has {} utterances, fewer than k = {}", corpus.size(), k));
  Rng rng(derive_seed(seed, "fold-plan"));
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(corpus.size(), 0);

  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < corpus.size(); ++i) by_label[corpus[i].label].push_back(i);
    for (auto& [label, members] : by_label) groups.push_back(std::move(members));
  } else {
    std::vector<std::size_t> all(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    groups.push_back(std::move(all));
  }
  // A single running counter keeps overall fold sizes within one of each
  // other while each label group is spread round-robin.
  std::size_t counter = 0;
  for (auto& g : groups) {
    shuffle(g, rng);
    for (auto i : g) plan.assignments[i] = static_cast<int>(counter++ % static_cast<std::size_t>(k));
  }
  return plan;
}

namespace {

std::vector<int> targets_for(const Corpus& corpus, const std::vector<std::string>& labels) {
  std::vector<int> t;
  t.reserve(corpus.size());
  for (const auto& u : corpus.utterances()) {
    auto it = std::find(labels.begin(), labels.end(), u.label);
    if (it == labels.end()) throw PreconditionError("label '" + u.label + "' is unknown to the model");
    t.push_back(static_cast<int>(it - labels.begin()));
  }
  return t;
}

struct FoldOutcome {
  AccuracyReport test;
  std::vector<ScoredPrediction> predictions;
  TrainingLog log;
  AccuracyReport transfer;
};

// Runs `job(i)` for i in [0, n) on up to `workers` threads. The first
// failure (lowest fold index) is rethrown with its fold attached.
template <class Job>
void run_parallel(int n, int workers, Job&& job) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(workers, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[static_cast<std::size_t>(i)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
    } catch (const PreconditionError& e) {
      throw PreconditionError(fmt::format("fold {}: {}", i, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("fold {}: {}", i, e.what()));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("fold {}: {}", i, e.what()));
    }
  }
}

std::vector<FoldOutcome> run_folds(const Corpus& corpus, const Corpus* transfer_target, const ModelConfig& mc,
                                   const TrainConfig& tc, const Embeddings& emb, const FoldPlan& plan,
                                   const HarnessOptions& options) {
  if (plan.assignments.size() != corpus.size())
    throw PreconditionError("fold plan does not match the corpus size");
  if (static_cast<std::size_t>(mc.classes) != corpus.labels().size())
    throw PreconditionError(fmt::format("model has {} classes but corpus '{}' has {} labels", mc.classes,
                                        corpus.name(), corpus.labels().size()));
  mc.validate();
  tc.validate();
  const auto& labels = corpus.labels();
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(plan.k));

  run_parallel(plan.k, options.workers, [&](int fold) {
    const Corpus train_set = corpus.subset(plan.train_indices(fold));
    const Corpus val_set = corpus.subset(plan.validation_indices(fold));
    const auto test_idx = plan.test_indices(fold);
    const Corpus test_set = corpus.subset(test_idx);

    Rng init_rng(derive_seed(tc.seed, fmt::format("init/{}", fold)));
    const auto frames = mc.uses_frames() ? collect_frame_symbols(train_set) : std::vector<std::string>{};
    auto model = build_model(mc, labels, frames, init_rng, emb.frames);
    TrainConfig fold_tc = tc;
    fold_tc.seed = derive_seed(tc.seed, fmt::format("train/{}", fold));
    auto trained = train(std::move(model), train_set, val_set, emb, fold_tc);
    spdlog::debug("fold {}: best epoch {} of {}", fold, trained.log.best_epoch, trained.log.epochs.size());
    if (options.on_model) options.on_model(fold, trained.model);

    auto& out = outcomes[static_cast<std::size_t>(fold)];
    out.log = std::move(trained.log);
    out.test.confusion = ConfusionMatrix::Zero(mc.classes, mc.classes);
    std::size_t correct = 0;
    const auto targets = targets_for(test_set, labels);
    for (std::size_t j = 0; j < test_set.size(); ++j) {
      const auto probs = predict(trained.model, test_set[j], emb);
      ScoredPrediction sp;
      sp.index = test_idx[j];
      sp.fold = fold;
      sp.target = targets[j];
      sp.predicted = predicted_label(probs);
      sp.probs.assign(probs.data(), probs.data() + probs.size());
      ++out.test.confusion(sp.target, sp.predicted);
      if (sp.predicted == sp.target) ++correct;
      out.predictions.push_back(std::move(sp));
    }
    out.test.percent = test_set.empty() ? 0.0
                                        : 100.0 * static_cast<double>(correct) / static_cast<double>(test_set.size());
    if (transfer_target) out.transfer = accuracy(trained.model, *transfer_target, emb);
  });
  return outcomes;
}

CVResult assemble_cv(std::vector<FoldOutcome>& outcomes, const std::vector<std::string>& labels) {
  CVResult r;
  r.labels = labels;
  for (auto& o : outcomes) {
    r.fold_accuracy.push_back(o.test.percent);
    r.confusion.push_back(o.test.confusion);
    r.logs.push_back(o.log);
    for (auto& p : o.predictions) r.predictions.push_back(std::move(p));
  }
  std::sort(r.predictions.begin(), r.predictions.end(),
            [](const ScoredPrediction& a, const ScoredPrediction& b) { return a.index < b.index; });
  const auto ms = mean_and_sample_std(r.fold_accuracy);
  r.mean = ms.mean;
  r.std = ms.std;
  return r;
}

}  // namespace

AccuracyReport accuracy(const EmotionModel& model, const Corpus& corpus, const Embeddings& emb) {
  if (corpus.empty()) throw PreconditionError("cannot compute accuracy on an empty corpus");
  const auto targets = targets_for(corpus, model.labels());
  const auto classes = static_cast<Eigen::Index>(model.labels().size());
  AccuracyReport r;
  r.confusion = ConfusionMatrix::Zero(classes, classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int pred = predicted_label(predict(model, corpus[i], emb));
    ++r.confusion(targets[i], pred);
    if (pred == targets[i]) ++correct;
  }
  r.percent = 100.0 * static_cast<double>(correct) / static_cast<double>(corpus.size());
  return r;
}

MeanStd mean_and_sample_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return r;
}

CVResult run_cv(const Corpus& corpus, const ModelConfig& mc, const TrainConfig& tc, const Embeddings& emb,
                const FoldPlan& plan, const HarnessOptions& options) {
  auto outcomes = run_folds(corpus, nullptr, mc, tc, emb, plan, options);
  return assemble_cv(outcomes, corpus.labels());
}

void require_same_labels(const Corpus& source, const Corpus& target) {
  const auto& a = source.labels();
  const auto& b = target.labels();
  if (a == b) return;
  std::vector<std::string> only_source, only_target;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_source));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_target));
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s.empty() ? std::string("-") : s;
  };
  throw PreconditionError(fmt::format("label vocabularies differ: only in source '{}': {}; only in target '{}': {}",
                                      source.name(), join(only_source), target.name(), join(only_target)));
}

TransferResult run_transfer(const Corpus& source, const Corpus& target, const ModelConfig& mc,
                            const TrainConfig& tc, const Embeddings& emb, const FoldPlan& plan,
                            const HarnessOptions& options) {
  require_same_labels(source, target);
  if (target.empty()) throw PreconditionError("target corpus is empty");
  auto outcomes = run_folds(source, &target, mc, tc, emb, plan, options);
  TransferResult r;
  r.source = source.name();
  r.target = target.name();
  for (const auto& o : outcomes) {
    r.run_accuracy.push_back(o.transfer.percent);
    r.confusion.push_back(o.transfer.confusion);
  }
  const auto ms = mean_and_sample_std(r.run_accuracy);
  r.mean = ms.mean;
  r.std = ms.std;
  r.source_cv = assemble_cv(outcomes, source.labels());
  return r;
}

}  // namespace corpusscope
