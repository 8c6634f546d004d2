#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "corpusscope/corpus.hpp"
#include "corpusscope/emomodel.hpp"

namespace corpusscope {

/// k-fold assignment with the rotating 8-1-1 role scheme: for fold i the
/// test part is i, validation is (i + 1) mod k, training is everything else.
struct FoldPlan {
  int k = 10;
  std::vector<int> assignments;  // fold index per utterance

  int test_fold(int fold) const { return fold; }
  int validation_fold(int fold) const { return (fold + 1) % k; }

  std::vector<std::size_t> members(int part) const;
  std::vector<std::size_t> test_indices(int fold) const { return members(test_fold(fold)); }
  std::vector<std::size_t> validation_indices(int fold) const { return members(validation_fold(fold)); }
  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Seeded shuffled assignment. Stratified plans deal each label's shuffled
/// members round-robin so per-label counts per fold differ by at most one.
/// Throws PreconditionError when the corpus has fewer than k utterances.
FoldPlan make_fold_plan(const Corpus& corpus, int k, std::uint64_t seed, bool stratified = false);

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AccuracyReport {
  double percent = 0.0;
  ConfusionMatrix confusion;  // rows true label, cols predicted
};

/// Throws PreconditionError on an empty corpus or labels unknown to the model.
AccuracyReport accuracy(const EmotionModel& model, const Corpus& corpus, const Embeddings& emb);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation; 0 for n < 2
};
MeanStd mean_and_sample_std(const std::vector<double>& values);

/// Out-of-fold softmax output for one utterance.
struct ScoredPrediction {
  std::size_t index = 0;  // position in the evaluated corpus
  int fold = 0;
  int target = 0;
  int predicted = 0;
  std::vector<double> probs;
};

struct CVResult {
  std::vector<double> fold_accuracy;  // percent
  double mean = 0.0;
  double std = 0.0;
  std::vector<ConfusionMatrix> confusion;
  std::vector<ScoredPrediction> predictions;  // sorted by corpus index
  std::vector<TrainingLog> logs;
  std::vector<std::string> labels;
};

struct TransferResult {
  std::string source;
  std::string target;
  std::vector<double> run_accuracy;  // one per source fold-model, percent
  double mean = 0.0;
  double std = 0.0;
  std::vector<ConfusionMatrix> confusion;
  /// The same fold-models scored on their own held-out source folds.
  CVResult source_cv;
};

struct HarnessOptions {
  /// Fold-level parallelism; results do not depend on it.
  int workers = 1;
  /// Called after each fold-model is trained (e.g. to save checkpoints).
  /// May be invoked concurrently from worker threads.
  std::function<void(int fold, const EmotionModel&)> on_model;
};

/// Trains one model per fold and scores it on that fold's test part.
CVResult run_cv(const Corpus& corpus, const ModelConfig& mc, const TrainConfig& tc, const Embeddings& emb,
                const FoldPlan& plan, const HarnessOptions& options = {});

/// Every source fold-model is evaluated on the entire target corpus.
/// Throws PreconditionError when the label vocabularies differ.
TransferResult run_transfer(const Corpus& source, const Corpus& target, const ModelConfig& mc,
                            const TrainConfig& tc, const Embeddings& emb, const FoldPlan& plan,
                            const HarnessOptions& options = {});

/// Throws PreconditionError naming labels present on only one side or a
/// differing order.
void require_same_labels(const Corpus& source, const Corpus& target);

}  // namespace corpusscope
