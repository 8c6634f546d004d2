#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "corpusscope/autonet.hpp"
#include "corpusscope/corpus.hpp"
#include "corpusscope/embedding.hpp"

namespace corpusscope {

enum class Variant { Word, Semantic, Fusion };
enum class Activation { Relu, Identity };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);

/// Reserved frame symbol for utterances without a frame stream.
inline constexpr std::string_view kUnknownFrame = "<unk-frame>";

struct ModelConfig {
  Variant variant = Variant::Word;
  int filters = 150;
  int kernel_size = 3;
  int stride = 1;
  double dropout = 0.2;
  int hidden = 32;
  int classes = 4;
  int max_len = 100;
  int word_dim = 300;
  int frame_dim = 50;
  /// Learn the frame table jointly with the classifier.
  bool frame_trainable = true;
  Activation activation = Activation::Relu;

  bool uses_words() const { return variant != Variant::Semantic; }
  bool uses_frames() const { return variant != Variant::Word; }
  int channel_count() const { return variant == Variant::Fusion ? 2 : 1; }
  int head_width() const { return filters * channel_count(); }

  /// Throws InputError on non-positive extents or dropout outside [0, 1).
  void validate() const;
};

struct TrainConfig {
  autonet::OptimizerConfig optimizer{};
  int epochs = 30;
  int batch_size = 50;
  std::uint64_t seed = 0;
  /// Stop after this many epochs without a validation-accuracy improvement.
  int early_stop_patience = 5;

  void validate() const;
};

nlohmann::ordered_json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const TrainConfig& c);

/// Stable hex digest of the model configuration.
std::string fingerprint(const ModelConfig& c);

/// Pretrained inputs shared read-only across training runs.
struct Embeddings {
  const EmbeddingTable* word = nullptr;
  /// Optional initial frame table; the model copies it at build time.
  const EmbeddingTable* frames = nullptr;
};

class EmotionModel;

/// Per-channel intermediates kept for backprop.
struct ChannelTrace {
  autonet::DropoutResult<double> dropped;
  autonet::Tensor2<double> conv_pre;
  autonet::Tensor2<double> conv_out;
  autonet::MaxPoolResult<double> pool;
  std::vector<std::ptrdiff_t> frame_rows;  // frame channel only
};

struct ForwardTrace {
  std::vector<ChannelTrace> channels;  // word first, then frames
  autonet::Vector<double> pooled;      // concatenated head input
  autonet::Vector<double> hidden_pre;
  autonet::Vector<double> hidden_out;
  autonet::Vector<double> logits;
};

struct Channel {
  autonet::LayerParams<double> conv;
};

/// One architecture variant with all of its learned parameters.
class EmotionModel {
 public:
  EmotionModel() = default;

  const ModelConfig& config() const { return config_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::string fingerprint() const { return corpusscope::fingerprint(config_); }

  /// Parameters in a fixed order, with names used by checkpoints.
  std::vector<autonet::Param<double>*> parameters();
  std::vector<const autonet::Param<double>*> parameters() const;
  std::vector<std::string> parameter_names() const;

  ForwardTrace forward(const Utterance& u, const Embeddings& emb, autonet::Mode mode, Rng* rng) const;
  /// Eval-mode loss for one sample computed in extended precision; the
  /// finite-difference reference for gradient checks.
  long double reference_loss(const Utterance& u, int target, const Embeddings& emb) const;

  /// Accumulates parameter gradients for one sample.
  void backward(const ForwardTrace& trace, const autonet::Vector<double>& grad_logits);

  void zero_grad();

  /// Frame table as currently learned (symbols + vectors).
  EmbeddingTable frame_table() const;
  const std::vector<std::string>& frame_symbols() const { return frame_symbols_; }

  std::optional<Channel>& word_channel() { return word_; }
  std::optional<Channel>& frame_channel() { return frame_; }
  autonet::LayerParams<double>& hidden_layer() { return hidden_; }
  autonet::LayerParams<double>& output_layer() { return output_; }
  autonet::Param<double>& frame_vectors() { return frame_vectors_; }
  const autonet::Tensor2<double>& frame_vectors_value() const { return frame_vectors_.value; }

 private:
  friend EmotionModel build_model(const ModelConfig&, const std::vector<std::string>&,
                                  const std::vector<std::string>&, Rng&, const EmbeddingTable*);
  friend EmotionModel model_from_json(const nlohmann::ordered_json&);

  autonet::Tensor2<double> frame_input(const Utterance& u, std::vector<std::ptrdiff_t>& rows) const;
  /// Extended-precision pieces of reference_loss.
  autonet::Vector<long double> reference_pooled(const Utterance& u, const Embeddings& emb, bool frames) const;
  long double reference_head(const autonet::Vector<long double>& pooled, int target) const;
  friend autonet::GradientCheckReport gradient_check(EmotionModel&, const Utterance&, int, const Embeddings&,
                                                     double);
  void rebuild_frame_index();

  ModelConfig config_;
  std::vector<std::string> labels_;
  std::optional<Channel> word_;
  std::optional<Channel> frame_;
  autonet::LayerParams<double> hidden_;
  autonet::LayerParams<double> output_;
  std::vector<std::string> frame_symbols_;
  std::unordered_map<std::string, std::ptrdiff_t> frame_index_;
  autonet::Param<double> frame_vectors_;
};

/// Sorted distinct frame IDs in `corpus` plus the reserved unknown frame.
std::vector<std::string> collect_frame_symbols(const Corpus& corpus);

/// Wires channel(s) -> concat -> dense(hidden) -> act -> dense(classes).
/// `frame_symbols` is required for variants using frames; when
/// `pretrained_frames` is given its vectors seed matching symbols.
EmotionModel build_model(const ModelConfig& config, const std::vector<std::string>& labels,
                         const std::vector<std::string>& frame_symbols, Rng& rng,
                         const EmbeddingTable* pretrained_frames = nullptr);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // percent; NaN without a validation set
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

struct TrainResult {
  EmotionModel model;
  TrainingLog log;
};

/// Shuffled mini-batch training; returns the parameters of the epoch with
/// the best validation accuracy (the last epoch when val_set is empty).
TrainResult train(EmotionModel model, const Corpus& train_set, const Corpus& val_set,
                  const Embeddings& emb, const TrainConfig& tc);

/// Eval-mode softmax probabilities over model.labels().
autonet::Vector<double> predict(const EmotionModel& model, const Utterance& u, const Embeddings& emb);

/// Label index of the argmax (lowest index on ties).
int predicted_label(const autonet::Vector<double>& probs);

/// Loss for one sample in eval mode.
double sample_loss(const EmotionModel& model, const Utterance& u, int target, const Embeddings& emb);

/// Central-difference check of every parameter gradient for one sample,
/// differencing reference_loss. Convolution parameters feeding a tied
/// max-pool column are skipped.
autonet::GradientCheckReport gradient_check(EmotionModel& model, const Utterance& u, int target,
                                            const Embeddings& emb, double eps);

// Checkpoints: JSON document, see docs/checkpoint.md.
nlohmann::ordered_json to_json(const EmotionModel& model);
EmotionModel model_from_json(const nlohmann::ordered_json& j);
void save_model(const EmotionModel& model, const std::filesystem::path& path);
EmotionModel load_model(const std::filesystem::path& path);

}  // namespace corpusscope
