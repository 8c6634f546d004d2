#include "corpusscope/emomodel.hpp"

#include <cmath>
#include <functional>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "corpusscope/errors.hpp"

namespace corpusscope {

using autonet::Index;
using autonet::Mode;
using autonet::Tensor2;
using autonet::Vector;
using json = nlohmann::ordered_json;

namespace {

autonet::Conv1dShape conv_shape(const ModelConfig& c) {
  return {c.kernel_size, c.stride, c.filters};
}

constexpr int kCheckpointVersion = 1;
constexpr std::string_view kCheckpointFormat = "corpusscope.checkpoint";

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw InputError("unknown activation '" + std::string(s) + "'");
}

template <class M>
M activate(const M& x, Activation a) {
  return a == Activation::Relu ? autonet::relu(x) : x;
}

template <class M, class G>
G activate_backward(const M& pre, const G& grad, Activation a) {
  return a == Activation::Relu ? autonet::relu_backward(pre, grad) : grad;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Word: return "word";
    case Variant::Semantic: return "semantic";
    case Variant::Fusion: return "fusion";
  }
  return "word";
}

Variant parse_variant(std::string_view s) {
  if (s == "word") return Variant::Word;
  if (s == "semantic") return Variant::Semantic;
  if (s == "fusion") return Variant::Fusion;
  throw InputError("unknown variant '" + std::string(s) + "' (expected word|semantic|fusion)");
}

void ModelConfig::validate() const {
  if (filters < 1 || kernel_size < 1 || stride < 1 || hidden < 1 || classes < 1 || max_len < 1 ||
      word_dim < 1 || frame_dim < 1)
    throw InputError("model extents must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  if (max_len < kernel_size) throw InputError("max_len must be at least kernel_size");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (batch_size < 1) throw InputError("batch_size must be at least 1");
  if (early_stop_patience < 1) throw InputError("early_stop_patience must be at least 1");
  if (!(optimizer.learning_rate > 0.0)) throw InputError("learning rate must be positive");
}

json to_json(const ModelConfig& c) {
  return json{{"variant", to_string(c.variant)},
              {"filters", c.filters},
              {"kernel_size", c.kernel_size},
              {"stride", c.stride},
              {"dropout", c.dropout},
              {"hidden", c.hidden},
              {"classes", c.classes},
              {"max_len", c.max_len},
              {"word_dim", c.word_dim},
              {"frame_dim", c.frame_dim},
              {"frame_trainable", c.frame_trainable},
              {"activation", to_string(c.activation)}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.filters = j.at("filters").get<int>();
  c.kernel_size = j.at("kernel_size").get<int>();
  c.stride = j.at("stride").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.hidden = j.at("hidden").get<int>();
  c.classes = j.at("classes").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.word_dim = j.at("word_dim").get<int>();
  c.frame_dim = j.at("frame_dim").get<int>();
  c.frame_trainable = j.at("frame_trainable").get<bool>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  const bool adam = c.optimizer.algorithm == autonet::OptimizerConfig::Algorithm::Adam;
  return json{{"optimizer", adam ? "adam" : "sgd"},
              {"learning_rate", c.optimizer.learning_rate},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"epsilon", c.optimizer.epsilon},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"early_stop_patience", c.early_stop_patience}};
}

std::string fingerprint(const ModelConfig& c) {
  return fmt::format("{:016x}", fnv1a64(to_json(c).dump()));
}

std::vector<std::string> collect_frame_symbols(const Corpus& corpus) {
  std::set<std::string> symbols{std::string(kUnknownFrame)};
  for (const auto& u : corpus.utterances()) symbols.insert(u.frames.begin(), u.frames.end());
  return {symbols.begin(), symbols.end()};
}

// ---------------------------------------------------------------------------

void EmotionModel::rebuild_frame_index() {
  frame_index_.clear();
  for (std::size_t i = 0; i < frame_symbols_.size(); ++i)
    frame_index_.emplace(frame_symbols_[i], static_cast<std::ptrdiff_t>(i));
}

EmotionModel build_model(const ModelConfig& config, const std::vector<std::string>& labels,
                         const std::vector<std::string>& frame_symbols, Rng& rng,
                         const EmbeddingTable* pretrained_frames) {
  config.validate();
  if (static_cast<int>(labels.size()) != config.classes)
    throw PreconditionError(fmt::format("model has {} classes but {} labels were given", config.classes,
                                        labels.size()));
  EmotionModel m;
  m.config_ = config;
  m.labels_ = labels;
  const auto shape = conv_shape(config);
  if (config.uses_words()) m.word_ = Channel{autonet::make_conv1d<double>(config.word_dim, shape, rng)};
  if (config.uses_frames()) {
    if (frame_symbols.empty()) throw InputError("frame channel needs a symbol inventory");
    if (pretrained_frames && static_cast<int>(pretrained_frames->dim()) != config.frame_dim)
      throw PreconditionError(fmt::format("frame table has dimension {}, model expects {}",
                                          pretrained_frames->dim(), config.frame_dim));
    m.frame_ = Channel{autonet::make_conv1d<double>(config.frame_dim, shape, rng)};
    m.frame_symbols_ = frame_symbols;
    m.rebuild_frame_index();
    auto table = new_trainable_table(frame_symbols, static_cast<std::size_t>(config.frame_dim), rng());
    Tensor2<double> values = table.vectors();
    if (pretrained_frames) {
      for (std::size_t i = 0; i < frame_symbols.size(); ++i) {
        const auto row = pretrained_frames->find(frame_symbols[i]);
        if (row >= 0) values.row(static_cast<Index>(i)) = pretrained_frames->vectors().row(row);
      }
    }
    m.frame_vectors_ = autonet::Param<double>(std::move(values));
  }
  const int width = config.head_width();
  if (width != config.filters * config.channel_count())
    throw std::logic_error("head width does not match channel count");
  m.hidden_ = autonet::make_dense<double>(width, config.hidden, rng);
  m.output_ = autonet::make_dense<double>(config.hidden, config.classes, rng);
  return m;
}

std::vector<autonet::Param<double>*> EmotionModel::parameters() {
  std::vector<autonet::Param<double>*> ps;
  if (word_) ps.insert(ps.end(), {&word_->conv.weight, &word_->conv.bias});
  if (frame_) {
    ps.insert(ps.end(), {&frame_->conv.weight, &frame_->conv.bias});
    if (config_.frame_trainable) ps.push_back(&frame_vectors_);
  }
  ps.insert(ps.end(), {&hidden_.weight, &hidden_.bias, &output_.weight, &output_.bias});
  return ps;
}

std::vector<const autonet::Param<double>*> EmotionModel::parameters() const {
  auto mutable_params = const_cast<EmotionModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> EmotionModel::parameter_names() const {
  std::vector<std::string> names;
  if (word_) names.insert(names.end(), {"word_conv.weight", "word_conv.bias"});
  if (frame_) {
    names.insert(names.end(), {"frame_conv.weight", "frame_conv.bias"});
    if (config_.frame_trainable) names.push_back("frame_embedding");
  }
  names.insert(names.end(), {"hidden.weight", "hidden.bias", "output.weight", "output.bias"});
  return names;
}

void EmotionModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

EmbeddingTable EmotionModel::frame_table() const {
  if (!frame_) throw InputError("model has no frame channel");
  EmbeddingTable t(static_cast<std::size_t>(config_.frame_dim), OovPolicy::zeros(), config_.frame_trainable);
  for (std::size_t i = 0; i < frame_symbols_.size(); ++i) {
    const auto row = frame_vectors_.value.row(static_cast<Index>(i));
    t.add(frame_symbols_[i], std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  return t;
}

Tensor2<double> EmotionModel::frame_input(const Utterance& u, std::vector<std::ptrdiff_t>& rows) const {
  const auto max_len = static_cast<std::size_t>(config_.max_len);
  Tensor2<double> x = Tensor2<double>::Zero(config_.max_len, config_.frame_dim);
  rows.assign(max_len, -1);
  static const std::vector<std::string> unknown{std::string(kUnknownFrame)};
  const auto& frames = u.frames.empty() ? unknown : u.frames;
  const std::size_t n = std::min(frames.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = frame_index_.find(frames[i]);
    if (it == frame_index_.end()) continue;
    rows[i] = it->second;
    x.row(static_cast<Index>(i)) = frame_vectors_.value.row(it->second);
  }
  return x;
}

ForwardTrace EmotionModel::forward(const Utterance& u, const Embeddings& emb, Mode mode, Rng* rng) const {
  if (mode == Mode::Train && config_.dropout > 0.0 && rng == nullptr)
    throw std::logic_error("train-mode forward with dropout needs an rng");
  const auto shape = conv_shape(config_);
  ForwardTrace tr;
  Rng unused(0);
  Rng& r = rng ? *rng : unused;

  auto run_channel = [&](const Channel& ch, Tensor2<double> input, std::vector<std::ptrdiff_t> rows) {
    ChannelTrace ct;
    ct.dropped = autonet::dropout(input, config_.dropout, mode, r);
    ct.conv_pre = autonet::conv1d_forward(ct.dropped.output, shape, ch.conv);
    ct.conv_out = activate(ct.conv_pre, config_.activation);
    ct.pool = autonet::global_max_pool(ct.conv_out);
    ct.frame_rows = std::move(rows);
    tr.channels.push_back(std::move(ct));
  };

  if (word_) {
    if (!emb.word) throw PreconditionError("word channel requires a word embedding table");
    if (static_cast<int>(emb.word->dim()) != config_.word_dim)
      throw PreconditionError(fmt::format("word table has dimension {}, model expects {}", emb.word->dim(),
                                          config_.word_dim));
    auto in = embed_sequence(u.tokens, *emb.word, static_cast<std::size_t>(config_.max_len));
    run_channel(*word_, std::move(in.values), {});
  }
  if (frame_) {
    std::vector<std::ptrdiff_t> rows;
    auto x = frame_input(u, rows);
    run_channel(*frame_, std::move(x), std::move(rows));
  }

  tr.pooled.resize(config_.head_width());
  Index offset = 0;
  for (const auto& ct : tr.channels) {
    tr.pooled.segment(offset, ct.pool.values.size()) = ct.pool.values;
    offset += ct.pool.values.size();
  }
  tr.hidden_pre = autonet::dense_forward(tr.pooled, hidden_);
  tr.hidden_out = activate(tr.hidden_pre, config_.activation);
  tr.logits = autonet::dense_forward(tr.hidden_out, output_);
  return tr;
}

autonet::Vector<long double> EmotionModel::reference_pooled(const Utterance& u, const Embeddings& emb,
                                                            bool frames) const {
  using Ext = long double;
  Tensor2<double> input;
  const Channel* ch = nullptr;
  if (frames) {
    std::vector<std::ptrdiff_t> rows;
    input = frame_input(u, rows);
    ch = &*frame_;
  } else {
    if (!emb.word) throw PreconditionError("word channel requires a word embedding table");
    input = embed_sequence(u.tokens, *emb.word, static_cast<std::size_t>(config_.max_len)).values;
    ch = &*word_;
  }
  const Tensor2<Ext> patches = autonet::im2col(input.cast<Ext>(), conv_shape(config_));
  Tensor2<Ext> pre = patches * ch->conv.weight.value.cast<Ext>().transpose();
  pre.rowwise() += ch->conv.bias.value.row(0).cast<Ext>();
  const Tensor2<Ext> act = activate(pre, config_.activation);
  return act.colwise().maxCoeff().transpose();
}

long double EmotionModel::reference_head(const autonet::Vector<long double>& pooled, int target) const {
  using Ext = long double;
  const autonet::Vector<Ext> hidden_pre =
      hidden_.weight.value.cast<Ext>() * pooled + hidden_.bias.value.col(0).cast<Ext>();
  const autonet::Vector<Ext> hidden_out = activate(hidden_pre, config_.activation);
  const autonet::Vector<Ext> logits = output_.weight.value.cast<Ext>() * hidden_out + output_.bias.value.col(0).cast<Ext>();
  return autonet::softmax_cross_entropy<Ext>(logits, target).loss;
}

long double EmotionModel::reference_loss(const Utterance& u, int target, const Embeddings& emb) const {
  autonet::Vector<long double> pooled(config_.head_width());
  Index offset = 0;
  for (bool frames : {false, true}) {
    if (!(frames ? frame_ : word_)) continue;
    pooled.segment(offset, config_.filters) = reference_pooled(u, emb, frames);
    offset += config_.filters;
  }
  return reference_head(pooled, target);
}

void EmotionModel::backward(const ForwardTrace& tr, const Vector<double>& grad_logits) {
  const auto shape = conv_shape(config_);
  const Vector<double> g_hidden_out = autonet::dense_backward(tr.hidden_out, output_, grad_logits);
  const Vector<double> g_hidden_pre = activate_backward(tr.hidden_pre, g_hidden_out, config_.activation);
  const Vector<double> g_pooled = autonet::dense_backward(tr.pooled, hidden_, g_hidden_pre);

  Index offset = 0;
  std::size_t ci = 0;
  auto back_channel = [&](Channel& ch, bool is_frame) {
    const auto& ct = tr.channels[ci++];
    const Vector<double> g_pool = g_pooled.segment(offset, config_.filters);
    offset += config_.filters;
    const Tensor2<double> g_act = autonet::global_max_pool_backward(ct.pool, g_pool);
    const Tensor2<double> g_pre = activate_backward(ct.conv_pre, g_act, config_.activation);
    const Tensor2<double> g_in = autonet::conv1d_backward(ct.dropped.output, shape, ch.conv, g_pre);
    if (is_frame && config_.frame_trainable) {
      const Tensor2<double> g_x = autonet::dropout_backward(ct.dropped, g_in);
      for (std::size_t i = 0; i < ct.frame_rows.size(); ++i)
        if (ct.frame_rows[i] >= 0) frame_vectors_.grad.row(ct.frame_rows[i]) += g_x.row(static_cast<Index>(i));
    }
  };
  if (word_) back_channel(*word_, false);
  if (frame_) back_channel(*frame_, true);
}

// ---------------------------------------------------------------------------

Vector<double> predict(const EmotionModel& model, const Utterance& u, const Embeddings& emb) {
  const auto tr = model.forward(u, emb, Mode::Eval, nullptr);
  return autonet::softmax(tr.logits);
}

int predicted_label(const Vector<double>& probs) { return static_cast<int>(autonet::argmax(probs)); }

double sample_loss(const EmotionModel& model, const Utterance& u, int target, const Embeddings& emb) {
  const auto tr = model.forward(u, emb, Mode::Eval, nullptr);
  return autonet::softmax_cross_entropy(tr.logits, target).loss;
}

namespace {

std::vector<int> label_indices(const Corpus& corpus, const std::vector<std::string>& labels,
                               const char* role) {
  std::vector<int> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus.utterances()) {
    auto it = std::find(labels.begin(), labels.end(), u.label);
    if (it == labels.end())
      throw PreconditionError(fmt::format("{} label '{}' is not in the model label vocabulary", role, u.label));
    out.push_back(static_cast<int>(it - labels.begin()));
  }
  return out;
}

double accuracy_percent(const EmotionModel& m, const Corpus& c, const std::vector<int>& targets,
                        const Embeddings& emb) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (predicted_label(predict(m, c[i], emb)) == targets[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(c.size());
}

}  // namespace

TrainResult train(EmotionModel model, const Corpus& train_set, const Corpus& val_set, const Embeddings& emb,
                  const TrainConfig& tc) {
  tc.validate();
  if (train_set.empty()) throw PreconditionError("training set is empty");
  const auto train_targets = label_indices(train_set, model.labels(), "training");
  const auto val_targets = label_indices(val_set, model.labels(), "validation");

  Rng rng(derive_seed(tc.seed, "train"));
  autonet::Optimizer<double> opt(tc.optimizer);
  TrainResult result{model, {}};
  double best_val = -1.0;
  int since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      model.zero_grad();
      for (std::size_t b = start; b < stop; ++b) {
        const auto idx = order[b];
        const auto tr = model.forward(train_set[idx], emb, Mode::Train, &rng);
        const auto ce = autonet::softmax_cross_entropy(tr.logits, train_targets[idx]);
        loss_sum += ce.loss;
        model.backward(tr, ce.grad_logits);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      auto params = model.parameters();
      for (auto* p : params) p->grad *= inv;
      opt.step(params);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (val_set.empty()) {
      entry.val_accuracy = std::numeric_limits<double>::quiet_NaN();
      result.model = model;
      result.log.best_epoch = epoch;
    } else {
      entry.val_accuracy = accuracy_percent(model, val_set, val_targets, emb);
      if (entry.val_accuracy > best_val) {
        best_val = entry.val_accuracy;
        since_best = 0;
        result.model = model;
        result.log.best_epoch = epoch;
      } else {
        ++since_best;
      }
    }
    result.log.epochs.push_back(entry);
    if (!val_set.empty() && since_best >= tc.early_stop_patience) {
      result.log.stopped_early = epoch < tc.epochs;
      break;
    }
  }
  result.model.zero_grad();
  return result;
}

autonet::GradientCheckReport gradient_check(EmotionModel& model, const Utterance& u, int target,
                                            const Embeddings& emb, double eps) {
  model.zero_grad();
  const auto tr = model.forward(u, emb, Mode::Eval, nullptr);
  const auto ce = autonet::softmax_cross_entropy(tr.logits, target);
  model.backward(tr, ce.grad_logits);

  // Conv weight/bias entries of a filter whose max-pool column is tied sit
  // at a nondifferentiable point.
  auto params = model.parameters();
  std::vector<const std::vector<bool>*> tied_by_param(params.size(), nullptr);
  std::size_t pi = 0;
  std::size_t ci = 0;
  if (model.word_channel()) {
    tied_by_param[pi] = tied_by_param[pi + 1] = &tr.channels[ci++].pool.tied;
    pi += 2;
  }
  if (model.frame_channel()) {
    tied_by_param[pi] = tied_by_param[pi + 1] = &tr.channels[ci++].pool.tied;
  }
  auto skip = [&](std::size_t p, Index r, Index c) {
    const auto* tied = tied_by_param[p];
    if (!tied) return false;
    const auto filter = static_cast<std::size_t>(params[p]->value.rows() == 1 ? c : r);
    return static_cast<bool>((*tied)[filter]);
  };

  // Each parameter group only moves its own part of the pooled vector, so
  // the other parts are computed once and reused.
  const auto& cfg = model.config();
  autonet::Vector<long double> pooled(cfg.head_width());
  std::vector<std::pair<bool, Index>> channels;  // (is frame channel, offset)
  Index offset = 0;
  for (bool frames : {false, true}) {
    if (!(frames ? model.frame_ : model.word_)) continue;
    pooled.segment(offset, cfg.filters) = model.reference_pooled(u, emb, frames);
    channels.emplace_back(frames, offset);
    offset += cfg.filters;
  }

  autonet::GradientCheckReport total;
  auto run = [&](std::size_t begin, std::size_t end, const std::function<long double()>& loss) {
    auto sub_skip = [&](std::size_t p, Index r, Index c) { return skip(begin + p, r, c); };
    const auto rep = autonet::gradient_check<double>(std::span(params).subspan(begin, end - begin), loss, eps, sub_skip);
    total.max_relative_error = std::max(total.max_relative_error, rep.max_relative_error);
    total.checked += rep.checked;
    total.skipped += rep.skipped;
  };
  std::size_t begin = 0;
  for (const auto& [frames, at] : channels) {
    const std::size_t count = frames && cfg.frame_trainable ? 3 : 2;
    run(begin, begin + count, [&, frames = frames, at = at] {
      autonet::Vector<long double> x = pooled;
      x.segment(at, cfg.filters) = model.reference_pooled(u, emb, frames);
      return model.reference_head(x, target);
    });
    begin += count;
  }
  run(begin, params.size(), [&] { return model.reference_head(pooled, target); });
  return total;
}

// ---------------------------------------------------------------------------
// Checkpoints

json to_json(const EmotionModel& model) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["fingerprint"] = model.fingerprint();
  j["config"] = to_json(model.config());
  j["labels"] = model.labels();
  j["frame_symbols"] = model.frame_symbols();
  json layers = json::array();
  auto add = [&](const std::string& name, const Tensor2<double>& t) {
    json layer;
    layer["name"] = name;
    layer["shape"] = {t.rows(), t.cols()};
    layer["values"] = std::vector<double>(t.data(), t.data() + t.size());
    layers.push_back(std::move(layer));
  };
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) add(names[i], params[i]->value);
  // A frozen frame table is still part of the model.
  if (model.config().uses_frames() && !model.config().frame_trainable)
    add("frame_embedding", model.frame_vectors_value());
  j["layers"] = std::move(layers);
  return j;
}

EmotionModel model_from_json(const json& j) {
  if (j.value("format", "") != kCheckpointFormat) throw FormatError("not a corpusscope checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw FormatError(fmt::format("unsupported checkpoint version {}", j.value("version", 0)));
  const auto config = model_config_from_json(j.at("config"));
  const auto labels = j.at("labels").get<std::vector<std::string>>();
  const auto frames = j.at("frame_symbols").get<std::vector<std::string>>();
  Rng rng(0);
  EmotionModel m = build_model(config, labels, frames, rng);

  std::unordered_map<std::string, const json*> by_name;
  for (const auto& layer : j.at("layers")) by_name[layer.at("name").get<std::string>()] = &layer;
  auto restore = [&](const std::string& name, Tensor2<double>& target) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing layer '" + name + "'");
    const auto& layer = *it->second;
    const auto shape = layer.at("shape").get<std::vector<Index>>();
    const auto values = layer.at("values").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != target.rows() || shape[1] != target.cols() ||
        static_cast<Index>(values.size()) != target.size())
      throw FormatError("layer '" + name + "' has the wrong shape");
    std::copy(values.begin(), values.end(), target.data());
  };
  const auto names = m.parameter_names();
  const auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    restore(names[i], params[i]->value);
    params[i]->zero_grad();
  }
  if (config.uses_frames() && !config.frame_trainable) restore("frame_embedding", m.frame_vectors().value);
  return m;
}

void save_model(const EmotionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

EmotionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace corpusscope
