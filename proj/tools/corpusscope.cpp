// corpusscope: dataset-composition diagnostics for labeled utterance corpora.
//
// Exit codes: 0 success, 1 internal error, 2 input/schema error,
// 3 experiment-precondition error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "corpusscope/corpus.hpp"
#include "corpusscope/diagnostics.hpp"
#include "corpusscope/embedding.hpp"
#include "corpusscope/emomodel.hpp"
#include "corpusscope/errors.hpp"
#include "corpusscope/evalharness.hpp"
#include "corpusscope/reports.hpp"
#include "corpusscope/rng.hpp"
#include "corpusscope/synthlab.hpp"

namespace fs = std::filesystem;
using namespace corpusscope;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kInput = 2, kPrecondition = 3 };

struct CommonArgs {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
};

struct ModelArgs {
  std::string variant = "word";
  std::string word_emb;
  std::string frame_emb;
  std::string oov = "zeros";
  std::optional<int> word_dim;
  int frame_dim = 50;
  int max_len = 100;
  int filters = 150;
  int kernel_size = 3;
  int stride = 1;
  int hidden = 32;
  double dropout = 0.2;
  bool frozen_frames = false;
  std::string optimizer = "adam";
  double lr = 1e-3;
  int epochs = 30;
  int batch_size = 50;
  int patience = 5;
  int k = 10;
  bool stratified = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_out = true) {
  cmd->add_option("--seed", a.seed, "Root seed for every random draw")->capture_default_str();
  cmd->add_option("--workers", a.workers, "Fold/scan parallelism; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  auto* out = cmd->add_option("--out", a.out, "Output directory");
  if (needs_out) out->required();
}

void add_model(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--variant", m.variant, "word | semantic | fusion")
      ->capture_default_str()
      ->check(CLI::IsMember({"word", "semantic", "fusion"}));
  cmd->add_option("--word-emb", m.word_emb, "Word embedding text file (default: hashed random vectors)");
  cmd->add_option("--frame-emb", m.frame_emb, "Pretrained frame embedding text file");
  cmd->add_option("--oov", m.oov, "OOV policy for the word table: zeros | hashed")
      ->capture_default_str()
      ->check(CLI::IsMember({"zeros", "hashed"}));
  cmd->add_option("--word-dim", m.word_dim,
                  "Word vector dimension: 300 for hashed vectors unless set; must match --word-emb");
  cmd->add_option("--frame-dim", m.frame_dim)->capture_default_str();
  cmd->add_option("--max-len", m.max_len, "Tokens per utterance after pad/truncate")->capture_default_str();
  cmd->add_option("--filters", m.filters)->capture_default_str();
  cmd->add_option("--kernel-size", m.kernel_size)->capture_default_str();
  cmd->add_option("--stride", m.stride)->capture_default_str();
  cmd->add_option("--hidden", m.hidden)->capture_default_str();
  cmd->add_option("--dropout", m.dropout)->capture_default_str();
  cmd->add_flag("--frozen-frames", m.frozen_frames, "Do not update the frame table during training");
  cmd->add_option("--optimizer", m.optimizer)->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--lr", m.lr)->capture_default_str();
  cmd->add_option("--epochs", m.epochs)->capture_default_str();
  cmd->add_option("--batch-size", m.batch_size)->capture_default_str();
  cmd->add_option("--patience", m.patience, "Early-stopping patience on validation accuracy")->capture_default_str();
  cmd->add_option("--k", m.k, "Number of folds")->capture_default_str();
  cmd->add_flag("--stratified", m.stratified, "Stratify folds by label");
}

/// Loaded inputs shared by training subcommands.
struct ModelSetup {
  ModelConfig mc;
  TrainConfig tc;
  EmbeddingTable word;
  std::optional<EmbeddingTable> frames;
  std::map<std::string, std::string> digests;

  Embeddings embeddings() const { return {&word, frames ? &*frames : nullptr}; }
};

ModelSetup make_setup(const ModelArgs& a, std::uint64_t seed, std::size_t classes) {
  ModelSetup s;
  s.mc.variant = parse_variant(a.variant);
  s.mc.filters = a.filters;
  s.mc.kernel_size = a.kernel_size;
  s.mc.stride = a.stride;
  s.mc.hidden = a.hidden;
  s.mc.dropout = a.dropout;
  s.mc.classes = static_cast<int>(classes);
  s.mc.max_len = a.max_len;
  s.mc.frame_dim = a.frame_dim;
  s.mc.frame_trainable = !a.frozen_frames;
  const auto oov = a.oov == "hashed" ? OovPolicy::hashed(derive_seed(seed, "oov")) : OovPolicy::zeros();
  if (!a.word_emb.empty()) {
    s.word = load_embedding_text(a.word_emb);
    s.word.set_oov_policy(oov);
    s.digests[a.word_emb] = sha256_file(a.word_emb);
    if (a.word_dim && static_cast<std::size_t>(*a.word_dim) != s.word.dim())
      throw PreconditionError(fmt::format("word table {} has dimension {}, but --word-dim is {}", a.word_emb,
                                          s.word.dim(), *a.word_dim));
  } else {
    const int dim = a.word_dim.value_or(300);
    if (dim < 1) throw InputError("--word-dim must be positive");
    spdlog::info("no --word-emb given; using hashed {}-d word vectors", dim);
    s.word = EmbeddingTable(static_cast<std::size_t>(dim), OovPolicy::hashed(derive_seed(seed, "word-vectors")), false);
  }
  s.mc.word_dim = static_cast<int>(s.word.dim());
  if (!a.frame_emb.empty()) {
    s.frames = load_embedding_text(a.frame_emb);
    s.digests[a.frame_emb] = sha256_file(a.frame_emb);
    if (static_cast<int>(s.frames->dim()) != s.mc.frame_dim)
      throw PreconditionError(fmt::format("frame table {} has dimension {}, but --frame-dim is {}", a.frame_emb,
                                          s.frames->dim(), s.mc.frame_dim));
  }
  s.mc.validate();
  s.tc.optimizer.algorithm =
      a.optimizer == "sgd" ? autonet::OptimizerConfig::Algorithm::Sgd : autonet::OptimizerConfig::Algorithm::Adam;
  s.tc.optimizer.learning_rate = a.lr;
  s.tc.epochs = a.epochs;
  s.tc.batch_size = a.batch_size;
  s.tc.early_stop_patience = a.patience;
  s.tc.seed = seed;
  s.tc.validate();
  return s;
}

ordered_json setup_json(const ModelSetup& s, const ModelArgs& a, const CommonArgs& c) {
  ordered_json j;
  j["model"] = to_json(s.mc);
  j["train"] = to_json(s.tc);
  j["k"] = a.k;
  j["stratified"] = a.stratified;
  j["workers"] = c.workers;
  j["word_embeddings"] = a.word_emb.empty() ? ordered_json("hashed") : ordered_json(a.word_emb);
  j["oov"] = a.word_emb.empty() ? "hashed" : a.oov;
  j["frame_embeddings"] = a.frame_emb.empty() ? ordered_json(nullptr) : ordered_json(a.frame_emb);
  return j;
}

Corpus load_input(const std::string& path, std::map<std::string, std::string>& digests,
                  const std::string& tag = {}) {
  auto corpus = load_corpus(path);
  digests[path] = sha256_file(path);
  if (!tag.empty()) corpus = filter_by_tag(corpus, tag);
  if (corpus.empty())
    throw InputError(tag.empty() ? fmt::format("corpus {} has no utterances", path)
                                 : fmt::format("corpus {} has no utterances tagged '{}'", path, tag));
  return corpus;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, ordered_json config, std::uint64_t seed,
                    std::map<std::string, std::string> digests) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config = std::move(config);
  m.seed = seed;
  m.input_digests = std::move(digests);
  write_text(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("CORPUSSCOPE_LOG")) spdlog::set_level(spdlog::level::from_str(level));
  else spdlog::set_level(spdlog::level::warn);

  CLI::App app{"corpusscope: dataset-composition diagnostics for text emotion corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // ingest
  CommonArgs ingest_c;
  std::string ingest_corpus, ingest_format = "auto";
  std::vector<std::string> merges, drops;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print its class/tag histograms");
  ingest->add_option("--corpus", ingest_corpus, "JSONL or CSV corpus")->required();
  ingest->add_option("--format", ingest_format, "auto | jsonl | csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}));
  ingest->add_option("--merge", merges, "Relabel FROM=TO (repeatable)");
  ingest->add_option("--drop", drops, "Discard a label (repeatable)");
  add_common(ingest, ingest_c, false);

  // crossval
  CommonArgs cv_c;
  ModelArgs cv_m;
  std::string cv_corpus, cv_tag;
  bool save_models = false;
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation with 8-1-1 role rotation");
  crossval->add_option("--corpus", cv_corpus)->required();
  crossval->add_option("--tag", cv_tag, "Only use utterances carrying this tag");
  crossval->add_flag("--save-models", save_models, "Write each fold model checkpoint under <out>/models");
  add_common(crossval, cv_c);
  add_model(crossval, cv_m);

  // transfer
  CommonArgs tr_c;
  ModelArgs tr_m;
  std::string tr_source, tr_target, tr_source_tag, tr_target_tag;
  auto* transfer = app.add_subcommand("transfer", "Train fold-models on a source corpus, score the whole target");
  transfer->add_option("--source", tr_source)->required();
  transfer->add_option("--target", tr_target)->required();
  transfer->add_option("--source-tag", tr_source_tag);
  transfer->add_option("--target-tag", tr_target_tag);
  add_common(transfer, tr_c);
  add_model(transfer, tr_m);

  // overlap
  CommonArgs ov_c;
  std::string ov_corpus, ov_mode = "contiguous", ov_tag;
  int n_min = 1, n_max = 10;
  auto* overlap = app.add_subcommand("overlap", "Lexical overlap proportion per shared-word count");
  overlap->add_option("--corpus", ov_corpus)->required();
  overlap->add_option("--mode", ov_mode)->capture_default_str()->check(CLI::IsMember({"contiguous", "bag"}));
  overlap->add_option("--n-min", n_min)->capture_default_str();
  overlap->add_option("--n-max", n_max)->capture_default_str();
  overlap->add_option("--tag", ov_tag);
  add_common(overlap, ov_c);

  // confidence
  CommonArgs cf_c;
  ModelArgs cf_m;
  std::string cf_corpus, cf_model, cf_tag;
  double bracket_width = 0.05;
  auto* confidence = app.add_subcommand(
      "confidence", "Target-label activation histogram (out-of-fold predictions, or a saved --model)");
  confidence->add_option("--corpus", cf_corpus)->required();
  confidence->add_option("--model", cf_model, "Checkpoint to score with instead of running cross-validation");
  confidence->add_option("--tag", cf_tag, "Score only utterances carrying this tag");
  confidence->add_option("--bracket-width", bracket_width)->capture_default_str();
  add_common(confidence, cf_c);
  add_model(confidence, cf_m);

  // exclusivity
  CommonArgs ex_c;
  std::string ex_corpus;
  std::size_t min_occurrences = 5;
  auto* exclusivity = app.add_subcommand("exclusivity", "Per-token label exclusivity");
  exclusivity->add_option("--corpus", ex_corpus)->required();
  exclusivity->add_option("--min-occurrences", min_occurrences)->capture_default_str();
  add_common(exclusivity, ex_c);

  // synth
  CommonArgs sy_c;
  SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scripted/improvised corpus");
  synth->add_option("--name", sc.name)->capture_default_str();
  synth->add_option("--n", sc.n_utterances)->capture_default_str();
  synth->add_option("--labels", sc.n_labels)->capture_default_str();
  synth->add_option("--vocab", sc.vocab_size)->capture_default_str();
  synth->add_option("--sentence-min", sc.min_sentence_len)->capture_default_str();
  synth->add_option("--sentence-max", sc.max_sentence_len)->capture_default_str();
  synth->add_option("--templates", sc.template_count)->capture_default_str();
  synth->add_option("--duplication", sc.duplication_rate)->capture_default_str();
  synth->add_option("--signal", sc.label_signal_strength)->capture_default_str();
  synth->add_option("--noise", sc.paraphrase_noise)->capture_default_str();
  synth->add_option("--cues", sc.cues_per_label)->capture_default_str();
  synth->add_option("--frames", sc.frame_inventory)->capture_default_str();
  add_common(synth, sy_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*ingest) {
      std::map<std::string, std::string> digests;
      auto format = ingest_format == "auto" ? format_from_path(ingest_corpus)
                    : ingest_format == "csv" ? CorpusFormat::Csv
                                             : CorpusFormat::Jsonl;
      auto corpus = load_corpus(ingest_corpus, format);
      digests[ingest_corpus] = sha256_file(ingest_corpus);
      if (corpus.empty()) throw InputError("corpus " + ingest_corpus + " has no utterances");
      if (!merges.empty() || !drops.empty()) {
        LabelMapping mapping = LabelMapping::identity(corpus.labels());
        for (const auto& d : drops) {
          mapping.rules.erase(d);
          mapping.drop.insert(d);
        }
        for (const auto& m : merges) {
          auto eq = m.find('=');
          if (eq == std::string::npos || eq == 0 || eq + 1 == m.size())
            throw InputError("--merge expects FROM=TO, got '" + m + "'");
          mapping.rules[m.substr(0, eq)] = m.substr(eq + 1);
        }
        corpus = apply_label_mapping(corpus, mapping);
      }
      const auto summary = corpus_summary(corpus);
      std::cout << dump(summary);
      if (!ingest_c.out.empty()) {
        auto dir = prepare_out(ingest_c.out);
        write_text(dir / "summary.json", dump(summary));
        write_corpus_jsonl(corpus, dir / "corpus.jsonl");
        ordered_json cfg{{"corpus", ingest_corpus}, {"merge", merges}, {"drop", drops}};
        write_manifest(dir, "ingest", cfg, ingest_c.seed, digests);
      }
      return kOk;
    }

    if (*crossval) {
      std::map<std::string, std::string> digests;
      const auto corpus = load_input(cv_corpus, digests, cv_tag);
      auto setup = make_setup(cv_m, cv_c.seed, corpus.labels().size());
      const auto plan = make_fold_plan(corpus, cv_m.k, cv_c.seed, cv_m.stratified);
      auto dir = prepare_out(cv_c.out);
      HarnessOptions opts;
      opts.workers = cv_c.workers;
      if (save_models) {
        fs::create_directories(dir / "models");
        opts.on_model = [&](int fold, const EmotionModel& m) {
          save_model(m, dir / "models" / fmt::format("fold_{:02}.json", fold));
        };
      }
      const auto result = run_cv(corpus, setup.mc, setup.tc, setup.embeddings(), plan, opts);
      write_text(dir / "cv_results.json", dump(cv_to_json(result, corpus.name())));
      write_text(dir / "cv_results.csv", cv_to_csv(result));
      write_text(dir / "predictions.csv", predictions_to_csv(result, corpus));
      auto cfg = setup_json(setup, cv_m, cv_c);
      cfg["corpus"] = cv_corpus;
      cfg["tag"] = cv_tag;
      digests.insert(setup.digests.begin(), setup.digests.end());
      write_manifest(dir, "crossval", cfg, cv_c.seed, digests);
      std::cout << fmt::format("mean accuracy {:.3f} (std {:.3f}) over {} folds\n", result.mean, result.std, cv_m.k);
      return kOk;
    }

    if (*transfer) {
      std::map<std::string, std::string> digests;
      const auto source = load_input(tr_source, digests, tr_source_tag);
      const auto target = load_input(tr_target, digests, tr_target_tag);
      require_same_labels(source, target);
      auto setup = make_setup(tr_m, tr_c.seed, source.labels().size());
      const auto plan = make_fold_plan(source, tr_m.k, tr_c.seed, tr_m.stratified);
      auto dir = prepare_out(tr_c.out);
      HarnessOptions opts;
      opts.workers = tr_c.workers;
      const auto result = run_transfer(source, target, setup.mc, setup.tc, setup.embeddings(), plan, opts);
      write_text(dir / "transfer_results.json", dump(transfer_to_json(result)));
      write_text(dir / "transfer_results.csv", transfer_to_csv(result));
      write_text(dir / "source_predictions.csv", predictions_to_csv(result.source_cv, source));
      auto cfg = setup_json(setup, tr_m, tr_c);
      cfg["source"] = tr_source;
      cfg["target"] = tr_target;
      cfg["source_tag"] = tr_source_tag;
      cfg["target_tag"] = tr_target_tag;
      digests.insert(setup.digests.begin(), setup.digests.end());
      write_manifest(dir, "transfer", cfg, tr_c.seed, digests);
      std::cout << fmt::format("source CV {:.3f} (std {:.3f}); transfer {:.3f} (std {:.3f}); gap {:.3f}\n",
                               result.source_cv.mean, result.source_cv.std, result.mean, result.std,
                               result.source_cv.mean - result.mean);
      return kOk;
    }

    if (*overlap) {
      std::map<std::string, std::string> digests;
      const auto mode = parse_overlap_mode(ov_mode);
      if (n_min < 1 || n_max < n_min) throw InputError("need 1 <= --n-min <= --n-max");
      const auto corpus = load_input(ov_corpus, digests, ov_tag);
      const auto curve = overlap_curve(corpus, n_min, n_max, mode);
      auto dir = prepare_out(ov_c.out);
      write_text(dir / "overlap.csv", overlap_to_csv(curve));
      write_text(dir / "overlap.dat", overlap_to_gnuplot(curve));
      ordered_json cfg{{"corpus", ov_corpus}, {"mode", ov_mode}, {"n_min", n_min}, {"n_max", n_max}, {"tag", ov_tag}};
      write_manifest(dir, "overlap", cfg, ov_c.seed, digests);
      return kOk;
    }

    if (*confidence) {
      bracket_count(bracket_width);  // reject non-tiling widths before any work
      std::map<std::string, std::string> digests;
      const auto corpus = load_input(cf_corpus, digests);
      ConfidenceHistogram hist;
      ordered_json cfg{{"corpus", cf_corpus}, {"tag", cf_tag}, {"bracket_width", bracket_width}};
      if (!cf_model.empty()) {
        const auto model = load_model(cf_model);
        digests[cf_model] = sha256_file(cf_model);
        auto setup = make_setup(cf_m, cf_c.seed, model.labels().size());
        if (model.config().uses_words() && static_cast<int>(setup.word.dim()) != model.config().word_dim)
          throw PreconditionError("word embedding dimension does not match the checkpoint");
        const auto scored = cf_tag.empty() ? corpus : filter_by_tag(corpus, cf_tag);
        hist = confidence_histogram(model, scored, setup.embeddings(), bracket_width);
        cfg["model"] = cf_model;
        digests.insert(setup.digests.begin(), setup.digests.end());
      } else {
        auto setup = make_setup(cf_m, cf_c.seed, corpus.labels().size());
        const auto plan = make_fold_plan(corpus, cf_m.k, cf_c.seed, cf_m.stratified);
        HarnessOptions opts;
        opts.workers = cf_c.workers;
        const auto result = run_cv(corpus, setup.mc, setup.tc, setup.embeddings(), plan, opts);
        std::vector<ScoredPrediction> picked;
        for (const auto& p : result.predictions)
          if (cf_tag.empty() || corpus[p.index].has_tag(cf_tag)) picked.push_back(p);
        hist = confidence_histogram(picked, bracket_width);
        cfg.update(setup_json(setup, cf_m, cf_c));
        digests.insert(setup.digests.begin(), setup.digests.end());
      }
      auto dir = prepare_out(cf_c.out);
      write_text(dir / "confidence.csv", histogram_to_csv(hist));
      write_text(dir / "confidence.dat", histogram_to_gnuplot(hist));
      write_manifest(dir, "confidence", cfg, cf_c.seed, digests);
      std::cout << fmt::format("{} scored; {:.3f} of mass in the top bracket\n", hist.total(),
                               hist.mass_at_or_above(hist.brackets.back().lo));
      return kOk;
    }

    if (*exclusivity) {
      std::map<std::string, std::string> digests;
      const auto corpus = load_input(ex_corpus, digests);
      const auto report = exclusivity_report(corpus, min_occurrences);
      auto dir = prepare_out(ex_c.out);
      write_text(dir / "exclusivity.csv", exclusivity_to_csv(report));
      ordered_json cfg{{"corpus", ex_corpus}, {"min_occurrences", min_occurrences}};
      write_manifest(dir, "exclusivity", cfg, ex_c.seed, digests);
      return kOk;
    }

    if (*synth) {
      sc.seed = sy_c.seed;
      const auto corpus = generate(sc);
      auto dir = prepare_out(sy_c.out);
      write_corpus_jsonl(corpus, dir / "corpus.jsonl");
      write_manifest(dir, "synth", to_json(sc), sy_c.seed, {});
      std::cout << dump(corpus_summary(corpus));
      return kOk;
    }
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
