#include "corpusscope/reports.hpp"

#include <chrono>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "corpusscope/errors.hpp"

namespace corpusscope {

namespace {

ordered_json confusion_json(const ConfusionMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

ordered_json corpus_summary(const Corpus& corpus) {
  ordered_json j;
  j["name"] = corpus.name();
  j["utterances"] = corpus.size();
  j["labels"] = corpus.labels();
  j["class_histogram"] = class_histogram(corpus);
  j["tag_histogram"] = tag_histogram(corpus);
  return j;
}

ordered_json cv_to_json(const CVResult& r, const std::string& corpus_name) {
  ordered_json j;
  j["schema"] = "corpusscope.cv";
  j["schema_version"] = kResultSchemaVersion;
  j["corpus"] = corpus_name;
  j["labels"] = r.labels;
  j["k"] = r.fold_accuracy.size();
  ordered_json folds = ordered_json::array();
  for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i) {
    ordered_json f;
    f["fold"] = i;
    f["accuracy"] = r.fold_accuracy[i];
    f["confusion"] = confusion_json(r.confusion[i]);
    if (i < r.logs.size()) {
      f["best_epoch"] = r.logs[i].best_epoch;
      f["epochs_run"] = r.logs[i].epochs.size();
      f["stopped_early"] = r.logs[i].stopped_early;
    }
    folds.push_back(std::move(f));
  }
  j["folds"] = std::move(folds);
  j["mean"] = r.mean;
  j["std"] = r.std;
  return j;
}

std::string cv_to_csv(const CVResult& r) {
  std::string out = "row,fold,accuracy,std\n";
  for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i)
    out += fmt::format("fold,{},{},\n", i, fixed(r.fold_accuracy[i]));
  out += fmt::format("mean,,{},{}\n", fixed(r.mean), fixed(r.std));
  return out;
}

std::string predictions_to_csv(const CVResult& r, const Corpus& corpus) {
  std::string out = "id,fold,label,predicted,target_probability";
  for (const auto& l : r.labels) out += ",p_" + csv_escape(l);
  out += '\n';
  for (const auto& p : r.predictions) {
    out += fmt::format("{},{},{},{},{}", csv_escape(corpus[p.index].id), p.fold, csv_escape(r.labels[static_cast<std::size_t>(p.target)]),
                       csv_escape(r.labels[static_cast<std::size_t>(p.predicted)]),
                       fixed(p.probs[static_cast<std::size_t>(p.target)]));
    for (double v : p.probs) out += "," + fixed(v);
    out += '\n';
  }
  return out;
}

ordered_json transfer_to_json(const TransferResult& r) {
  ordered_json j;
  j["schema"] = "corpusscope.transfer";
  j["schema_version"] = kResultSchemaVersion;
  j["source"] = r.source;
  j["target"] = r.target;
  j["labels"] = r.source_cv.labels;
  ordered_json runs = ordered_json::array();
  for (std::size_t i = 0; i < r.run_accuracy.size(); ++i) {
    ordered_json run;
    run["run"] = i;
    run["accuracy"] = r.run_accuracy[i];
    run["confusion"] = confusion_json(r.confusion[i]);
    runs.push_back(std::move(run));
  }
  j["runs"] = std::move(runs);
  j["mean"] = r.mean;
  j["std"] = r.std;
  j["source_cv"] = cv_to_json(r.source_cv, r.source);
  j["generalization_gap"] = r.source_cv.mean - r.mean;
  return j;
}

std::string transfer_to_csv(const TransferResult& r) {
  std::string out = "row,run,accuracy,std\n";
  for (std::size_t i = 0; i < r.run_accuracy.size(); ++i)
    out += fmt::format("run,{},{},\n", i, fixed(r.run_accuracy[i]));
  out += fmt::format("mean,,{},{}\n", fixed(r.mean), fixed(r.std));
  out += fmt::format("source_cv_mean,,{},{}\n", fixed(r.source_cv.mean), fixed(r.source_cv.std));
  return out;
}

std::string overlap_to_csv(const OverlapCurve& c) {
  std::string out = "n,considered,overlapping,proportion\n";
  for (const auto& p : c.points)
    out += fmt::format("{},{},{},{}\n", p.n, p.considered, p.overlapping, p.proportion ? fixed(*p.proportion) : "");
  return out;
}

std::string overlap_to_gnuplot(const OverlapCurve& c) {
  std::string out = fmt::format("# overlap curve, mode {}\n# n considered overlapping proportion\n", to_string(c.mode));
  for (const auto& p : c.points)
    out += fmt::format("{} {} {} {}\n", p.n, p.considered, p.overlapping, p.proportion ? fixed(*p.proportion) : "NaN");
  return out;
}

std::string histogram_to_csv(const ConfidenceHistogram& h) {
  std::string out = "lo,hi,correct,incorrect,total\n";
  for (const auto& b : h.brackets)
    out += fmt::format("{},{},{},{},{}\n", fixed(b.lo), fixed(b.hi), b.correct, b.incorrect, b.total());
  return out;
}

std::string histogram_to_gnuplot(const ConfidenceHistogram& h) {
  std::string out = "# target-label activation histogram\n# lo hi correct incorrect total\n";
  for (const auto& b : h.brackets)
    out += fmt::format("{} {} {} {} {}\n", fixed(b.lo), fixed(b.hi), b.correct, b.incorrect, b.total());
  return out;
}

std::string exclusivity_to_csv(const ExclusivityReport& r) {
  std::string out = "token,total,exclusivity,dominant_label,label_counts\n";
  for (const auto& e : r.entries) {
    std::string counts;
    for (const auto& [label, n] : e.label_counts) counts += fmt::format("{}{}:{}", counts.empty() ? "" : "|", label, n);
    out += fmt::format("{},{},{},{},{}\n", csv_escape(e.token), e.total, fixed(e.exclusivity),
                       csv_escape(e.dominant_label), csv_escape(counts));
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

ordered_json to_json(const RunManifest& m) {
  ordered_json j;
  j["schema"] = "corpusscope.manifest";
  j["schema_version"] = kResultSchemaVersion;
  j["subcommand"] = m.subcommand;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = m.input_digests;
  const auto now = std::chrono::system_clock::now();
  j["created_unix"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  return j;
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

}  // namespace corpusscope
