#pragma once

// Serialization of experiment results: versioned JSON documents, CSV tables,
// gnuplot data files and the run manifest written next to every output.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "corpusscope/corpus.hpp"
#include "corpusscope/diagnostics.hpp"
#include "corpusscope/evalharness.hpp"

namespace corpusscope {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kResultSchemaVersion = 1;

using ordered_json = nlohmann::ordered_json;

ordered_json corpus_summary(const Corpus& corpus);

ordered_json cv_to_json(const CVResult& r, const std::string& corpus_name);
/// Columns: row,fold,accuracy,std; one row per fold then "mean".
std::string cv_to_csv(const CVResult& r);
/// One row per utterance: id,fold,label,predicted,target_probability,p_<label>...
std::string predictions_to_csv(const CVResult& r, const Corpus& corpus);

ordered_json transfer_to_json(const TransferResult& r);
/// Columns: row,run,accuracy,std; per-run rows then "mean" and "source_cv_mean".
std::string transfer_to_csv(const TransferResult& r);

std::string overlap_to_csv(const OverlapCurve& c);
std::string overlap_to_gnuplot(const OverlapCurve& c);
std::string histogram_to_csv(const ConfidenceHistogram& h);
std::string histogram_to_gnuplot(const ConfidenceHistogram& h);
std::string exclusivity_to_csv(const ExclusivityReport& r);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string subcommand;
  ordered_json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::string tool_version{kToolVersion};
};

/// The manifest is the only output carrying a timestamp.
ordered_json to_json(const RunManifest& m);

void write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace corpusscope
