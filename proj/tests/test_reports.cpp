#include <doctest.h>

#include <filesystem>

#include "corpusscope/reports.hpp"
#include "test_support.hpp"

using namespace corpusscope;
using namespace corpusscope::testing;

TEST_CASE("sha256_file") {
  const auto path = std::filesystem::temp_directory_path() / "corpusscope_sha_test.txt";
  write_text(path, "abc");
  CHECK(sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  write_text(path, "");
  CHECK(sha256_file(path) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(sha256_file(path), InputError);
}

TEST_CASE("manifest fields") {
  RunManifest m;
  m.subcommand = "crossval";
  m.seed = 42;
  m.config = {{"k", 10}};
  m.input_digests["a.jsonl"] = "00";
  const auto j = to_json(m);
  CHECK(j["schema_version"] == kResultSchemaVersion);
  CHECK(j["subcommand"] == "crossval");
  CHECK(j["seed"] == 42);
  CHECK(j["tool_version"] == std::string(kToolVersion));
  CHECK(j["config"]["k"] == 10);
  CHECK(j["inputs"]["a.jsonl"] == "00");
  CHECK(j.contains("created_unix"));
}

TEST_CASE("overlap CSV") {
  const Corpus c("three", {make_utterance("s1", "a b c d", "x"), make_utterance("s2", "a b c d", "y"),
                           make_utterance("s3", "x y z", "x")});
  CHECK(overlap_to_csv(overlap_curve(c, 3, 5, OverlapMode::Contiguous)) ==
        "n,considered,overlapping,proportion\n"
        "3,3,2,0.666667\n"
        "4,2,2,1.000000\n"
        "5,0,0,\n");
  const auto dat = overlap_to_gnuplot(overlap_curve(c, 5, 5, OverlapMode::Contiguous));
  CHECK(dat.find("5 0 0 NaN") != std::string::npos);
}

TEST_CASE("histogram CSV has one row per bracket") {
  auto h = make_histogram(0.25);
  add_to_histogram(h, std::vector<double>{0.9, 0.1}, 0);
  CHECK(histogram_to_csv(h) ==
        "lo,hi,correct,incorrect,total\n"
        "0.000000,0.250000,0,0,0\n"
        "0.250000,0.500000,0,0,0\n"
        "0.500000,0.750000,0,0,0\n"
        "0.750000,1.000000,1,0,1\n");
}

TEST_CASE("exclusivity CSV quotes awkward labels") {
  const Corpus c("q", {make_utterance("a", "fine", "calm, mostly")});
  const auto csv = exclusivity_to_csv(exclusivity_report(c, 1));
  CHECK(csv ==
        "token,total,exclusivity,dominant_label,label_counts\n"
        "fine,1,1.000000,\"calm, mostly\",\"calm, mostly:1\"\n");
}
