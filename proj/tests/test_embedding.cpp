#include <doctest.h>

#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "corpusscope/embedding.hpp"
#include "corpusscope/errors.hpp"
#include "corpusscope/rng.hpp"

using namespace corpusscope;

TEST_CASE("load_embedding_text") {
  const auto t = parse_embedding_text("hello 0.1 0.2\nworld 0.3 0.4");
  CHECK(t.dim() == 2);
  CHECK(t.size() == 2);
  CHECK_FALSE(t.trainable());
  CHECK(t.lookup("world")[1] == doctest::Approx(0.4));

  SUBCASE("header line is skipped") {
    const auto h = parse_embedding_text("2 3\na 1 2 3\nb 4 5 6\n");
    CHECK(h.dim() == 3);
    CHECK(h.size() == 2);
  }
  SUBCASE("inconsistent length names the line") {
    try {
      parse_embedding_text("hello 0.1 0.2\nworld 0.3 0.4\nbad 0.1\n");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("empty file") { CHECK_THROWS_AS(parse_embedding_text(""), FormatError); }
  SUBCASE("non-numeric value") { CHECK_THROWS_AS(parse_embedding_text("a 0.1 zz\n"), FormatError); }
}

TEST_CASE("text format round-trips bit-exactly") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 1 + uniform_index(rng, 12);
    EmbeddingTable t(dim, OovPolicy::zeros(), false);
    std::vector<double> v(dim);
    for (int i = 0; i < 15; ++i) {
      for (auto& x : v) x = uniform(rng, -5.0, 5.0) * std::pow(10.0, static_cast<double>(uniform_index(rng, 9)) - 4.0);
      t.add(fmt::format("tok{}", i), v);
    }
    const auto back = parse_embedding_text(to_embedding_text(t));
    REQUIRE(back.size() == t.size());
    CHECK(back.tokens() == t.tokens());
    CHECK(back.checksum() == t.checksum());
  }
}

TEST_CASE("new_trainable_table") {
  std::vector<std::string> symbols;
  for (int i = 0; i < 10; ++i) symbols.push_back(fmt::format("Frame{}", i));
  const auto t = new_trainable_table(symbols, 50, 42);
  CHECK(t.size() == 10);
  CHECK(t.dim() == 50);
  CHECK(t.trainable());
  CHECK(t.vectors().maxCoeff() <= 0.05);
  CHECK(t.vectors().minCoeff() >= -0.05);
  CHECK(new_trainable_table(symbols, 50, 42).checksum() == t.checksum());
  CHECK(new_trainable_table(symbols, 50, 43).checksum() != t.checksum());
  CHECK_THROWS_AS(new_trainable_table(symbols, 0, 1), InputError);
  CHECK_THROWS_AS(new_trainable_table({}, 5, 1), InputError);
}

TEST_CASE("embed_sequence") {
  const auto t = parse_embedding_text("hello 0.1 0.2\nworld 0.3 0.4");
  SUBCASE("padding") {
    const std::vector<std::string> toks{"hello", "world"};
    const auto m = embed_sequence(toks, t, 4);
    REQUIRE(m.rows() == 4);
    REQUIRE(m.cols() == 2);
    CHECK(m.values(0, 0) == 0.1);
    CHECK(m.values(0, 1) == 0.2);
    CHECK(m.values(1, 0) == 0.3);
    CHECK(m.values(1, 1) == 0.4);
    CHECK(m.values.bottomRows(2).isZero(0.0));
    CHECK(m.mask == std::vector<bool>{true, true, false, false});
  }
  SUBCASE("OOV with zeros policy is a real zero row") {
    const std::vector<std::string> toks{"unknown"};
    const auto m = embed_sequence(toks, t, 2);
    CHECK(m.values.row(0).isZero(0.0));
    CHECK(m.mask[0]);
    CHECK(m.source_rows[0] == -1);
  }
  SUBCASE("truncation keeps the head") {
    const std::vector<std::string> toks{"hello", "world", "hello", "world", "x", "y"};
    const auto m = embed_sequence(toks, t, 4);
    CHECK(m.rows() == 4);
    CHECK(m.mask == std::vector<bool>{true, true, true, true});
    CHECK(m.values(3, 1) == 0.4);
  }
  SUBCASE("shape is (max_len, dim) for any length") {
    for (std::size_t n = 0; n < 12; ++n) {
      std::vector<std::string> toks(n, "hello");
      const auto m = embed_sequence(toks, t, 7);
      CHECK(m.rows() == 7);
      CHECK(m.cols() == 2);
    }
  }
  CHECK_THROWS_AS(embed_sequence(std::vector<std::string>{"a"}, t, 0), InputError);
}

TEST_CASE("hashed OOV vectors are deterministic per token and seed") {
  EmbeddingTable t(16, OovPolicy::hashed(9), false);
  const auto a = t.lookup("beast");
  const auto b = t.lookup("beast");
  CHECK(a == b);
  CHECK(a != t.lookup("beasts"));
  CHECK(a != hashed_vector("beast", 10, 16));
  CHECK(a == hashed_vector("beast", 9, 16));
  CHECK(a.cwiseAbs().maxCoeff() <= 0.5);
  // A shorter vector is a prefix of a longer one for the same token.
  CHECK(std::bit_cast<std::uint64_t>(hashed_vector("beast", 9, 1)[0]) ==
        std::bit_cast<std::uint64_t>(hashed_vector("beast", 9, 4)[0]));
}
