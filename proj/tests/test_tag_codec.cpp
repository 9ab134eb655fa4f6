#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "clinlp/tag_codec.hpp"
#include "clinlp/text_stages.hpp"

using namespace clinlp;

TEST_CASE("encode BIOES") {
  auto tags = encode_tags({{0, 2, "GENE"}}, 4, TagScheme::BIOES);
  CHECK(tags == std::vector<std::string>{"B-GENE", "I-GENE", "E-GENE", "O"});

  tags = encode_tags({{1, 1, "GENE"}}, 3, TagScheme::BIOES);
  CHECK(tags == std::vector<std::string>{"O", "S-GENE", "O"});
}

TEST_CASE("encode BIO keeps adjacent entities distinct") {
  auto tags = encode_tags({{0, 1, "X"}, {2, 3, "X"}}, 4, TagScheme::BIO);
  CHECK(tags == std::vector<std::string>{"B-X", "I-X", "B-X", "I-X"});
}

TEST_CASE("encode rejects overlap") {
  CHECK_THROWS_WITH(encode_tags({{0, 2, "X"}, {2, 3, "X"}}, 4, TagScheme::BIO),
                    Catch::Matchers::ContainsSubstring("overlap at token 2"));
}

TEST_CASE("strict decode") {
  auto chunks = decode_tags({"B-GENE", "E-GENE", "O"}, TagScheme::BIOES);
  CHECK(chunks == std::vector<Chunk>{{0, 1, "GENE"}});

  CHECK(decode_tags({"O", "O", "O"}, TagScheme::BIO).empty());

  chunks = decode_tags({"B-X", "I-X", "B-X"}, TagScheme::BIO);
  CHECK(chunks == std::vector<Chunk>{{0, 1, "X"}, {2, 2, "X"}});
}

TEST_CASE("strict decode rejects ill-formed sequences") {
  CHECK_THROWS_WITH(decode_tags({"O", "I-X"}, TagScheme::BIO),
                    Catch::Matchers::ContainsSubstring("position 1"));
  CHECK_THROWS(decode_tags({"B-X", "O"}, TagScheme::BIOES));
  CHECK_THROWS(decode_tags({"S-X"}, TagScheme::BIO));  // lexically invalid
}

TEST_CASE("lenient decode repairs") {
  CHECK(decode_tags_lenient({"I-X", "I-X"}, TagScheme::BIO) ==
        std::vector<Chunk>{{0, 1, "X"}});
  CHECK(decode_tags_lenient({"B-X", "I-Y"}, TagScheme::BIO) ==
        std::vector<Chunk>{{0, 0, "X"}, {1, 1, "Y"}});
}

static std::vector<Chunk> random_chunks(std::mt19937_64& rng, size_t n_tokens) {
  std::vector<Chunk> chunks;
  size_t t = 0;
  while (t < n_tokens) {
    if (rng() % 2) {
      size_t len = 1 + rng() % std::min<size_t>(3, n_tokens - t);
      chunks.push_back({t, t + len - 1, rng() % 2 ? "GENE" : "DRUG"});
      t += len;
    } else {
      ++t;
    }
  }
  return chunks;
}

TEST_CASE("round trip: decode(encode(c)) == c") {
  std::mt19937_64 rng(1234);
  for (int it = 0; it < 2000; ++it) {
    size_t n = 1 + rng() % 12;
    auto chunks = random_chunks(rng, n);
    for (auto scheme : {TagScheme::BIO, TagScheme::BIOES}) {
      auto tags = encode_tags(chunks, n, scheme);
      CHECK(decode_tags(tags, scheme) == chunks);
      // lenient is identity on valid input
      CHECK(decode_tags_lenient(tags, scheme) == chunks);
    }
  }
}

TEST_CASE("lenient decode is total and well-formed, exhaustively") {
  const std::vector<std::string> bio = {"O", "B-X", "I-X", "B-Y", "I-Y"};
  const std::vector<std::string> bioes = {"O",   "B-X", "I-X", "E-X", "S-X",
                                          "B-Y", "I-Y", "E-Y", "S-Y"};
  auto run = [](const std::vector<std::string>& alphabet, TagScheme scheme) {
    for (size_t len = 1; len <= 4; ++len) {
      std::vector<size_t> idx(len, 0);
      while (true) {
        std::vector<std::string> tags;
        for (size_t i : idx) tags.push_back(alphabet[i]);
        auto chunks = decode_tags_lenient(tags, scheme);
        long prev_end = -1;
        for (auto& c : chunks) {
          CHECK(c.first_token <= c.last_token);
          CHECK(c.last_token < len);
          CHECK(long(c.first_token) > prev_end);  // sorted, non-overlapping
          CHECK_FALSE(c.label.empty());
          prev_end = long(c.last_token);
        }
        size_t pos = 0;
        while (pos < len && ++idx[pos] == alphabet.size()) idx[pos++] = 0;
        if (pos == len) break;
      }
    }
  };
  run(bio, TagScheme::BIO);
  run(bioes, TagScheme::BIOES);
}

static std::vector<Annotation> tokens_of(const std::string& text) {
  return tokenize(text, assemble(text));
}

TEST_CASE("convert_ner produces character-offset chunks") {
  std::string text = "severe fever and sore throat";
  auto toks = tokens_of(text);
  REQUIRE(toks.size() == 5);
  auto chunks = convert_ner(
      text, toks, {"B-PROBLEM", "I-PROBLEM", "O", "B-PROBLEM", "I-PROBLEM"},
      TagScheme::BIO);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].result == "severe fever");
  CHECK(chunks[0].begin == 0);
  CHECK(chunks[0].end == 11);
  CHECK(chunks[0].metadata.at("entity") == "PROBLEM");
  CHECK(chunks[1].result == "sore throat");
  CHECK(chunks[1].begin == 17);
  CHECK(chunks[1].end == 27);
}

TEST_CASE("convert_ner edge cases") {
  std::string text = "no entities here";
  auto toks = tokens_of(text);
  CHECK(convert_ner(text, toks, {"O", "O", "O"}, TagScheme::BIO).empty());
  CHECK_THROWS_WITH(convert_ner(text, toks, {"O", "O"}, TagScheme::BIO),
                    Catch::Matchers::ContainsSubstring("length mismatch"));
}
