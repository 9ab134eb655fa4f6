#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "clinlp/assertion.hpp"
#include "synthetic.hpp"

using namespace clinlp;

TEST_CASE("assertion label string round trip") {
  for (size_t i = 0; i < kAssertionLabelCount; ++i) {
    auto l = static_cast<AssertionLabel>(i);
    CHECK(assertion_label_from_string(to_string(l)) == l);
  }
  CHECK(assertion_label_from_string("someone_else") ==
        AssertionLabel::associated_with_someone_else);
  CHECK_THROWS_WITH(assertion_label_from_string("certain"),
                    Catch::Matchers::ContainsSubstring("unknown assertion label"));
}

TEST_CASE("scope window around a mid-sentence target") {
  AssertionConfig cfg;  // left 9, right 15
  auto s = extract_scope(30, 12, 12, cfg);
  REQUIRE(s.indices.size() == 25);
  CHECK(s.indices.front() == 3);
  CHECK(s.indices.back() == 27);
  for (size_t k = 0; k < s.indices.size(); ++k)
    CHECK(s.target_flags[k] == (s.indices[k] == 12));
}

TEST_CASE("scope clips at sentence boundaries") {
  AssertionConfig cfg;
  auto a = extract_scope(5, 0, 0, cfg);
  CHECK(a.indices.front() == 0);
  CHECK(a.indices.back() == 4);

  auto b = extract_scope(12, 10, 11, cfg);
  CHECK(b.indices.front() == 1);
  CHECK(b.indices.back() == 11);
}

TEST_CASE("scope formula holds exhaustively for short sentences") {
  AssertionConfig cfg;
  for (size_t n = 1; n <= 40; ++n)
    for (size_t first = 0; first < n; ++first)
      for (size_t last = first; last < n; ++last) {
        auto s = extract_scope(n, first, last, cfg);
        size_t lo = first >= cfg.left_window ? first - cfg.left_window : 0;
        size_t hi = std::min(n - 1, last + cfg.right_window);
        REQUIRE(s.indices.size() == hi - lo + 1);
        CHECK(s.indices.front() == lo);
        CHECK(s.indices.back() == hi);
        for (size_t k = 0; k < s.indices.size(); ++k)
          CHECK(s.target_flags[k] ==
                (s.indices[k] >= first && s.indices[k] <= last));
      }
}

TEST_CASE("scope rejects invalid targets") {
  AssertionConfig cfg;
  CHECK_THROWS(extract_scope(0, 0, 0, cfg));
  CHECK_THROWS(extract_scope(5, 3, 2, cfg));
  CHECK_THROWS(extract_scope(5, 1, 5, cfg));
}

TEST_CASE("truncation keeps the target and respects the limit") {
  AssertionExample ex;
  for (int i = 0; i < 300; ++i) ex.tokens.push_back("w" + std::to_string(i));
  ex.target_first = 150;
  ex.target_last = 152;
  ex.label = AssertionLabel::absent;
  auto t = truncate_example(ex, 250);
  CHECK(t.tokens.size() == 250);
  CHECK(t.target_last < t.tokens.size());
  CHECK(t.tokens[t.target_first] == "w150");
  CHECK(t.tokens[t.target_last] == "w152");
  CHECK(t.label == AssertionLabel::absent);

  // short sentences pass through unchanged
  AssertionExample shortex{{"a", "b", "c"}, 1, 1, AssertionLabel::possible};
  auto u = truncate_example(shortex, 250);
  CHECK(u.tokens == shortex.tokens);
  CHECK(u.target_first == 1);
}

static AssertionConfig small_config() {
  AssertionConfig cfg;
  cfg.lstm_hidden = 16;
  cfg.epochs = 8;
  cfg.batch_size = 16;
  cfg.dropout = 0.0;
  cfg.learning_rate = 0.01;
  cfg.seed = 3;
  return cfg;
}

TEST_CASE("prediction scores form a distribution over the six labels") {
  auto store = synthetic::make_embeddings(8, 71);
  auto examples = synthetic::make_assertion_corpus(20, 72);
  auto cfg = small_config();
  cfg.epochs = 1;
  auto [model, history] = train_assertion(cfg, examples, store);
  auto pred = model.predict(examples[0].tokens, examples[0].target_first,
                            examples[0].target_last, store);
  REQUIRE(pred.scores.size() == kAssertionLabelCount);
  double s = 0;
  for (double v : pred.scores) s += v;
  CHECK(s == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a single example can be memorized") {
  auto store = synthetic::make_embeddings(8, 81);
  auto ex = synthetic::make_cue_example(synthetic::cue_templates()[0], "fever");
  REQUIRE(ex.label == AssertionLabel::absent);
  auto cfg = small_config();
  cfg.epochs = 60;
  cfg.learning_rate = 0.05;
  auto [model, history] = train_assertion(cfg, {ex}, store);
  auto pred = model.predict(ex.tokens, ex.target_first, ex.target_last, store);
  CHECK(pred.label == AssertionLabel::absent);
  CHECK(history.train_accuracy.back() == 1.0);
}

TEST_CASE("training loss decreases on the cue corpus") {
  auto store = synthetic::make_embeddings(8, 91);
  auto examples = synthetic::make_assertion_corpus(80, 92);
  auto [model, history] = train_assertion(small_config(), examples, store);
  REQUIRE(history.train_loss.size() == 8);
  CHECK(history.train_loss.back() < history.train_loss.front());
}

TEST_CASE("assertion training is deterministic for a fixed seed") {
  auto store = synthetic::make_embeddings(8, 101);
  auto examples = synthetic::make_assertion_corpus(40, 102);
  auto cfg = small_config();
  cfg.epochs = 2;
  auto bytes_of = [&](uint64_t seed) {
    auto c = cfg;
    c.seed = seed;
    auto [model, history] = train_assertion(c, examples, store);
    std::ostringstream os;
    std::vector<const Parameter*> ps;
    for (auto* p : model.net.params()) ps.push_back(p);
    nn::save_params(os, ps);
    return os.str();
  };
  CHECK(bytes_of(9) == bytes_of(9));
  CHECK(bytes_of(9) != bytes_of(10));
}

TEST_CASE("tokens outside the scope window cannot change the prediction") {
  auto store = synthetic::make_embeddings(8, 111);
  auto examples = synthetic::make_assertion_corpus(40, 112);
  auto cfg = small_config();
  cfg.epochs = 2;
  auto [model, history] = train_assertion(cfg, examples, store);

  // target far enough from the edges that edits beyond the window are ignored
  std::vector<std::string> tokens(40, "the");
  tokens[20] = "fever";
  auto base = model.predict(tokens, 20, 20, store);
  auto edited = tokens;
  edited[0] = "aspirin";    // 20 - 9 = 11 > 0, outside the left window
  edited[39] = "dizziness"; // 20 + 15 = 35 < 39, outside the right window
  auto other = model.predict(edited, 20, 20, store);
  CHECK(base.scores == other.scores);
}

TEST_CASE("assertion model save/load round trip") {
  auto store = synthetic::make_embeddings(8, 121);
  auto examples = synthetic::make_assertion_corpus(40, 122);
  auto cfg = small_config();
  cfg.epochs = 2;
  auto [model, history] = train_assertion(cfg, examples, store);
  std::string path = "assertion_roundtrip.bin";
  save_assertion_model(model, path);
  auto loaded = load_assertion_model(path);
  for (size_t i = 0; i < 10; ++i) {
    auto& ex = examples[i];
    auto a = model.predict(ex.tokens, ex.target_first, ex.target_last, store);
    auto b = loaded.predict(ex.tokens, ex.target_first, ex.target_last, store);
    CHECK(a.label == b.label);
    CHECK(a.scores == b.scores);
  }
  std::remove(path.c_str());
}

TEST_CASE("load rejects a model file of the wrong kind") {
  std::string path = "wrong_kind_assert.bin";
  {
    std::ofstream os(path, std::ios::binary);
    write_model_header(os, "ner", nlohmann::ordered_json::object());
  }
  CHECK_THROWS_WITH(load_assertion_model(path),
                    Catch::Matchers::ContainsSubstring("not an assertion model"));
  std::remove(path.c_str());
}

TEST_CASE("read_assertion_jsonl parses examples and reports bad lines") {
  std::string path = "assert_data.jsonl";
  {
    std::ofstream os(path);
    os << R"({"tokens":["no","fever"],"target_first":1,"target_last":1,"label":"absent"})"
       << "\n\n"
       << R"({"tokens":["fever"],"target_first":0,"target_last":0,"label":"someone_else"})"
       << "\n";
  }
  auto exs = read_assertion_jsonl(path);
  REQUIRE(exs.size() == 2);
  CHECK(exs[0].tokens == std::vector<std::string>{"no", "fever"});
  CHECK(exs[0].label == AssertionLabel::absent);
  CHECK(exs[1].label == AssertionLabel::associated_with_someone_else);

  {
    std::ofstream os(path);
    os << "{\"tokens\":[\"x\"]}\n";
  }
  CHECK_THROWS_WITH(read_assertion_jsonl(path),
                    Catch::Matchers::ContainsSubstring("line 1"));
  std::remove(path.c_str());

  CHECK_THROWS(read_assertion_jsonl("no_such_file.jsonl"));
}

TEST_CASE("invalid training examples are rejected") {
  auto store = synthetic::make_embeddings(8, 131);
  AssertionExample bad{{"a", "b"}, 1, 0, AssertionLabel::present};
  CHECK_THROWS_WITH(train_assertion(small_config(), {bad}, store),
                    Catch::Matchers::ContainsSubstring("invalid assertion example"));
  CHECK_THROWS_WITH(train_assertion(small_config(), {}, store),
                    Catch::Matchers::ContainsSubstring("empty assertion dataset"));
}
