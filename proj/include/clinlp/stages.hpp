#ifndef CLINLP_STAGES_HPP
#define CLINLP_STAGES_HPP

#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinlp/assertion.hpp"
#include "clinlp/embeddings.hpp"
#include "clinlp/ner.hpp"
#include "clinlp/pipeline.hpp"
#include "clinlp/tag_codec.hpp"
#include "clinlp/text_stages.hpp"

namespace clinlp {

class DocumentAssembler : public Stage {
 public:
  explicit DocumentAssembler(std::string output = "document")
      : output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"document_assembler", {"text"}, output_, AnnotationKind::document};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    return {assemble(record.text)};
  }

 private:
  std::string output_;
};

class SentenceDetectorStage : public Stage {
 public:
  SentenceDetectorStage(SentenceRules rules = {}, std::string input = "document",
                        std::string output = "sentence")
      : rules_(std::move(rules)), input_(std::move(input)),
        output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"sentence_detector", {input_}, output_, AnnotationKind::sentence};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    const auto& docs = record.column(input_);
    std::vector<Annotation> out;
    for (const auto& d : docs) {
      auto sents = detect_sentences(record.text, d, rules_);
      out.insert(out.end(), sents.begin(), sents.end());
    }
    return out;
  }

 private:
  SentenceRules rules_;
  std::string input_, output_;
};

class TokenizerStage : public Stage {
 public:
  TokenizerStage(TokenizerRules rules = {}, std::string input = "sentence",
                 std::string output = "token")
      : rules_(std::move(rules)), input_(std::move(input)),
        output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"tokenizer", {input_}, output_, AnnotationKind::token};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    std::vector<Annotation> out;
    for (const auto& s : record.column(input_)) {
      auto toks = tokenize(record.text, s, rules_);
      out.insert(out.end(), toks.begin(), toks.end());
    }
    return out;
  }

 private:
  TokenizerRules rules_;
  std::string input_, output_;
};

class NormalizerStage : public Stage {
 public:
  NormalizerStage(std::string input = "token", std::string output = "normalized")
      : input_(std::move(input)), output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"normalizer", {input_}, output_, AnnotationKind::token};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    return normalize(record.column(input_));
  }

 private:
  std::string input_, output_;
};

class WordEmbeddingsStage : public Stage {
 public:
  WordEmbeddingsStage(std::shared_ptr<const EmbeddingStore> store,
                      std::string input = "normalized",
                      std::string output = "embeddings")
      : store_(std::move(store)), input_(std::move(input)),
        output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"word_embeddings", {input_}, output_, AnnotationKind::word_embedding};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    std::vector<Annotation> out;
    for (const auto& t : record.column(input_)) {
      auto lk = store_->lookup(t.result);
      Annotation a;
      a.kind = AnnotationKind::word_embedding;
      a.begin = t.begin;
      a.end = t.end;
      a.result = t.result;
      a.metadata = t.metadata;
      a.metadata["covered"] = lk.covered ? "true" : "false";
      a.vector = std::move(lk.vector);
      out.push_back(std::move(a));
    }
    return out;
  }
  const EmbeddingStore& store() const { return *store_; }

 private:
  std::shared_ptr<const EmbeddingStore> store_;
  std::string input_, output_;
};

namespace detail {

// Tokens grouped by their sentence index, preserving order.
inline std::vector<std::vector<size_t>> group_by_sentence(
    const std::vector<Annotation>& tokens) {
  std::vector<std::vector<size_t>> groups;
  std::map<std::string, size_t> seen;
  for (size_t i = 0; i < tokens.size(); ++i) {
    std::string key = "0";
    if (auto it = tokens[i].metadata.find("sentence"); it != tokens[i].metadata.end())
      key = it->second;
    auto sit = seen.find(key);
    if (sit == seen.end()) {
      seen.emplace(key, groups.size());
      groups.emplace_back();
      groups.back().push_back(i);
    } else {
      groups[sit->second].push_back(i);
    }
  }
  return groups;
}

}  // namespace detail

class NerStage : public Stage {
 public:
  NerStage(std::shared_ptr<const NerModel> model, std::string token_col,
           std::string embeddings_col, std::string output = "ner")
      : model_(std::move(model)), token_col_(std::move(token_col)),
        embeddings_col_(std::move(embeddings_col)), output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"ner_model", {token_col_, embeddings_col_}, output_,
            AnnotationKind::named_entity_tag};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    const auto& tokens = record.column(token_col_);
    const auto& embs = record.column(embeddings_col_);
    if (tokens.size() != embs.size())
      throw std::runtime_error("token/embedding column length mismatch");
    std::vector<Annotation> out(tokens.size());
    for (const auto& group : detail::group_by_sentence(tokens)) {
      std::vector<std::string> words;
      std::vector<std::vector<double>> vecs;
      for (size_t i : group) {
        words.push_back(tokens[i].result);
        if (!embs[i].vector)
          throw std::runtime_error("embedding annotation without vector");
        vecs.push_back(*embs[i].vector);
      }
      auto tags = model_->predict_with_vectors(words, vecs);
      for (size_t k = 0; k < group.size(); ++k) {
        const auto& t = tokens[group[k]];
        Annotation a;
        a.kind = AnnotationKind::named_entity_tag;
        a.begin = t.begin;
        a.end = t.end;
        a.result = tags[k];
        a.metadata["word"] = t.result;
        if (auto it = t.metadata.find("sentence"); it != t.metadata.end())
          a.metadata["sentence"] = it->second;
        out[group[k]] = std::move(a);
      }
    }
    return out;
  }
  const NerModel& model() const { return *model_; }

 private:
  std::shared_ptr<const NerModel> model_;
  std::string token_col_, embeddings_col_, output_;
};

class NerConverterStage : public Stage {
 public:
  NerConverterStage(std::string token_col, std::string ner_col,
                    std::string output = "ner_chunk",
                    TagScheme scheme = TagScheme::BIO)
      : token_col_(std::move(token_col)), ner_col_(std::move(ner_col)),
        output_(std::move(output)), scheme_(scheme) {}
  StageSpec spec() const override {
    return {"ner_converter", {token_col_, ner_col_}, output_,
            AnnotationKind::chunk};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    const auto& tokens = record.column(token_col_);
    const auto& ners = record.column(ner_col_);
    if (tokens.size() != ners.size())
      throw std::runtime_error("length mismatch between tokens and tags");
    std::vector<Annotation> out;
    for (const auto& group : detail::group_by_sentence(tokens)) {
      std::vector<Annotation> sent_tokens;
      std::vector<std::string> tags;
      for (size_t i : group) {
        sent_tokens.push_back(tokens[i]);
        tags.push_back(ners[i].result);
      }
      auto chunks = convert_ner(record.text, sent_tokens, tags, scheme_, true);
      out.insert(out.end(), chunks.begin(), chunks.end());
    }
    return out;
  }

 private:
  std::string token_col_, ner_col_, output_;
  TagScheme scheme_;
};

class AssertionStage : public Stage {
 public:
  AssertionStage(std::shared_ptr<const AssertionModel> model,
                 std::string token_col, std::string chunk_col,
                 std::string embeddings_col, std::string output = "assertion")
      : model_(std::move(model)), token_col_(std::move(token_col)),
        chunk_col_(std::move(chunk_col)), embeddings_col_(std::move(embeddings_col)),
        output_(std::move(output)) {}
  StageSpec spec() const override {
    return {"assertion_model", {token_col_, chunk_col_, embeddings_col_}, output_,
            AnnotationKind::assertion};
  }
  std::vector<Annotation> apply(const Record& record) const override {
    const auto& tokens = record.column(token_col_);
    const auto& embs = record.column(embeddings_col_);
    const auto& chunks = record.column(chunk_col_);
    auto groups = detail::group_by_sentence(tokens);
    std::vector<Annotation> out;
    for (const auto& c : chunks) {
      // locate the sentence containing the chunk and the covered tokens
      const std::vector<size_t>* group = nullptr;
      for (const auto& g : groups) {
        if (tokens[g.front()].begin <= c.begin && tokens[g.back()].end >= c.end) {
          group = &g;
          break;
        }
      }
      if (!group)
        throw std::runtime_error("chunk not alignable to token boundaries");
      size_t first = SIZE_MAX, last = SIZE_MAX;
      std::vector<std::vector<double>> vecs;
      std::vector<std::string> words;
      for (size_t k = 0; k < group->size(); ++k) {
        size_t i = (*group)[k];
        words.push_back(tokens[i].result);
        if (!embs[i].vector)
          throw std::runtime_error("embedding annotation without vector");
        vecs.push_back(*embs[i].vector);
        if (tokens[i].begin >= c.begin && tokens[i].end <= c.end) {
          if (first == SIZE_MAX) first = k;
          last = k;
        }
      }
      if (first == SIZE_MAX)
        throw std::runtime_error("chunk not alignable to token boundaries");
      Scope scope = extract_scope(words.size(), first, last, model_->config);
      std::vector<std::vector<double>> svecs;
      for (size_t i : scope.indices) svecs.push_back(vecs[i]);
      auto pred = model_->predict_with_vectors(svecs, scope.target_flags);
      Annotation a;
      a.kind = AnnotationKind::assertion;
      a.begin = c.begin;
      a.end = c.end;
      a.result = to_string(pred.label);
      a.metadata["label"] = to_string(pred.label);
      if (auto it = c.metadata.find("entity"); it != c.metadata.end())
        a.metadata["entity"] = it->second;
      a.metadata["chunk"] = c.result;
      double best = 0.0;
      for (double s : pred.scores) best = std::max(best, s);
      a.metadata["confidence"] = std::to_string(best);
      out.push_back(std::move(a));
    }
    return out;
  }

 private:
  std::shared_ptr<const AssertionModel> model_;
  std::string token_col_, chunk_col_, embeddings_col_, output_;
};

// ---------------------------------------------------------------------------
// NER estimator for trainable pipelines: reads a token column plus a gold
// tag column from the fitted dataset and trains the tagger.
// ---------------------------------------------------------------------------

class NerEstimator : public Estimator {
 public:
  NerEstimator(NerConfig config, std::shared_ptr<const EmbeddingStore> store,
               std::string token_col = "token", std::string label_col = "label",
               std::string embeddings_col = "embeddings",
               std::string output = "ner")
      : config_(config), store_(std::move(store)), token_col_(std::move(token_col)),
        label_col_(std::move(label_col)), embeddings_col_(std::move(embeddings_col)),
        output_(std::move(output)) {}

  StageSpec spec() const override {
    return {"ner", {token_col_, label_col_, embeddings_col_}, output_,
            AnnotationKind::named_entity_tag};
  }

  std::shared_ptr<Stage> fit(const std::vector<Record>& dataset) override {
    NerDataset ds;
    std::map<std::string, size_t> label_seen;
    std::map<uint32_t, size_t> char_seen;
    for (const auto& r : dataset) {
      const auto& tokens = r.column(token_col_);
      const auto& labels = r.column(label_col_);
      if (tokens.size() != labels.size())
        throw std::runtime_error("token/label column length mismatch");
      for (const auto& group : detail::group_by_sentence(tokens)) {
        NerSentence s;
        for (size_t i : group) {
          s.tokens.push_back(tokens[i].result);
          s.tags.push_back(labels[i].result);
        }
        for (auto& tag : s.tags)
          if (!label_seen.count(tag)) {
            label_seen[tag] = ds.label_vocab.size();
            ds.label_vocab.push_back(tag);
          }
        for (auto& tok : s.tokens)
          for (uint32_t cp : utf8::scalars(tok))
            if (!char_seen.count(cp)) {
              char_seen[cp] = ds.char_vocab.size();
              ds.char_vocab.push_back(cp);
            }
        ds.sentences.push_back(std::move(s));
      }
    }
    auto [model, history] = train_ner(config_, ds, *store_);
    last_history_ = history;
    return std::make_shared<NerStage>(
        std::make_shared<NerModel>(std::move(model)), token_col_, embeddings_col_,
        output_);
  }

  const NerHistory& last_history() const { return last_history_; }

 private:
  NerConfig config_;
  std::shared_ptr<const EmbeddingStore> store_;
  std::string token_col_, label_col_, embeddings_col_, output_;
  NerHistory last_history_;
};

// Turns a CoNLL dataset into one Record per sentence with document,
// sentence, token and label columns, for trainable pipelines.
inline std::vector<Record> conll_to_records(const NerDataset& ds) {
  std::vector<Record> out;
  for (size_t si = 0; si < ds.sentences.size(); ++si) {
    const auto& s = ds.sentences[si];
    Record r;
    r.id = "sentence-" + std::to_string(si);
    std::vector<Annotation> tokens, labels;
    size_t pos = 0;
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (i > 0) {
        r.text += " ";
        ++pos;
      }
      size_t len = utf8::scalar_length(s.tokens[i]);
      Annotation t;
      t.kind = AnnotationKind::token;
      t.begin = pos;
      t.end = pos + len - 1;
      t.result = s.tokens[i];
      t.metadata["sentence"] = "0";
      Annotation l = t;
      l.kind = AnnotationKind::named_entity_tag;
      l.result = s.tags[i];
      tokens.push_back(std::move(t));
      labels.push_back(std::move(l));
      r.text += s.tokens[i];
      pos += len;
    }
    Annotation doc;
    doc.kind = AnnotationKind::document;
    doc.begin = 0;
    doc.end = pos ? pos - 1 : 0;
    doc.result = r.text;
    Annotation sent = doc;
    sent.kind = AnnotationKind::sentence;
    sent.metadata["sentence"] = "0";
    r.add_column("document", {doc});
    r.add_column("sentence", {sent});
    r.add_column("token", std::move(tokens));
    r.add_column("label", std::move(labels));
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Declarative pipeline config (JSON): {"stages": [{"type": ..., ...}]}.
// Model and embedding paths are resolved relative to the config file.
// ---------------------------------------------------------------------------

inline PipelineModel pipeline_from_config(const nlohmann::json& config,
                                          const std::string& base_dir = "") {
  auto resolve = [&](const std::string& p) {
    if (p.empty() || p.front() == '/' || base_dir.empty()) return p;
    return base_dir + "/" + p;
  };
  PipelineModel model;
  std::map<std::string, std::shared_ptr<const EmbeddingStore>> stores;
  for (const auto& sj : config.at("stages")) {
    std::string type = sj.at("type").get<std::string>();
    if (type == "document_assembler") {
      model.stages.push_back(std::make_shared<DocumentAssembler>(
          sj.value("output", std::string("document"))));
    } else if (type == "sentence_detector") {
      SentenceRules rules;
      if (sj.contains("abbreviations")) {
        rules.abbreviation_list.clear();
        for (auto& a : sj.at("abbreviations"))
          rules.abbreviation_list.insert(a.get<std::string>());
      }
      model.stages.push_back(std::make_shared<SentenceDetectorStage>(
          rules, sj.value("input", std::string("document")),
          sj.value("output", std::string("sentence"))));
    } else if (type == "tokenizer") {
      TokenizerRules rules;
      rules.keep_internal_hyphens =
          sj.value("keep_internal_hyphens", rules.keep_internal_hyphens);
      if (sj.contains("split_characters")) {
        rules.split_characters.clear();
        for (uint32_t cp : utf8::scalars(sj.at("split_characters").get<std::string>()))
          rules.split_characters.insert(cp);
      }
      model.stages.push_back(std::make_shared<TokenizerStage>(
          rules, sj.value("input", std::string("sentence")),
          sj.value("output", std::string("token"))));
    } else if (type == "normalizer") {
      model.stages.push_back(std::make_shared<NormalizerStage>(
          sj.value("input", std::string("token")),
          sj.value("output", std::string("normalized"))));
    } else if (type == "word_embeddings") {
      std::string path = resolve(sj.at("path").get<std::string>());
      auto it = stores.find(path);
      if (it == stores.end()) {
        it = stores
                 .emplace(path, std::make_shared<EmbeddingStore>(load_embeddings(
                                    path, sj.value("case_fallback", true))))
                 .first;
      }
      model.stages.push_back(std::make_shared<WordEmbeddingsStage>(
          it->second, sj.value("input", std::string("normalized")),
          sj.value("output", std::string("embeddings"))));
    } else if (type == "ner_model") {
      auto ner = std::make_shared<NerModel>(
          load_ner_model(resolve(sj.at("model").get<std::string>())));
      model.stages.push_back(std::make_shared<NerStage>(
          ner, sj.value("token_col", std::string("normalized")),
          sj.value("embeddings_col", std::string("embeddings")),
          sj.value("output", std::string("ner"))));
    } else if (type == "ner_converter") {
      TagScheme scheme = sj.value("scheme", std::string("BIO")) == "BIOES"
                             ? TagScheme::BIOES
                             : TagScheme::BIO;
      model.stages.push_back(std::make_shared<NerConverterStage>(
          sj.value("token_col", std::string("normalized")),
          sj.value("ner_col", std::string("ner")),
          sj.value("output", std::string("ner_chunk")), scheme));
    } else if (type == "assertion_model") {
      auto am = std::make_shared<AssertionModel>(
          load_assertion_model(resolve(sj.at("model").get<std::string>())));
      model.stages.push_back(std::make_shared<AssertionStage>(
          am, sj.value("token_col", std::string("normalized")),
          sj.value("chunk_col", std::string("ner_chunk")),
          sj.value("embeddings_col", std::string("embeddings")),
          sj.value("output", std::string("assertion"))));
    } else {
      throw std::runtime_error("unknown stage type '" + type + "'");
    }
  }
  auto errors = validate(model);
  if (!errors.empty())
    throw std::runtime_error("invalid pipeline config: " + errors.front());
  return model;
}

inline PipelineModel pipeline_from_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pipeline config: " + path);
  nlohmann::json config;
  in >> config;
  std::string base_dir = ".";
  if (auto pos = path.find_last_of('/'); pos != std::string::npos)
    base_dir = path.substr(0, pos);
  return pipeline_from_config(config, base_dir);
}

}  // namespace clinlp

#endif  // CLINLP_STAGES_HPP
