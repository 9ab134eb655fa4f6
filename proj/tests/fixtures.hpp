#ifndef CLINLP_TESTS_FIXTURES_HPP
#define CLINLP_TESTS_FIXTURES_HPP

// Small trained models plus an end-to-end pipeline over the synthetic
// corpora, shared across test files. Training happens once and is cached.

#include <memory>

#include "clinlp/corpus.hpp"
#include "clinlp/stages.hpp"
#include "synthetic.hpp"

namespace fixtures {

struct Models {
  std::shared_ptr<const clinlp::EmbeddingStore> store;
  std::shared_ptr<const clinlp::NerModel> ner;
  std::shared_ptr<const clinlp::AssertionModel> assertion;
};

inline const Models& small_models() {
  static const Models models = [] {
    Models m;
    m.store = std::make_shared<clinlp::EmbeddingStore>(
        synthetic::make_embeddings(12, 2024));

    clinlp::NerConfig ncfg;
    ncfg.max_epochs = 8;
    ncfg.lstm_hidden = 16;
    ncfg.char_embedding_dim = 8;
    ncfg.char_filters = 8;
    ncfg.dropout = 0.1;
    ncfg.validation_split = 0.1;
    ncfg.seed = 9;
    auto ds = synthetic::make_ner_corpus(120, 501);
    auto [ner, nh] = clinlp::train_ner(ncfg, ds, *m.store);
    m.ner = std::make_shared<clinlp::NerModel>(std::move(ner));

    clinlp::AssertionConfig acfg;
    acfg.lstm_hidden = 16;
    acfg.epochs = 12;
    acfg.batch_size = 32;
    acfg.dropout = 0.0;
    acfg.learning_rate = 0.01;
    acfg.seed = 9;
    auto exs = synthetic::make_assertion_corpus(300, 502);
    auto [assertion, ah] = clinlp::train_assertion(acfg, exs, *m.store);
    m.assertion = std::make_shared<clinlp::AssertionModel>(std::move(assertion));
    return m;
  }();
  return models;
}

inline clinlp::PipelineModel full_pipeline(const Models& m) {
  using namespace clinlp;
  PipelineModel p;
  p.stages.push_back(std::make_shared<DocumentAssembler>());
  p.stages.push_back(std::make_shared<SentenceDetectorStage>());
  p.stages.push_back(std::make_shared<TokenizerStage>());
  p.stages.push_back(std::make_shared<NormalizerStage>());
  p.stages.push_back(std::make_shared<WordEmbeddingsStage>(
      std::shared_ptr<const EmbeddingStore>(m.store)));
  p.stages.push_back(std::make_shared<NerStage>(m.ner, "normalized", "embeddings"));
  p.stages.push_back(std::make_shared<NerConverterStage>("normalized", "ner"));
  p.stages.push_back(std::make_shared<AssertionStage>(m.assertion, "normalized",
                                                      "ner_chunk", "embeddings"));
  return p;
}

inline std::vector<clinlp::Record> document_corpus(size_t n_docs,
                                                   size_t sentences_per_doc,
                                                   uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<clinlp::Record> out;
  for (size_t i = 0; i < n_docs; ++i) {
    clinlp::Record r;
    char buf[16];
    std::snprintf(buf, sizeof buf, "doc-%04zu", i);
    r.id = buf;
    r.text = synthetic::make_document_text(sentences_per_doc, rng);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fixtures

#endif  // CLINLP_TESTS_FIXTURES_HPP
