#ifndef CLINLP_NER_HPP
#define CLINLP_NER_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "clinlp/embeddings.hpp"
#include "clinlp/evaluation.hpp"
#include "clinlp/nn.hpp"
#include "clinlp/tag_codec.hpp"
#include "clinlp/utf8.hpp"

namespace clinlp {

struct NerConfig {
  size_t max_epochs = 10;
  double learning_rate = 0.001;
  double decay_po = 0.005;
  size_t batch_size = 8;
  double dropout = 0.5;
  double validation_split = 0.2;
  size_t char_embedding_dim = 25;
  size_t char_filters = 30;
  size_t char_window = 3;
  size_t lstm_hidden = 200;
  TagScheme tag_scheme = TagScheme::BIO;
  uint64_t seed = 1;
};

inline nlohmann::ordered_json to_json(const NerConfig& c) {
  return {{"max_epochs", c.max_epochs},
          {"learning_rate", c.learning_rate},
          {"decay_po", c.decay_po},
          {"batch_size", c.batch_size},
          {"dropout", c.dropout},
          {"validation_split", c.validation_split},
          {"char_embedding_dim", c.char_embedding_dim},
          {"char_filters", c.char_filters},
          {"char_window", c.char_window},
          {"lstm_hidden", c.lstm_hidden},
          {"tag_scheme", c.tag_scheme == TagScheme::BIOES ? "BIOES" : "BIO"},
          {"seed", c.seed}};
}

inline NerConfig ner_config_from_json(const nlohmann::json& j) {
  NerConfig c;
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.decay_po = j.value("decay_po", c.decay_po);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.dropout = j.value("dropout", c.dropout);
  c.validation_split = j.value("validation_split", c.validation_split);
  c.char_embedding_dim = j.value("char_embedding_dim", c.char_embedding_dim);
  c.char_filters = j.value("char_filters", c.char_filters);
  c.char_window = j.value("char_window", c.char_window);
  c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
  c.tag_scheme = j.value("tag_scheme", std::string("BIO")) == "BIOES"
                     ? TagScheme::BIOES
                     : TagScheme::BIO;
  c.seed = j.value("seed", c.seed);
  return c;
}

struct NerSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

struct NerDataset {
  std::vector<NerSentence> sentences;
  std::vector<std::string> label_vocab;      // order of first appearance
  std::vector<uint32_t> char_vocab;          // order of first appearance; slot 0 is OOV
};

// CoNLL column format: whitespace-separated columns per token line, last
// column is the tag; blank line ends a sentence; -DOCSTART- lines skipped.
inline NerDataset parse_conll(std::istream& in, TagScheme scheme) {
  NerDataset ds;
  std::map<std::string, size_t> label_seen;
  std::map<uint32_t, size_t> char_seen;
  NerSentence cur;
  std::string line;
  size_t lineno = 0;
  auto flush = [&] {
    if (cur.tokens.empty()) return;
    size_t idx = ds.sentences.size();
    try {
      decode_tags(cur.tags, scheme);
    } catch (const std::exception& e) {
      throw std::runtime_error("invalid tag sequence in sentence " +
                               std::to_string(idx) + ": " + e.what());
    }
    for (auto& tag : cur.tags)
      if (!label_seen.count(tag)) {
        label_seen[tag] = ds.label_vocab.size();
        ds.label_vocab.push_back(tag);
      }
    for (auto& tok : cur.tokens)
      for (uint32_t cp : utf8::scalars(tok))
        if (!char_seen.count(cp)) {
          char_seen[cp] = ds.char_vocab.size();
          ds.char_vocab.push_back(cp);
        }
    ds.sentences.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("-DOCSTART-", 0) == 0) continue;
    std::istringstream ls(line);
    std::vector<std::string> cols;
    std::string c;
    while (ls >> c) cols.push_back(c);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols.size() < 2)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": tag column missing");
    cur.tokens.push_back(cols.front());
    cur.tags.push_back(cols.back());
  }
  flush();
  return ds;
}

inline NerDataset read_conll(const std::string& path,
                             TagScheme scheme = TagScheme::BIO) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CoNLL file: " + path);
  return parse_conll(in, scheme);
}

// ---------------------------------------------------------------------------
// BiLSTM-CNN-char network: per token, a character convolution feature is
// concatenated with the (frozen) word vector; a BiLSTM runs over the
// sentence and a dense layer scores each tag.
// ---------------------------------------------------------------------------

struct NerNetwork {
  nn::EmbeddingTable char_emb;
  nn::CharConv conv;
  nn::BiLstm bilstm;
  nn::Dense out;
  size_t word_dim = 0;

  NerNetwork() = default;
  NerNetwork(const NerConfig& cfg, size_t n_chars, size_t n_labels,
             size_t word_dim_, nn::Rng& rng)
      : char_emb("char_emb", n_chars, cfg.char_embedding_dim, rng),
        conv("char_conv", cfg.char_filters, cfg.char_window,
             cfg.char_embedding_dim, rng),
        bilstm("bilstm", cfg.lstm_hidden, word_dim_ + cfg.char_filters, rng),
        out("out", n_labels, 2 * cfg.lstm_hidden, rng),
        word_dim(word_dim_) {}

  std::vector<Parameter*> params() {
    std::vector<Parameter*> p = char_emb.params();
    for (auto* q : conv.params()) p.push_back(q);
    for (auto* q : bilstm.params()) p.push_back(q);
    for (auto* q : out.params()) p.push_back(q);
    return p;
  }

  struct Cache {
    std::vector<std::vector<size_t>> char_ids;       // per token
    std::vector<nn::CharConvCache> conv_caches;
    std::vector<std::vector<double>> inputs;         // post input-dropout
    std::vector<std::vector<double>> input_masks;
    nn::BiLstmCache bilstm_cache;
    std::vector<std::vector<double>> lstm_out;       // post output-dropout
    std::vector<std::vector<double>> output_masks;
  };

  Tensor forward(const std::vector<std::vector<size_t>>& char_ids,
                 const std::vector<std::vector<double>>& word_vecs,
                 Cache* cache, double dropout_p = 0.0,
                 nn::Rng* rng = nullptr) const {
    size_t T = word_vecs.size();
    std::vector<std::vector<double>> inputs(T);
    std::vector<nn::CharConvCache> conv_caches(T);
    std::vector<std::vector<double>> in_masks(T), out_masks(T);
    for (size_t t = 0; t < T; ++t) {
      std::vector<std::vector<double>> cvecs;
      for (size_t id : char_ids[t]) cvecs.push_back(char_emb.forward(id));
      auto feat = conv.forward(cvecs, cache ? &conv_caches[t] : nullptr);
      inputs[t] = word_vecs[t];
      inputs[t].insert(inputs[t].end(), feat.begin(), feat.end());
      if (dropout_p > 0.0 && rng) {
        in_masks[t] = nn::dropout_mask(*rng, inputs[t].size(), dropout_p);
        for (size_t j = 0; j < inputs[t].size(); ++j) inputs[t][j] *= in_masks[t][j];
      }
    }
    auto hs = bilstm.forward(inputs, cache ? &cache->bilstm_cache : nullptr);
    Tensor logits({T, out.out_dim()});
    for (size_t t = 0; t < T; ++t) {
      if (dropout_p > 0.0 && rng) {
        out_masks[t] = nn::dropout_mask(*rng, hs[t].size(), dropout_p);
        for (size_t j = 0; j < hs[t].size(); ++j) hs[t][j] *= out_masks[t][j];
      }
      auto y = out.forward(hs[t]);
      std::copy(y.begin(), y.end(), logits.row(t));
    }
    if (cache) {
      cache->char_ids = char_ids;
      cache->conv_caches = std::move(conv_caches);
      cache->inputs = inputs;
      cache->input_masks = std::move(in_masks);
      cache->lstm_out = hs;
      cache->output_masks = std::move(out_masks);
    }
    return logits;
  }

  void backward(const Cache& cache, const Tensor& dlogits) {
    size_t T = cache.inputs.size();
    std::vector<std::vector<double>> dhs(T);
    for (size_t t = 0; t < T; ++t) {
      std::vector<double> dy(dlogits.row(t), dlogits.row(t) + dlogits.cols());
      dhs[t] = out.backward(cache.lstm_out[t], dy);
      if (!cache.output_masks[t].empty())
        for (size_t j = 0; j < dhs[t].size(); ++j)
          dhs[t][j] *= cache.output_masks[t][j];
    }
    auto dinputs = bilstm.backward(cache.bilstm_cache, dhs);
    for (size_t t = 0; t < T; ++t) {
      if (!cache.input_masks[t].empty())
        for (size_t j = 0; j < dinputs[t].size(); ++j)
          dinputs[t][j] *= cache.input_masks[t][j];
      // word vectors are frozen; only the char-feature slice flows back
      std::vector<double> dfeat(dinputs[t].begin() + long(word_dim),
                                dinputs[t].end());
      auto dchars = conv.backward(cache.conv_caches[t], dfeat);
      for (size_t k = 0; k < dchars.size(); ++k)
        char_emb.backward(cache.char_ids[t][k], dchars[k]);
    }
  }
};

struct NerModel {
  NerConfig config;
  std::vector<std::string> label_vocab;
  std::vector<uint32_t> char_vocab;
  std::unordered_map<uint32_t, size_t> char_index;  // +1 offset; 0 is OOV
  size_t word_dim = 0;
  NerNetwork net;

  void build_char_index() {
    char_index.clear();
    for (size_t i = 0; i < char_vocab.size(); ++i)
      char_index[char_vocab[i]] = i + 1;
  }

  std::vector<size_t> char_ids(const std::string& token) const {
    std::vector<size_t> ids;
    for (uint32_t cp : utf8::scalars(token)) {
      auto it = char_index.find(cp);
      ids.push_back(it == char_index.end() ? 0 : it->second);
    }
    if (ids.empty()) ids.push_back(0);
    return ids;
  }

  std::vector<std::string> predict_with_vectors(
      const std::vector<std::string>& tokens,
      const std::vector<std::vector<double>>& word_vecs) const {
    if (tokens.empty()) throw std::runtime_error("predict: empty token list");
    std::vector<std::vector<size_t>> cids;
    for (auto& t : tokens) cids.push_back(char_ids(t));
    Tensor logits = net.forward(cids, word_vecs, nullptr);
    std::vector<std::string> tags;
    for (size_t t = 0; t < tokens.size(); ++t) {
      size_t best = 0;
      for (size_t c = 1; c < logits.cols(); ++c)
        if (logits.at(t, c) > logits.at(t, best)) best = c;
      tags.push_back(label_vocab[best]);
    }
    return tags;
  }

  std::vector<std::string> predict(const std::vector<std::string>& tokens,
                                   const EmbeddingStore& store) const {
    std::vector<std::vector<double>> vecs;
    for (auto& t : tokens) vecs.push_back(store.lookup(t).vector);
    return predict_with_vectors(tokens, vecs);
  }
};

struct NerHistory {
  std::vector<double> train_loss;
  std::vector<double> val_micro_f1;  // empty when validation_split = 0
};

inline nlohmann::ordered_json to_json(const NerHistory& h) {
  return {{"train_loss", h.train_loss}, {"val_micro_f1", h.val_micro_f1}};
}

namespace detail {

struct PreparedSentence {
  std::vector<std::vector<size_t>> char_ids;
  std::vector<std::vector<double>> word_vecs;
  std::vector<size_t> targets;
};

inline PreparedSentence prepare_sentence(const NerModel& model,
                                         const NerSentence& s,
                                         const EmbeddingStore& store,
                                         const std::map<std::string, size_t>& labels) {
  PreparedSentence p;
  for (auto& tok : s.tokens) {
    p.char_ids.push_back(model.char_ids(tok));
    p.word_vecs.push_back(store.lookup(tok).vector);
  }
  for (auto& tag : s.tags) p.targets.push_back(labels.at(tag));
  return p;
}

}  // namespace detail

// Trains with Adam over seeded, length-bucketed mini-batches; the last
// validation_split fraction of the shuffled sentences is held out.
inline std::pair<NerModel, NerHistory> train_ner(const NerConfig& config,
                                                 const NerDataset& dataset,
                                                 const EmbeddingStore& store) {
  if (dataset.sentences.empty())
    throw std::runtime_error("empty dataset");
  if (store.dimension == 0)
    throw std::runtime_error("embedding store has dimension 0");

  nn::Rng rng(config.seed);
  NerModel model;
  model.config = config;
  model.label_vocab = dataset.label_vocab;
  model.char_vocab = dataset.char_vocab;
  model.build_char_index();
  model.word_dim = store.dimension;
  model.net = NerNetwork(config, dataset.char_vocab.size() + 1,
                         dataset.label_vocab.size(), store.dimension, rng);

  std::map<std::string, size_t> labels;
  for (size_t i = 0; i < model.label_vocab.size(); ++i)
    labels[model.label_vocab[i]] = i;

  std::vector<size_t> order(dataset.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  size_t n_val = size_t(double(order.size()) * config.validation_split);
  if (n_val >= order.size()) n_val = order.size() - 1;
  std::vector<size_t> train_idx(order.begin(), order.end() - long(n_val));
  std::vector<size_t> val_idx(order.end() - long(n_val), order.end());

  // bucket by length: stable sort keeps shuffle order within equal lengths
  std::stable_sort(train_idx.begin(), train_idx.end(), [&](size_t a, size_t b) {
    return dataset.sentences[a].tokens.size() < dataset.sentences[b].tokens.size();
  });
  std::vector<std::vector<size_t>> batches;
  for (size_t i = 0; i < train_idx.size(); i += config.batch_size) {
    size_t e = std::min(i + config.batch_size, train_idx.size());
    batches.emplace_back(train_idx.begin() + long(i), train_idx.begin() + long(e));
  }

  auto params = model.net.params();
  nn::AdamState adam;
  adam.base_lr = config.learning_rate;
  adam.decay_po = config.decay_po;

  NerHistory history;
  for (size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(batches.begin(), batches.end(), rng);
    double epoch_loss = 0.0;
    size_t epoch_tokens = 0;
    for (auto& batch : batches) {
      nn::zero_grads(params);
      size_t batch_tokens = 0;
      for (size_t si : batch) batch_tokens += dataset.sentences[si].tokens.size();
      double batch_loss = 0.0;
      for (size_t si : batch) {
        auto prep = detail::prepare_sentence(model, dataset.sentences[si], store, labels);
        size_t T = prep.targets.size();
        NerNetwork::Cache cache;
        Tensor logits = model.net.forward(prep.char_ids, prep.word_vecs, &cache,
                                          config.dropout, &rng);
        auto res = nn::softmax_xent(logits, prep.targets,
                                    std::vector<bool>(T, true));
        // re-weight the per-sentence mean into a batch-level token mean
        double w = double(T) / double(batch_tokens);
        batch_loss += res.loss * w;
        for (double& g : res.dlogits.data) g *= w;
        model.net.backward(cache, res.dlogits);
      }
      nn::adam_step(params, adam, long(epoch));
      epoch_loss += batch_loss * double(batch_tokens);
      epoch_tokens += batch_tokens;
    }
    history.train_loss.push_back(epoch_tokens ? epoch_loss / double(epoch_tokens)
                                              : 0.0);
    if (!val_idx.empty()) {
      std::vector<std::vector<Chunk>> gold, pred;
      for (size_t si : val_idx) {
        const auto& s = dataset.sentences[si];
        gold.push_back(decode_tags_lenient(s.tags, config.tag_scheme));
        auto tags = model.predict(s.tokens, store);
        pred.push_back(decode_tags_lenient(tags, config.tag_scheme));
      }
      history.val_micro_f1.push_back(chunk_prf(gold, pred).micro_f1);
    }
  }
  return {std::move(model), std::move(history)};
}

// ---------------------------------------------------------------------------
// Model persistence: "CLMF" header, kind string, JSON metadata, then the
// shared binary parameter block.
// ---------------------------------------------------------------------------

inline constexpr char kModelMagic[4] = {'C', 'L', 'M', 'F'};
inline constexpr uint32_t kModelVersion = 1;

inline void write_model_header(std::ostream& os, const std::string& kind,
                               const nlohmann::ordered_json& meta) {
  os.write(kModelMagic, 4);
  nn::detail::write_raw<uint32_t>(os, kModelVersion);
  std::string m = meta.dump();
  nn::detail::write_raw<uint32_t>(os, uint32_t(kind.size()));
  os.write(kind.data(), std::streamsize(kind.size()));
  nn::detail::write_raw<uint64_t>(os, m.size());
  os.write(m.data(), std::streamsize(m.size()));
}

inline std::pair<std::string, nlohmann::json> read_model_header(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kModelMagic, 4) != 0)
    throw std::runtime_error("not a model file");
  uint32_t version = nn::detail::read_raw<uint32_t>(is);
  if (version != kModelVersion)
    throw std::runtime_error("unsupported model file version");
  uint32_t klen = nn::detail::read_raw<uint32_t>(is);
  std::string kind(klen, '\0');
  is.read(kind.data(), klen);
  uint64_t mlen = nn::detail::read_raw<uint64_t>(is);
  std::string meta(mlen, '\0');
  is.read(meta.data(), std::streamsize(mlen));
  if (!is) throw std::runtime_error("unexpected end of model file");
  return {kind, nlohmann::json::parse(meta)};
}

inline void save_ner_model(const NerModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write model file: " + path);
  nlohmann::ordered_json meta;
  meta["config"] = to_json(model.config);
  meta["label_vocab"] = model.label_vocab;
  meta["char_vocab"] = model.char_vocab;
  meta["word_dim"] = model.word_dim;
  write_model_header(os, "ner", meta);
  NerModel& m = const_cast<NerModel&>(model);
  std::vector<const Parameter*> ps;
  for (auto* p : m.net.params()) ps.push_back(p);
  nn::save_params(os, ps);
}

inline NerModel load_ner_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  auto [kind, meta] = read_model_header(is);
  if (kind != "ner") throw std::runtime_error("model file is not an NER model");
  NerModel model;
  model.config = ner_config_from_json(meta.at("config"));
  model.label_vocab = meta.at("label_vocab").get<std::vector<std::string>>();
  model.char_vocab = meta.at("char_vocab").get<std::vector<uint32_t>>();
  model.build_char_index();
  model.word_dim = meta.at("word_dim").get<size_t>();
  nn::Rng rng(0);
  model.net = NerNetwork(model.config, model.char_vocab.size() + 1,
                         model.label_vocab.size(), model.word_dim, rng);
  auto loaded = nn::load_params(is);
  nn::restore_params(model.net.params(), loaded);
  return model;
}

}  // namespace clinlp

#endif  // CLINLP_NER_HPP
