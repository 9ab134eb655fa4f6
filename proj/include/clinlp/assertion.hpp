#ifndef CLINLP_ASSERTION_HPP
#define CLINLP_ASSERTION_HPP

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinlp/embeddings.hpp"
#include "clinlp/ner.hpp"
#include "clinlp/nn.hpp"

namespace clinlp {

enum class AssertionLabel {
  present,
  absent,
  possible,
  conditional,
  hypothetical,
  associated_with_someone_else,
};

inline constexpr size_t kAssertionLabelCount = 6;

inline const char* to_string(AssertionLabel l) {
  switch (l) {
    case AssertionLabel::present: return "present";
    case AssertionLabel::absent: return "absent";
    case AssertionLabel::possible: return "possible";
    case AssertionLabel::conditional: return "conditional";
    case AssertionLabel::hypothetical: return "hypothetical";
    case AssertionLabel::associated_with_someone_else:
      return "associated_with_someone_else";
  }
  return "?";
}

inline AssertionLabel assertion_label_from_string(const std::string& s) {
  if (s == "present") return AssertionLabel::present;
  if (s == "absent") return AssertionLabel::absent;
  if (s == "possible") return AssertionLabel::possible;
  if (s == "conditional") return AssertionLabel::conditional;
  if (s == "hypothetical") return AssertionLabel::hypothetical;
  if (s == "associated_with_someone_else" || s == "someone_else")
    return AssertionLabel::associated_with_someone_else;
  throw std::runtime_error("unknown assertion label '" + s + "'");
}

struct AssertionConfig {
  size_t left_window = 9;
  size_t right_window = 15;
  double learning_rate = 0.0012;
  double dropout = 0.05;
  size_t batch_size = 64;
  size_t max_sentence_length = 250;
  size_t epochs = 20;
  size_t lstm_hidden = 128;
  size_t flag_embedding_dim = 10;
  uint64_t seed = 1;
};

inline nlohmann::ordered_json to_json(const AssertionConfig& c) {
  return {{"left_window", c.left_window},
          {"right_window", c.right_window},
          {"learning_rate", c.learning_rate},
          {"dropout", c.dropout},
          {"batch_size", c.batch_size},
          {"max_sentence_length", c.max_sentence_length},
          {"epochs", c.epochs},
          {"lstm_hidden", c.lstm_hidden},
          {"flag_embedding_dim", c.flag_embedding_dim},
          {"seed", c.seed}};
}

inline AssertionConfig assertion_config_from_json(const nlohmann::json& j) {
  AssertionConfig c;
  c.left_window = j.value("left_window", c.left_window);
  c.right_window = j.value("right_window", c.right_window);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.dropout = j.value("dropout", c.dropout);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_sentence_length = j.value("max_sentence_length", c.max_sentence_length);
  c.epochs = j.value("epochs", c.epochs);
  c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
  c.flag_embedding_dim = j.value("flag_embedding_dim", c.flag_embedding_dim);
  c.seed = j.value("seed", c.seed);
  return c;
}

struct AssertionExample {
  std::vector<std::string> tokens;
  size_t target_first = 0;
  size_t target_last = 0;
  AssertionLabel label = AssertionLabel::present;
};

struct Scope {
  std::vector<size_t> indices;      // token indices inside the window
  std::vector<bool> target_flags;   // per scope position
};

// Scope = [max(0, first - left), min(n-1, last + right)].
inline Scope extract_scope(size_t n_tokens, size_t target_first,
                           size_t target_last, const AssertionConfig& config) {
  if (n_tokens == 0 || target_first > target_last || target_last >= n_tokens)
    throw std::runtime_error("invalid target span");
  size_t lo = target_first >= config.left_window
                  ? target_first - config.left_window
                  : 0;
  size_t hi = std::min(n_tokens - 1, target_last + config.right_window);
  Scope s;
  for (size_t i = lo; i <= hi; ++i) {
    s.indices.push_back(i);
    s.target_flags.push_back(i >= target_first && i <= target_last);
  }
  return s;
}

// Truncates around the target when the sentence exceeds the maximum length.
inline AssertionExample truncate_example(AssertionExample ex, size_t max_len) {
  if (ex.tokens.size() <= max_len) return ex;
  size_t target_len = ex.target_last - ex.target_first + 1;
  size_t budget = max_len > target_len ? max_len - target_len : 0;
  size_t left = budget / 2;
  size_t lo = ex.target_first >= left ? ex.target_first - left : 0;
  size_t hi = std::min(ex.tokens.size() - 1, lo + max_len - 1);
  if (hi - lo + 1 > max_len) hi = lo + max_len - 1;
  AssertionExample out;
  out.tokens.assign(ex.tokens.begin() + long(lo), ex.tokens.begin() + long(hi) + 1);
  out.target_first = ex.target_first - lo;
  out.target_last = std::min(ex.target_last - lo, out.tokens.size() - 1);
  out.label = ex.label;
  return out;
}

// ---------------------------------------------------------------------------
// Windowed Bi-LSTM classifier: scope tokens embed as word vector plus a
// learned target-flag embedding; the concatenated final forward/backward
// states feed a dense layer over the six labels.
// ---------------------------------------------------------------------------

struct AssertionNetwork {
  nn::EmbeddingTable flag_emb;  // rows: 0 = outside target, 1 = inside
  nn::BiLstm bilstm;
  nn::Dense out;
  size_t word_dim = 0;

  AssertionNetwork() = default;
  AssertionNetwork(const AssertionConfig& cfg, size_t word_dim_, nn::Rng& rng)
      : flag_emb("flag_emb", 2, cfg.flag_embedding_dim, rng),
        bilstm("bilstm", cfg.lstm_hidden, word_dim_ + cfg.flag_embedding_dim, rng),
        out("out", kAssertionLabelCount, 2 * cfg.lstm_hidden, rng),
        word_dim(word_dim_) {}

  std::vector<Parameter*> params() {
    std::vector<Parameter*> p = flag_emb.params();
    for (auto* q : bilstm.params()) p.push_back(q);
    for (auto* q : out.params()) p.push_back(q);
    return p;
  }

  struct Cache {
    std::vector<bool> flags;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> input_masks;
    nn::BiLstmCache bilstm_cache;
    std::vector<double> head_input;
    std::vector<double> head_mask;
    size_t T = 0;
  };

  std::vector<double> forward(const std::vector<std::vector<double>>& word_vecs,
                              const std::vector<bool>& flags, Cache* cache,
                              double dropout_p = 0.0,
                              nn::Rng* rng = nullptr) const {
    size_t T = word_vecs.size();
    if (T == 0) throw std::runtime_error("assertion: empty scope");
    std::vector<std::vector<double>> inputs(T);
    std::vector<std::vector<double>> in_masks(T);
    for (size_t t = 0; t < T; ++t) {
      inputs[t] = word_vecs[t];
      auto f = flag_emb.forward(flags[t] ? 1 : 0);
      inputs[t].insert(inputs[t].end(), f.begin(), f.end());
      if (dropout_p > 0.0 && rng) {
        in_masks[t] = nn::dropout_mask(*rng, inputs[t].size(), dropout_p);
        for (size_t j = 0; j < inputs[t].size(); ++j) inputs[t][j] *= in_masks[t][j];
      }
    }
    auto hs = bilstm.forward(inputs, cache ? &cache->bilstm_cache : nullptr);
    size_t h = bilstm.hidden();
    // final forward state is hs[T-1][0:h]; final backward state is hs[0][h:2h]
    std::vector<double> head(2 * h);
    std::copy(hs[T - 1].begin(), hs[T - 1].begin() + long(h), head.begin());
    std::copy(hs[0].begin() + long(h), hs[0].end(), head.begin() + long(h));
    std::vector<double> head_mask;
    if (dropout_p > 0.0 && rng) {
      head_mask = nn::dropout_mask(*rng, head.size(), dropout_p);
      for (size_t j = 0; j < head.size(); ++j) head[j] *= head_mask[j];
    }
    auto logits = out.forward(head);
    if (cache) {
      cache->flags = flags;
      cache->inputs = inputs;
      cache->input_masks = std::move(in_masks);
      cache->head_input = head;
      cache->head_mask = std::move(head_mask);
      cache->T = T;
    }
    return logits;
  }

  void backward(const Cache& cache, const std::vector<double>& dlogits) {
    size_t T = cache.T;
    size_t h = bilstm.hidden();
    auto dhead = out.backward(cache.head_input, dlogits);
    if (!cache.head_mask.empty())
      for (size_t j = 0; j < dhead.size(); ++j) dhead[j] *= cache.head_mask[j];
    std::vector<std::vector<double>> dhs(T, std::vector<double>(2 * h, 0.0));
    for (size_t j = 0; j < h; ++j) {
      dhs[T - 1][j] += dhead[j];
      dhs[0][h + j] += dhead[h + j];
    }
    auto dinputs = bilstm.backward(cache.bilstm_cache, dhs);
    for (size_t t = 0; t < T; ++t) {
      if (!cache.input_masks[t].empty())
        for (size_t j = 0; j < dinputs[t].size(); ++j)
          dinputs[t][j] *= cache.input_masks[t][j];
      std::vector<double> dflag(dinputs[t].begin() + long(word_dim),
                                dinputs[t].end());
      flag_emb.backward(cache.flags[t] ? 1 : 0, dflag);
    }
  }
};

struct AssertionModel {
  AssertionConfig config;
  size_t word_dim = 0;
  AssertionNetwork net;

  struct Prediction {
    AssertionLabel label = AssertionLabel::present;
    std::vector<double> scores;  // per label, sums to 1
  };

  Prediction predict_with_vectors(
      const std::vector<std::vector<double>>& scope_vecs,
      const std::vector<bool>& flags) const {
    auto logits = net.forward(scope_vecs, flags, nullptr);
    auto scores = nn::softmax(logits);
    size_t best = 0;
    for (size_t c = 1; c < scores.size(); ++c)
      if (scores[c] > scores[best]) best = c;
    return {static_cast<AssertionLabel>(best), scores};
  }

  Prediction predict(const std::vector<std::string>& tokens, size_t target_first,
                     size_t target_last, const EmbeddingStore& store) const {
    AssertionExample ex{tokens, target_first, target_last,
                        AssertionLabel::present};
    ex = truncate_example(std::move(ex), config.max_sentence_length);
    Scope scope = extract_scope(ex.tokens.size(), ex.target_first,
                                ex.target_last, config);
    std::vector<std::vector<double>> vecs;
    for (size_t i : scope.indices)
      vecs.push_back(store.lookup(ex.tokens[i]).vector);
    return predict_with_vectors(vecs, scope.target_flags);
  }
};

struct AssertionHistory {
  std::vector<double> train_loss;
  std::vector<double> train_accuracy;
};

inline nlohmann::ordered_json to_json(const AssertionHistory& h) {
  return {{"train_loss", h.train_loss}, {"train_accuracy", h.train_accuracy}};
}

inline std::pair<AssertionModel, AssertionHistory> train_assertion(
    const AssertionConfig& config, const std::vector<AssertionExample>& examples,
    const EmbeddingStore& store) {
  if (examples.empty()) throw std::runtime_error("empty assertion dataset");
  nn::Rng rng(config.seed);
  AssertionModel model;
  model.config = config;
  model.word_dim = store.dimension;
  model.net = AssertionNetwork(config, store.dimension, rng);

  struct Prepared {
    std::vector<std::vector<double>> vecs;
    std::vector<bool> flags;
    size_t target = 0;
  };
  std::vector<Prepared> prepared;
  for (const auto& raw : examples) {
    if (raw.tokens.empty() || raw.target_first > raw.target_last ||
        raw.target_last >= raw.tokens.size())
      throw std::runtime_error("invalid assertion example");
    AssertionExample ex = truncate_example(raw, config.max_sentence_length);
    Scope scope = extract_scope(ex.tokens.size(), ex.target_first,
                                ex.target_last, config);
    Prepared p;
    for (size_t i : scope.indices)
      p.vecs.push_back(store.lookup(ex.tokens[i]).vector);
    p.flags = scope.target_flags;
    p.target = size_t(ex.label);
    prepared.push_back(std::move(p));
  }

  auto params = model.net.params();
  nn::AdamState adam;
  adam.base_lr = config.learning_rate;

  std::vector<size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  AssertionHistory history;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    size_t correct = 0;
    for (size_t i = 0; i < order.size(); i += config.batch_size) {
      size_t e = std::min(i + config.batch_size, order.size());
      nn::zero_grads(params);
      double inv = 1.0 / double(e - i);
      for (size_t k = i; k < e; ++k) {
        const Prepared& p = prepared[order[k]];
        AssertionNetwork::Cache cache;
        auto logits = model.net.forward(p.vecs, p.flags, &cache, config.dropout,
                                        &rng);
        Tensor lt({1, logits.size()}, logits);
        auto res = nn::softmax_xent(lt, {p.target}, {true});
        epoch_loss += res.loss;
        size_t best = 0;
        for (size_t c = 1; c < logits.size(); ++c)
          if (logits[c] > logits[best]) best = c;
        correct += best == p.target ? 1 : 0;
        std::vector<double> dl(res.dlogits.data);
        for (double& g : dl) g *= inv;
        model.net.backward(cache, dl);
      }
      nn::adam_step(params, adam, long(epoch));
    }
    history.train_loss.push_back(epoch_loss / double(prepared.size()));
    history.train_accuracy.push_back(double(correct) / double(prepared.size()));
  }
  return {std::move(model), std::move(history)};
}

// Training data: JSON Lines with tokens, target_first, target_last, label.
inline std::vector<AssertionExample> read_assertion_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open assertion data: " + path);
  std::vector<AssertionExample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      AssertionExample ex;
      ex.tokens = j.at("tokens").get<std::vector<std::string>>();
      ex.target_first = j.at("target_first").get<size_t>();
      ex.target_last = j.at("target_last").get<size_t>();
      ex.label = assertion_label_from_string(j.at("label").get<std::string>());
      out.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void save_assertion_model(const AssertionModel& model,
                                 const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write model file: " + path);
  nlohmann::ordered_json meta;
  meta["config"] = to_json(model.config);
  meta["word_dim"] = model.word_dim;
  write_model_header(os, "assertion", meta);
  AssertionModel& m = const_cast<AssertionModel&>(model);
  std::vector<const Parameter*> ps;
  for (auto* p : m.net.params()) ps.push_back(p);
  nn::save_params(os, ps);
}

inline AssertionModel load_assertion_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  auto [kind, meta] = read_model_header(is);
  if (kind != "assertion")
    throw std::runtime_error("model file is not an assertion model");
  AssertionModel model;
  model.config = assertion_config_from_json(meta.at("config"));
  model.word_dim = meta.at("word_dim").get<size_t>();
  nn::Rng rng(0);
  model.net = AssertionNetwork(model.config, model.word_dim, rng);
  auto loaded = nn::load_params(is);
  nn::restore_params(model.net.params(), loaded);
  return model;
}

}  // namespace clinlp

#endif  // CLINLP_ASSERTION_HPP
