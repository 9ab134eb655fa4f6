// Acceptance suite: one criterion per invocation (argv[1] = 1..10), or all
// when run without arguments. Prints one pass/fail line per criterion and
// exits non-zero on any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "clinlp/assertion.hpp"
#include "clinlp/corpus.hpp"
#include "clinlp/evaluation.hpp"
#include "clinlp/ner.hpp"
#include "clinlp/nn.hpp"
#include "clinlp/stages.hpp"
#include "clinlp/tag_codec.hpp"
#include "fixtures.hpp"
#include "synthetic.hpp"

using namespace clinlp;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "    failed: " << what << "\n";
    }
  }
};

// --------------------------------------------------------------------------
// 1. Tag-codec round trip on 10,000 randomized chunk sets per scheme.
// --------------------------------------------------------------------------
bool criterion_1(Check& c) {
  std::mt19937_64 rng(20260823);
  for (int it = 0; it < 10000; ++it) {
    size_t n = 1 + rng() % 16;
    std::vector<Chunk> chunks;
    size_t t = 0;
    while (t < n) {
      if (rng() % 2) {
        size_t len = 1 + rng() % std::min<size_t>(4, n - t);
        chunks.push_back({t, t + len - 1, rng() % 2 ? "PROBLEM" : "DRUG"});
        t += len;
      } else {
        ++t;
      }
    }
    for (auto scheme : {TagScheme::BIO, TagScheme::BIOES}) {
      auto tags = encode_tags(chunks, n, scheme);
      if (decode_tags(tags, scheme) != chunks) {
        c.require(false, "round trip mismatch at iteration " + std::to_string(it));
        return c.ok;
      }
    }
  }
  return c.ok;
}

// --------------------------------------------------------------------------
// 2. Lenient decode is total and well-formed over all short sequences.
// --------------------------------------------------------------------------
bool criterion_2(Check& c) {
  for (auto scheme : {TagScheme::BIO, TagScheme::BIOES}) {
    std::vector<std::string> alphabet =
        scheme == TagScheme::BIO
            ? std::vector<std::string>{"O", "B-X", "I-X", "B-Y", "I-Y"}
            : std::vector<std::string>{"O", "B-X", "I-X", "E-X", "S-X",
                                       "B-Y", "I-Y", "E-Y", "S-Y"};
    for (size_t len = 1; len <= 4; ++len) {
      std::vector<size_t> idx(len, 0);
      bool done = false;
      while (!done) {
        std::vector<std::string> tags;
        for (size_t i : idx) tags.push_back(alphabet[i]);
        try {
          auto chunks = decode_tags_lenient(tags, scheme);
          long prev = -1;
          for (auto& ch : chunks) {
            c.require(ch.first_token <= ch.last_token && ch.last_token < len,
                      "chunk bounds");
            c.require(long(ch.first_token) > prev, "sorted non-overlapping");
            c.require(!ch.label.empty(), "label non-empty");
            prev = long(ch.last_token);
          }
        } catch (const std::exception& e) {
          c.require(false, std::string("lenient decode threw: ") + e.what());
          return c.ok;
        }
        size_t pos = 0;
        while (pos < len && ++idx[pos] == alphabet.size()) idx[pos++] = 0;
        done = pos == len;
      }
    }
  }
  return c.ok;
}

// --------------------------------------------------------------------------
// 3. Gradient checks: every layer plus both full networks, <= 1e-5.
// --------------------------------------------------------------------------
bool criterion_3(Check& c) {
  using namespace clinlp::nn;
  const double tol = 1e-5;

  {  // dense layer
    Rng rng(31);
    Dense dense("d", 3, 4, rng);
    std::vector<double> x = {0.1, -0.2, 0.3, 0.7};
    auto loss = [&] {
      auto y = dense.forward(x);
      Tensor logits({1, y.size()}, y);
      return softmax_xent(logits, {1}, {true}).loss;
    };
    auto params = dense.params();
    zero_grads(params);
    auto y = dense.forward(x);
    Tensor logits({1, y.size()}, y);
    auto res = softmax_xent(logits, {1}, {true});
    dense.backward(x, std::vector<double>(res.dlogits.data));
    c.require(grad_check(loss, params).worst <= tol, "dense layer gradient");
  }

  {  // bilstm + head over a short sequence
    Rng rng(32);
    size_t h = 3, d = 2, T = 5;
    BiLstm net("b", h, d, rng);
    Dense head("head", 2, 2 * h, rng);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::vector<double>> xs(T, std::vector<double>(d));
    for (auto& x : xs)
      for (auto& v : x) v = u(rng);
    std::vector<size_t> targets = {0, 1, 1, 0, 1};
    auto loss = [&] {
      auto hs = net.forward(xs, nullptr);
      Tensor logits({T, 2});
      for (size_t t = 0; t < T; ++t) {
        auto y = head.forward(hs[t]);
        std::copy(y.begin(), y.end(), logits.row(t));
      }
      return softmax_xent(logits, targets, std::vector<bool>(T, true)).loss;
    };
    std::vector<Parameter*> params = net.params();
    for (auto* p : head.params()) params.push_back(p);
    zero_grads(params);
    BiLstmCache cache;
    auto hs = net.forward(xs, &cache);
    Tensor logits({T, 2});
    for (size_t t = 0; t < T; ++t) {
      auto y = head.forward(hs[t]);
      std::copy(y.begin(), y.end(), logits.row(t));
    }
    auto res = softmax_xent(logits, targets, std::vector<bool>(T, true));
    std::vector<std::vector<double>> dhs(T);
    for (size_t t = 0; t < T; ++t)
      dhs[t] = head.backward(
          hs[t], std::vector<double>(res.dlogits.row(t), res.dlogits.row(t) + 2));
    net.backward(cache, dhs);
    c.require(grad_check(loss, params).worst <= tol, "bilstm gradient");
  }

  {  // char conv + embedding table
    Rng rng(33);
    EmbeddingTable emb("emb", 6, 3, rng);
    CharConv conv("conv", 4, 3, 3, rng);
    Dense head("head", 2, 4, rng);
    std::vector<size_t> ids = {1, 5, 0, 2, 3};
    auto loss = [&] {
      std::vector<std::vector<double>> cs;
      for (size_t id : ids) cs.push_back(emb.forward(id));
      auto pooled = conv.forward(cs, nullptr);
      auto y = head.forward(pooled);
      Tensor logits({1, 2}, y);
      return softmax_xent(logits, {0}, {true}).loss;
    };
    std::vector<Parameter*> params = emb.params();
    for (auto* p : conv.params()) params.push_back(p);
    for (auto* p : head.params()) params.push_back(p);
    zero_grads(params);
    std::vector<std::vector<double>> cs;
    for (size_t id : ids) cs.push_back(emb.forward(id));
    CharConvCache cache;
    auto pooled = conv.forward(cs, &cache);
    auto y = head.forward(pooled);
    Tensor logits({1, 2}, y);
    auto res = softmax_xent(logits, {0}, {true});
    auto dpooled = head.backward(pooled, std::vector<double>(res.dlogits.data));
    auto dcs = conv.backward(cache, dpooled);
    for (size_t k = 0; k < ids.size(); ++k) emb.backward(ids[k], dcs[k]);
    c.require(grad_check(loss, params).worst <= tol, "char conv gradient");
  }

  {  // full NER network on a micro-dataset sentence
    Rng rng(34);
    NerConfig cfg;
    cfg.char_embedding_dim = 4;
    cfg.char_filters = 4;
    cfg.lstm_hidden = 3;
    NerNetwork net(cfg, 5, 3, 2, rng);
    std::vector<std::vector<size_t>> char_ids = {{1, 2}, {3}, {4, 1, 2}};
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::vector<double>> word_vecs(3, std::vector<double>(2));
    for (auto& v : word_vecs)
      for (auto& x : v) x = u(rng);
    std::vector<size_t> targets = {0, 2, 1};
    auto loss = [&] {
      Tensor logits = net.forward(char_ids, word_vecs, nullptr);
      return nn::softmax_xent(logits, targets, std::vector<bool>(3, true)).loss;
    };
    auto params = net.params();
    zero_grads(params);
    NerNetwork::Cache cache;
    Tensor logits = net.forward(char_ids, word_vecs, &cache);
    auto res = nn::softmax_xent(logits, targets, std::vector<bool>(3, true));
    net.backward(cache, res.dlogits);
    c.require(grad_check(loss, params).worst <= tol, "full NER network gradient");
  }

  {  // full assertion network on a micro-example
    Rng rng(35);
    AssertionConfig cfg;
    cfg.lstm_hidden = 3;
    cfg.flag_embedding_dim = 2;
    AssertionNetwork net(cfg, 2, rng);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::vector<double>> vecs(4, std::vector<double>(2));
    for (auto& v : vecs)
      for (auto& x : v) x = u(rng);
    std::vector<bool> flags = {false, true, true, false};
    auto loss = [&] {
      auto logits = net.forward(vecs, flags, nullptr);
      Tensor lt({1, logits.size()}, logits);
      return nn::softmax_xent(lt, {2}, {true}).loss;
    };
    auto params = net.params();
    zero_grads(params);
    AssertionNetwork::Cache cache;
    auto logits = net.forward(vecs, flags, &cache);
    Tensor lt({1, logits.size()}, logits);
    auto res = nn::softmax_xent(lt, {2}, {true});
    net.backward(cache, std::vector<double>(res.dlogits.data));
    c.require(grad_check(loss, params).worst <= tol,
              "full assertion network gradient");
  }
  return c.ok;
}

// --------------------------------------------------------------------------
// 4. Synthetic NER convergence with the default configuration.
// --------------------------------------------------------------------------
bool criterion_4(Check& c) {
  auto train_ds = synthetic::make_ner_corpus(240, 4001);
  auto store = synthetic::make_embeddings(16, 4002);
  NerConfig cfg;  // defaults: epochs 10, lr 0.001, dropout 0.5, batch 8, split 0.2
  auto [model, history] = train_ner(cfg, train_ds, store);

  auto eval_ds = synthetic::make_ner_corpus(60, 4003);
  std::vector<std::string> gold_tags, pred_tags;
  std::vector<std::vector<Chunk>> gold_chunks, pred_chunks;
  for (const auto& s : eval_ds.sentences) {
    auto tags = model.predict(s.tokens, store);
    gold_tags.insert(gold_tags.end(), s.tags.begin(), s.tags.end());
    pred_tags.insert(pred_tags.end(), tags.begin(), tags.end());
    gold_chunks.push_back(decode_tags_lenient(s.tags, cfg.tag_scheme));
    pred_chunks.push_back(decode_tags_lenient(tags, cfg.tag_scheme));
  }
  double acc = token_accuracy(gold_tags, pred_tags);
  double f1 = chunk_prf(gold_chunks, pred_chunks).micro_f1;
  c.detail << "    token accuracy " << acc << ", chunk micro F1 " << f1 << "\n";
  c.require(acc >= 0.95, "validation token accuracy >= 0.95");
  c.require(f1 >= 0.90, "validation chunk micro F1 >= 0.90");
  return c.ok;
}

// --------------------------------------------------------------------------
// 5. Synthetic assertion convergence plus behavioral probes.
// --------------------------------------------------------------------------
bool criterion_5(Check& c) {
  auto store = synthetic::make_embeddings(16, 5001);
  auto train = synthetic::make_assertion_corpus(1200, 5002);
  AssertionConfig cfg;  // window 9/15, lr 0.0012, dropout 0.05, batch 64
  cfg.epochs = 20;
  cfg.lstm_hidden = 32;
  auto [model, history] = train_assertion(cfg, train, store);

  auto held_out = synthetic::make_assertion_corpus(300, 5003);
  size_t correct = 0;
  for (const auto& ex : held_out) {
    auto pred = model.predict(ex.tokens, ex.target_first, ex.target_last, store);
    correct += pred.label == ex.label ? 1 : 0;
  }
  double acc = double(correct) / double(held_out.size());
  c.detail << "    held-out accuracy " << acc << "\n";
  c.require(acc >= 0.90, "held-out accuracy >= 0.90");

  auto probe = [&](std::vector<std::string> tokens, size_t first, size_t last,
                   AssertionLabel want, const std::string& name) {
    auto pred = model.predict(tokens, first, last, store);
    c.detail << "    probe '" << name << "' -> " << to_string(pred.label) << "\n";
    c.require(pred.label == want, "probe '" + name + "'");
  };
  probe({"He", "shows", "no", "stomach", "pain"}, 3, 4, AssertionLabel::absent,
        "no stomach pain");
  probe({"Father", "with", "Alzheimer"}, 2, 2,
        AssertionLabel::associated_with_someone_else, "Father with Alzheimer");
  probe({"short", "of", "breath", "with", "climbing"}, 0, 2,
        AssertionLabel::conditional, "short of breath with climbing");
  return c.ok;
}

// --------------------------------------------------------------------------
// 6. Scope-window exactness, exhaustive for n <= 40.
// --------------------------------------------------------------------------
bool criterion_6(Check& c) {
  AssertionConfig cfg;
  for (size_t n = 1; n <= 40 && c.ok; ++n)
    for (size_t first = 0; first < n && c.ok; ++first)
      for (size_t last = first; last < n && c.ok; ++last) {
        auto s = extract_scope(n, first, last, cfg);
        size_t lo = first >= cfg.left_window ? first - cfg.left_window : 0;
        size_t hi = std::min(n - 1, last + cfg.right_window);
        bool match = s.indices.size() == hi - lo + 1 && s.indices.front() == lo &&
                     s.indices.back() == hi;
        for (size_t k = 0; match && k < s.indices.size(); ++k)
          match = s.target_flags[k] ==
                  (s.indices[k] >= first && s.indices[k] <= last);
        c.require(match, "scope mismatch at n=" + std::to_string(n) + " span [" +
                             std::to_string(first) + "," + std::to_string(last) +
                             "]");
      }
  return c.ok;
}

// --------------------------------------------------------------------------
// 7. Metric oracle equivalence on randomized cases plus the hand example.
// --------------------------------------------------------------------------
bool criterion_7(Check& c) {
  std::mt19937_64 rng(7001);
  auto random_chunks = [&] {
    std::vector<Chunk> out;
    size_t t = 0;
    while (t < 14) {
      if (rng() % 3 == 0) {
        size_t len = 1 + rng() % 2;
        out.push_back({t, t + len - 1, rng() % 2 ? "A" : "B"});
        t += len;
      }
      ++t;
    }
    return out;
  };

  for (int it = 0; it < 100; ++it) {
    size_t n = 1 + rng() % 5;
    std::vector<std::vector<Chunk>> gold(n), pred(n);
    for (size_t s = 0; s < n; ++s) {
      gold[s] = random_chunks();
      pred[s] = random_chunks();
    }
    auto rep = chunk_prf(gold, pred);
    // oracle: pooled counts straight from the definitions
    size_t tp = 0, fp = 0, fn = 0;
    std::map<std::string, std::array<size_t, 3>> per;
    for (size_t s = 0; s < n; ++s) {
      for (auto& p : pred[s]) {
        bool hit = std::count(gold[s].begin(), gold[s].end(), p) > 0;
        (hit ? tp : fp)++;
        per[p.label][hit ? 0 : 1]++;
      }
      for (auto& g : gold[s])
        if (!std::count(pred[s].begin(), pred[s].end(), g)) {
          fn++;
          per[g.label][2]++;
        }
    }
    double p = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
    double r = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
    double f1 = (p + r) ? 2 * p * r / (p + r) : 0.0;
    c.require(std::fabs(rep.micro_f1 - f1) < 1e-12, "chunk micro F1 vs oracle");
    for (auto& [label, m] : rep.per_label) {
      auto& o = per[label];
      c.require(m.tp == o[0] && m.fp == o[1] && m.fn == o[2],
                "chunk per-label counts vs oracle");
    }
  }

  const auto& labels = assertion_report_order();
  for (int it = 0; it < 100; ++it) {
    size_t n = 1 + rng() % 30;
    std::vector<std::string> gold, pred;
    for (size_t i = 0; i < n; ++i) {
      gold.push_back(labels[rng() % labels.size()]);
      pred.push_back(labels[rng() % labels.size()]);
    }
    auto rep = assertion_report(gold, pred);
    size_t agree = 0;
    for (size_t i = 0; i < n; ++i) agree += gold[i] == pred[i] ? 1 : 0;
    // single-label multi-class: micro F1 equals accuracy
    c.require(std::fabs(rep.micro_f1 - double(agree) / double(n)) < 1e-12,
              "assertion micro F1 vs accuracy oracle");
    for (auto& [label, m] : rep.per_label) {
      size_t tp = 0, fp = 0, fn = 0;
      for (size_t i = 0; i < n; ++i) {
        if (gold[i] == label && pred[i] == label) tp++;
        if (gold[i] != label && pred[i] == label) fp++;
        if (gold[i] == label && pred[i] != label) fn++;
      }
      c.require(m.tp == tp && m.fp == fp && m.fn == fn,
                "assertion per-label counts vs oracle");
    }
  }

  // hand-enumerated example: micro pools counts, macro averages F1s
  std::vector<std::vector<Chunk>> gold = {{{0, 0, "A"}, {2, 2, "B"}}};
  std::vector<std::vector<Chunk>> pred = {{{0, 0, "A"}, {2, 2, "B"}, {4, 4, "A"}}};
  auto rep = chunk_prf(gold, pred);
  c.require(std::fabs(rep.micro_precision - 2.0 / 3.0) < 1e-12, "hand micro P");
  c.require(std::fabs(rep.micro_recall - 1.0) < 1e-12, "hand micro R");
  c.require(std::fabs(rep.micro_f1 - 0.8) < 1e-12, "hand micro F1");
  // A: P=1/2 R=1 F1=2/3; B: P=R=F1=1 -> macro 5/6
  c.require(std::fabs(rep.macro_f1 - 5.0 / 6.0) < 1e-12, "hand macro F1");
  return c.ok;
}

// --------------------------------------------------------------------------
// 8. Determinism and parallel equivalence over 100 documents.
// --------------------------------------------------------------------------
bool criterion_8(Check& c) {
  const auto& models = fixtures::small_models();
  auto pipeline = fixtures::full_pipeline(models);
  auto docs = fixtures::document_corpus(100, 4, 8001);

  auto serialize = [](const std::vector<Record>& rs) {
    std::string s;
    for (auto& r : rs) {
      s += record_to_jsonl(r);
      s += '\n';
    }
    return s;
  };
  auto base = serialize(annotate_corpus(docs, pipeline, 1).records);
  for (size_t workers : {2, 4})
    c.require(serialize(annotate_corpus(docs, pipeline, workers).records) == base,
              "byte-identical at " + std::to_string(workers) + " workers");
  // repeated run with the same fitted pipeline
  c.require(serialize(annotate_corpus(docs, pipeline, 4).records) == base,
            "byte-identical across repeated runs");
  return c.ok;
}

// --------------------------------------------------------------------------
// 9. Desk-scale scaling on a >= 10 MB corpus with 4 workers.
// --------------------------------------------------------------------------
bool criterion_9(Check& c) {
  // corpus of at least 10 MB of text
  std::vector<Record> docs;
  {
    std::mt19937_64 rng(9001);
    size_t bytes = 0, i = 0;
    while (bytes < 10u * 1024 * 1024) {
      Record r;
      char buf[16];
      std::snprintf(buf, sizeof buf, "doc-%05zu", i++);
      r.id = buf;
      r.text = synthetic::make_document_text(100, rng);
      bytes += r.text.size();
      docs.push_back(std::move(r));
    }
    c.detail << "    corpus: " << docs.size() << " docs, " << bytes
             << " bytes\n";
  }

  // deliberately tiny NER model: benchmark measures throughput, not quality
  auto store = std::make_shared<const EmbeddingStore>(
      synthetic::make_embeddings(8, 9002));
  NerConfig ncfg;
  ncfg.max_epochs = 1;
  ncfg.lstm_hidden = 8;
  ncfg.char_embedding_dim = 4;
  ncfg.char_filters = 4;
  ncfg.validation_split = 0.0;
  auto ds = synthetic::make_ner_corpus(40, 9003);
  auto [ner, nh] = train_ner(ncfg, ds, *store);
  auto ner_model = std::make_shared<const NerModel>(std::move(ner));

  PipelineModel tokenization;
  tokenization.stages.push_back(std::make_shared<DocumentAssembler>());
  tokenization.stages.push_back(std::make_shared<SentenceDetectorStage>());
  tokenization.stages.push_back(std::make_shared<TokenizerStage>());
  tokenization.stages.push_back(std::make_shared<NormalizerStage>());

  PipelineModel full = tokenization;
  full.stages.push_back(std::make_shared<WordEmbeddingsStage>(store));
  full.stages.push_back(
      std::make_shared<NerStage>(ner_model, "normalized", "embeddings"));
  full.stages.push_back(std::make_shared<NerConverterStage>("normalized", "ner"));

  auto report = run_benchmark(
      docs, {{"tokenization", &tokenization}, {"full_ner", &full}}, {1, 4});
  double tok_speedup = 0, ner_speedup = 0;
  for (auto& row : report.rows) {
    c.detail << "    " << row.group << " workers=" << row.workers << " wall="
             << row.wall_seconds << "s speedup=" << row.speedup << "\n";
    if (row.workers == 4 && row.group == "tokenization") tok_speedup = row.speedup;
    if (row.workers == 4 && row.group == "full_ner") ner_speedup = row.speedup;
  }
  c.require(tok_speedup >= 2.5, "tokenization speedup >= 2.5x at 4 workers");
  c.require(ner_speedup >= 1.5, "full NER pipeline speedup >= 1.5x at 4 workers");
  c.require(tok_speedup >= ner_speedup, "tokenization speedup >= NER speedup");
  return c.ok;
}

// --------------------------------------------------------------------------
// 10. Report fidelity against planted entity frequencies.
// --------------------------------------------------------------------------
bool criterion_10(Check& c) {
  // plant chunks and assertions with known counts across 20 documents
  std::mt19937_64 rng(10001);
  std::map<std::string, std::map<std::string, size_t>> planted;  // type -> term
  std::map<std::string, std::map<std::string, size_t>> per_doc;  // id -> type
  size_t planted_absent = 0;
  std::vector<Record> records;
  for (size_t d = 0; d < 20; ++d) {
    Record r;
    r.id = "doc-" + std::to_string(100 + d);
    std::vector<Annotation> chunks, asserts;
    size_t pos = 0;
    size_t n = 1 + rng() % 6;
    for (size_t k = 0; k < n; ++k) {
      bool drug = rng() % 3 == 0;
      std::string type = drug ? "DRUG" : "PROBLEM";
      std::string term = drug
          ? synthetic::drug_terms()[rng() % synthetic::drug_terms().size()]
          : synthetic::problem_terms()[rng() % synthetic::problem_terms().size()];
      Annotation a;
      a.kind = AnnotationKind::chunk;
      a.begin = pos;
      a.end = pos + utf8::scalar_length(term) - 1;
      a.result = term;
      a.metadata["entity"] = type;
      r.text += term + " ";
      pos += utf8::scalar_length(term) + 1;
      planted[type][term]++;
      per_doc[r.id][type]++;
      chunks.push_back(a);
      if (!drug) {
        Annotation as;
        as.kind = AnnotationKind::assertion;
        as.begin = a.begin;
        as.end = a.end;
        bool absent = rng() % 2 == 0;
        as.result = absent ? "absent" : "present";
        as.metadata["label"] = as.result;
        as.metadata["entity"] = type;
        as.metadata["chunk"] = term;
        planted_absent += absent ? 1 : 0;
        asserts.push_back(std::move(as));
      }
    }
    r.add_column("ner_chunk", std::move(chunks));
    r.add_column("assertion", std::move(asserts));
    records.push_back(std::move(r));
  }

  // top terms must reproduce every planted count exactly
  auto top = report_top_terms(records, {"PROBLEM", "DRUG"}, 1000);
  for (auto& [type, rows] : top.columns) {
    c.require(rows.size() == planted[type].size(),
              "top-terms row count for " + type);
    for (auto& [term, count] : rows)
      c.require(planted[type][term] == count,
                "top-terms count for " + type + "/" + term);
  }

  // entity matrix: per-document cells and totals
  auto matrix = report_entity_matrix(records, {"PROBLEM", "DRUG"});
  c.require(matrix.rows.size() == records.size(), "matrix keeps every document");
  for (auto& [id, row] : matrix.rows) {
    c.require(row[0] == per_doc[id]["PROBLEM"], "matrix PROBLEM cell for " + id);
    c.require(row[1] == per_doc[id]["DRUG"], "matrix DRUG cell for " + id);
  }
  size_t total_problem = 0, total_drug = 0;
  for (auto& [term, n] : planted["PROBLEM"]) total_problem += n;
  for (auto& [term, n] : planted["DRUG"]) total_drug += n;
  c.require(matrix.totals.at("PROBLEM") == total_problem, "matrix PROBLEM total");
  c.require(matrix.totals.at("DRUG") == total_drug, "matrix DRUG total");

  // assertion filter: planted absent rows, exactly
  auto rows = report_assertion_filter(records, "PROBLEM", {"absent"});
  c.require(rows.size() == planted_absent, "assertion filter absent count");
  for (auto& row : rows) c.require(row.label == "absent", "filter label purity");
  c.require(report_assertion_filter(records, "PROBLEM", {}).size() ==
                total_problem,
            "empty label filter keeps all assertion rows");
  return c.ok;
}

struct Criterion {
  int number;
  const char* name;
  bool (*fn)(Check&);
};

const Criterion kCriteria[] = {
    {1, "tag-codec round trip (10,000 randomized cases)", criterion_1},
    {2, "lenient-decode totality (exhaustive, length <= 4)", criterion_2},
    {3, "gradient checks (layers and full networks, <= 1e-5)", criterion_3},
    {4, "synthetic NER convergence (default config)", criterion_4},
    {5, "synthetic assertion convergence and probes", criterion_5},
    {6, "scope-window exactness (exhaustive, n <= 40)", criterion_6},
    {7, "metric oracle equivalence", criterion_7},
    {8, "determinism and parallel equivalence", criterion_8},
    {9, "desk-scale scaling (10 MB corpus, 4 workers)", criterion_9},
    {10, "report fidelity on planted counts", criterion_10},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all_ok = true;
  for (const auto& crit : kCriteria) {
    if (only != 0 && crit.number != only) continue;
    Check check;
    auto t0 = std::chrono::steady_clock::now();
    bool ok;
    try {
      ok = crit.fn(check);
    } catch (const std::exception& e) {
      ok = false;
      check.detail << "    exception: " << e.what() << "\n";
    }
    auto secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    std::cout << "criterion " << crit.number << ": "
              << (ok ? "PASS" : "FAIL") << " - " << crit.name << " ("
              << secs << "s)\n"
              << check.detail.str();
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
