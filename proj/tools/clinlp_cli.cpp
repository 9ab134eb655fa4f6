// Command-line front end: annotate, train-ner, train-assertion, report, bench.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 benchmark
// output-equivalence failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clinlp/assertion.hpp"
#include "clinlp/corpus.hpp"
#include "clinlp/evaluation.hpp"
#include "clinlp/ner.hpp"
#include "clinlp/stages.hpp"

namespace fs = std::filesystem;
using namespace clinlp;

namespace {

CorpusSource make_source(const std::string& input, const std::string& format) {
  CorpusSource src;
  src.path = input;
  if (format == "dir")
    src.kind = CorpusSource::Kind::text_directory;
  else if (format == "jsonl")
    src.kind = CorpusSource::Kind::jsonl_file;
  else
    throw CLI::ValidationError("--input-format", "must be 'dir' or 'jsonl'");
  return src;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

int cmd_annotate(const std::string& pipeline_path, const std::string& input,
                 const std::string& format, size_t workers,
                 const std::string& output, bool serialize_vectors) {
  auto model = pipeline_from_config_file(pipeline_path);
  auto corpus = load_corpus(make_source(input, format));
  for (const auto& e : corpus.errors) std::cerr << "warning: " << e << "\n";

  auto result = annotate_corpus(corpus.records, model, workers, serialize_vectors);
  result.summary.source_error_count = corpus.errors.size();

  fs::create_directories(output);
  write_annotations_jsonl(result.records, (fs::path(output) / "annotations.jsonl").string());
  write_text(fs::path(output) / "summary.json", to_json(result.summary).dump(2) + "\n");
  std::cout << to_json(result.summary).dump(2) << "\n";
  return 0;
}

int cmd_train_ner(const std::string& input, const std::string& embeddings_path,
                  const std::string& config_path, const std::string& scheme,
                  long seed, const std::string& output) {
  NerConfig config;
  if (!config_path.empty()) config = ner_config_from_json(load_json(config_path));
  config.tag_scheme = scheme == "BIOES" ? TagScheme::BIOES : TagScheme::BIO;
  if (seed >= 0) config.seed = uint64_t(seed);

  auto dataset = read_conll(input, config.tag_scheme);
  auto store = load_embeddings(embeddings_path);
  auto [model, history] = train_ner(config, dataset, store);

  fs::create_directories(output);
  auto model_path = (fs::path(output) / "ner.model").string();
  save_ner_model(model, model_path);

  nlohmann::ordered_json manifest;
  manifest["model"] = model_path;
  manifest["config"] = to_json(config);
  manifest["sentences"] = dataset.sentences.size();
  manifest["labels"] = model.label_vocab;
  manifest["embedding_dimension"] = store.dimension;
  manifest["history"] = to_json(history);
  write_text(fs::path(output) / "ner_manifest.json", manifest.dump(2) + "\n");
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

int cmd_train_assertion(const std::string& input,
                        const std::string& embeddings_path,
                        const std::string& config_path, long seed,
                        const std::string& output) {
  AssertionConfig config;
  if (!config_path.empty())
    config = assertion_config_from_json(load_json(config_path));
  if (seed >= 0) config.seed = uint64_t(seed);

  auto examples = read_assertion_jsonl(input);
  auto store = load_embeddings(embeddings_path);
  auto [model, history] = train_assertion(config, examples, store);

  fs::create_directories(output);
  auto model_path = (fs::path(output) / "assertion.model").string();
  save_assertion_model(model, model_path);

  nlohmann::ordered_json manifest;
  manifest["model"] = model_path;
  manifest["config"] = to_json(config);
  manifest["examples"] = examples.size();
  manifest["embedding_dimension"] = store.dimension;
  manifest["history"] = to_json(history);
  write_text(fs::path(output) / "assertion_manifest.json", manifest.dump(2) + "\n");
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& input, const std::vector<std::string>& types,
               size_t top_k, const std::vector<std::string>& labels,
               const std::string& entity_type, const std::string& output) {
  auto records = read_annotations_jsonl(input);
  fs::create_directories(output);

  {  // top terms (Table 5 shape)
    auto report = report_top_terms(records, types, top_k);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::string tsv = "entity_type\tterm\tcount\n";
    nlohmann::ordered_json j;
    j["columns"] = nlohmann::ordered_json::object();
    for (const auto& [type, rows] : report.columns) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& [term, count] : rows) {
        tsv += type + "\t" + term + "\t" + std::to_string(count) + "\n";
        arr.push_back({{"term", term}, {"count", count}});
      }
      j["columns"][type] = arr;
    }
    j["warnings"] = report.warnings;
    write_text(fs::path(output) / "top_terms.tsv", tsv);
    write_text(fs::path(output) / "top_terms.json", j.dump(2) + "\n");
  }

  {  // entity matrix (Tables 3/4 shape)
    auto matrix = report_entity_matrix(records, types);
    std::string tsv = "document";
    for (const auto& t : types) tsv += "\t" + t;
    tsv += "\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& [id, row] : matrix.rows) {
      tsv += id;
      nlohmann::ordered_json cells = nlohmann::ordered_json::object();
      for (size_t i = 0; i < types.size(); ++i) {
        tsv += "\t" + std::to_string(row[i]);
        cells[types[i]] = row[i];
      }
      tsv += "\n";
      rows.push_back({{"document", id}, {"counts", cells}});
    }
    tsv += "total";
    nlohmann::ordered_json totals = nlohmann::ordered_json::object();
    for (const auto& t : types) {
      size_t n = matrix.totals.count(t) ? matrix.totals.at(t) : 0;
      tsv += "\t" + std::to_string(n);
      totals[t] = n;
    }
    tsv += "\n";
    write_text(fs::path(output) / "entity_matrix.tsv", tsv);
    write_text(fs::path(output) / "entity_matrix.json",
               nlohmann::ordered_json{{"rows", rows}, {"totals", totals}}.dump(2) +
                   "\n");
  }

  {  // assertion filter (Table 6 shape)
    auto rows = report_assertion_filter(records, entity_type, labels);
    std::string tsv = "chunk\tentity\tlabel\tdocument\n";
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      tsv += r.chunk + "\t" + r.entity + "\t" + r.label + "\t" + r.document_id +
             "\n";
      j.push_back({{"chunk", r.chunk},
                   {"entity", r.entity},
                   {"label", r.label},
                   {"document", r.document_id}});
    }
    write_text(fs::path(output) / "assertion_filter.tsv", tsv);
    write_text(fs::path(output) / "assertion_filter.json", j.dump(2) + "\n");
  }

  std::cout << "reports written to " << output << "\n";
  return 0;
}

int cmd_bench(const std::string& pipeline_path, const std::string& input,
              const std::string& format, const std::vector<size_t>& worker_counts,
              const std::string& output) {
  auto full = pipeline_from_config_file(pipeline_path);
  // the tokenization-only group is the longest text-stage prefix
  PipelineModel tokenization;
  for (const auto& s : full.stages) {
    auto name = s->spec().name;
    if (name != "document_assembler" && name != "sentence_detector" &&
        name != "tokenizer" && name != "normalizer")
      break;
    tokenization.stages.push_back(s);
  }
  auto corpus = load_corpus(make_source(input, format));
  for (const auto& e : corpus.errors) std::cerr << "warning: " << e << "\n";

  std::vector<std::pair<std::string, const PipelineModel*>> groups;
  if (!tokenization.stages.empty()) groups.emplace_back("tokenization", &tokenization);
  groups.emplace_back("full", &full);

  auto report = run_benchmark(corpus.records, groups, worker_counts);
  std::string tsv = "group\tworkers\twall_seconds\tdocs_per_second\tspeedup\n";
  for (const auto& row : report.rows) {
    tsv += row.group + "\t" + std::to_string(row.workers) + "\t" +
           std::to_string(row.wall_seconds) + "\t" +
           std::to_string(row.docs_per_second) + "\t" +
           std::to_string(row.speedup) + "\n";
  }
  fs::create_directories(output);
  write_text(fs::path(output) / "bench.tsv", tsv);
  write_text(fs::path(output) / "bench.json", to_json(report).dump(2) + "\n");
  std::cout << tsv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clinical text mining toolkit"};
  app.require_subcommand(1);

  std::string pipeline_path, input, format = "dir", output = "out";
  std::string config_path, scheme = "BIO", entity_type;
  std::vector<std::string> entity_types, labels;
  std::vector<size_t> worker_counts = {1};
  size_t workers = 1, top_k = 20;
  long seed = -1;
  bool serialize_vectors = false;

  auto* annotate = app.add_subcommand("annotate", "run a pipeline over a corpus");
  annotate->add_option("--pipeline", pipeline_path, "pipeline config (JSON)")
      ->required();
  annotate->add_option("--input", input, "corpus path")->required();
  annotate->add_option("--input-format", format, "dir or jsonl");
  annotate->add_option("--workers", workers, "worker count");
  annotate->add_option("--output", output, "output directory");
  annotate->add_flag("--serialize-vectors", serialize_vectors,
                     "keep embedding vectors in the output");

  auto* train_ner_cmd = app.add_subcommand("train-ner", "train the NER tagger");
  train_ner_cmd->add_option("--input", input, "CoNLL training file")->required();
  std::string embeddings_path;
  train_ner_cmd->add_option("--embeddings", embeddings_path, "word vectors file")
      ->required();
  train_ner_cmd->add_option("--config", config_path, "NerConfig JSON");
  train_ner_cmd->add_option("--scheme", scheme, "BIO or BIOES");
  train_ner_cmd->add_option("--seed", seed, "training seed");
  train_ner_cmd->add_option("--output", output, "output directory");

  auto* train_assert = app.add_subcommand("train-assertion",
                                          "train the assertion classifier");
  train_assert->add_option("--input", input, "training examples (JSON Lines)")
      ->required();
  train_assert->add_option("--embeddings", embeddings_path, "word vectors file")
      ->required();
  train_assert->add_option("--config", config_path, "AssertionConfig JSON");
  train_assert->add_option("--seed", seed, "training seed");
  train_assert->add_option("--output", output, "output directory");

  auto* report = app.add_subcommand("report", "reports over an annotations file");
  report->add_option("--input", input, "annotations.jsonl")->required();
  report->add_option("--entity-types", entity_types, "entity types")
      ->delimiter(',');
  report->add_option("--top-k", top_k, "rows per top-terms column");
  report->add_option("--labels", labels, "assertion label filter")->delimiter(',');
  report->add_option("--entity-type", entity_type,
                     "entity type for the assertion filter");
  report->add_option("--output", output, "output directory");

  auto* bench = app.add_subcommand("bench", "scaling benchmark");
  bench->add_option("--pipeline", pipeline_path, "pipeline config (JSON)")
      ->required();
  bench->add_option("--input", input, "corpus path")->required();
  bench->add_option("--input-format", format, "dir or jsonl");
  bench->add_option("--worker-counts", worker_counts, "worker counts to time")
      ->delimiter(',');
  bench->add_option("--output", output, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (annotate->parsed())
      return cmd_annotate(pipeline_path, input, format, workers, output,
                          serialize_vectors);
    if (train_ner_cmd->parsed())
      return cmd_train_ner(input, embeddings_path, config_path, scheme, seed,
                           output);
    if (train_assert->parsed())
      return cmd_train_assertion(input, embeddings_path, config_path, seed,
                                 output);
    if (report->parsed())
      return cmd_report(input, entity_types, top_k, labels, entity_type, output);
    if (bench->parsed())
      return cmd_bench(pipeline_path, input, format, worker_counts, output);
  } catch (const BenchmarkEquivalenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
