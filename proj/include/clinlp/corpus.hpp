#ifndef CLINLP_CORPUS_HPP
#define CLINLP_CORPUS_HPP

#include <algorithm>
#include <cctype>
#include <chrono>
#include <functional>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinlp/pipeline.hpp"

namespace clinlp {

struct CorpusSource {
  enum class Kind { text_directory, jsonl_file };
  Kind kind = Kind::text_directory;
  std::string path;
  std::string text_field = "text";
  std::string id_field = "id";
};

struct CorpusLoadResult {
  std::vector<Record> records;  // sorted by id
  std::vector<std::string> errors;
};

inline CorpusLoadResult load_corpus(const CorpusSource& source) {
  namespace fs = std::filesystem;
  CorpusLoadResult result;
  if (source.kind == CorpusSource::Kind::text_directory) {
    if (!fs::is_directory(source.path))
      throw std::runtime_error("not a directory: " + source.path);
    for (const auto& entry : fs::directory_iterator(source.path)) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path());
      std::stringstream ss;
      ss << in.rdbuf();
      Record r;
      r.id = entry.path().stem().string();
      r.text = ss.str();
      result.records.push_back(std::move(r));
    }
  } else {
    std::ifstream in(source.path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + source.path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        Record r;
        if (j.contains(source.id_field))
          r.id = j.at(source.id_field).is_string()
                     ? j.at(source.id_field).get<std::string>()
                     : j.at(source.id_field).dump();
        else
          r.id = "line-" + std::to_string(lineno);
        r.text = j.at(source.text_field).get<std::string>();
        result.records.push_back(std::move(r));
      } catch (const std::exception& e) {
        result.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const Record& a, const Record& b) { return a.id < b.id; });
  return result;
}

struct CorpusSummary {
  size_t document_count = 0;
  std::map<std::string, size_t> annotations_per_column;
  size_t record_error_count = 0;
  size_t source_error_count = 0;
  double wall_seconds = 0.0;
};

inline nlohmann::ordered_json to_json(const CorpusSummary& s) {
  return {{"document_count", s.document_count},
          {"annotations_per_column", s.annotations_per_column},
          {"record_error_count", s.record_error_count},
          {"source_error_count", s.source_error_count},
          {"wall_seconds", s.wall_seconds}};
}

struct AnnotateResult {
  std::vector<Record> records;  // ordered by document id
  CorpusSummary summary;
};

// Runs the pipeline over the corpus with a worker pool; output order is by
// document id regardless of worker count.
inline AnnotateResult annotate_corpus(const std::vector<Record>& records,
                                      const PipelineModel& model,
                                      size_t workers = 1,
                                      bool serialize_vectors = false) {
  auto t0 = std::chrono::steady_clock::now();
  AnnotateResult result;
  result.records = transform(model, records, workers);
  if (!serialize_vectors) {
    for (auto& r : result.records)
      for (auto& [name, col] : r.columns)
        for (auto& a : col) a.vector.reset();
  }
  auto t1 = std::chrono::steady_clock::now();
  result.summary.document_count = result.records.size();
  for (const auto& r : result.records) {
    for (const auto& [name, col] : r.columns) {
      result.summary.annotations_per_column[name] += col.size();
      if (name == "errors") result.summary.record_error_count += col.size();
    }
  }
  result.summary.wall_seconds =
      std::chrono::duration<double>(t1 - t0).count();
  return result;
}

inline void write_annotations_jsonl(const std::vector<Record>& records,
                                    const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) os << record_to_jsonl(r) << '\n';
}

inline std::vector<Record> read_annotations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_jsonl(line));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Reports over annotated records. Chunk annotations carry the entity label
// in metadata["entity"]; assertion annotations carry metadata["label"].
// ---------------------------------------------------------------------------

namespace detail {
inline std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}
inline void for_each_chunk(const std::vector<Record>& records,
                           const std::function<void(const Record&,
                                                    const Annotation&)>& fn) {
  for (const auto& r : records)
    for (const auto& [name, col] : r.columns)
      for (const auto& a : col)
        if (a.kind == AnnotationKind::chunk) fn(r, a);
}
}  // namespace detail

struct TopTermsReport {
  // per entity type, (display term, count) sorted by count desc then term
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, size_t>>>>
      columns;
  std::vector<std::string> warnings;
};

// Case-insensitive counting with the most frequent surface form displayed;
// ties broken lexicographically.
inline TopTermsReport report_top_terms(const std::vector<Record>& records,
                                       const std::vector<std::string>& entity_types,
                                       size_t k) {
  // entity type -> lowercased term -> (count, surface form -> count)
  std::map<std::string, std::map<std::string, std::map<std::string, size_t>>> acc;
  detail::for_each_chunk(records, [&](const Record&, const Annotation& a) {
    auto it = a.metadata.find("entity");
    if (it == a.metadata.end()) return;
    acc[it->second][detail::lowercase(a.result)][a.result]++;
  });
  TopTermsReport report;
  for (const auto& type : entity_types) {
    auto tit = acc.find(type);
    if (tit == acc.end()) {
      report.warnings.push_back("no chunks found for entity type '" + type + "'");
      report.columns.emplace_back(type,
                                  std::vector<std::pair<std::string, size_t>>{});
      continue;
    }
    struct Row {
      std::string key, display;
      size_t count;
    };
    std::vector<Row> rows;
    for (const auto& [key, surfaces] : tit->second) {
      size_t total = 0;
      std::string display;
      size_t best = 0;
      for (const auto& [surface, n] : surfaces) {
        total += n;
        if (n > best || (n == best && (display.empty() || surface < display))) {
          best = n;
          display = surface;
        }
      }
      rows.push_back({key, display, total});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.key < b.key;
    });
    if (rows.size() > k) rows.resize(k);
    std::vector<std::pair<std::string, size_t>> col;
    for (auto& r : rows) col.emplace_back(r.display, r.count);
    report.columns.emplace_back(type, std::move(col));
  }
  return report;
}

struct EntityMatrixReport {
  std::vector<std::string> entity_types;               // columns
  std::vector<std::pair<std::string, std::vector<size_t>>> rows;  // by doc id
  std::map<std::string, size_t> totals;                // per entity type
};

inline EntityMatrixReport report_entity_matrix(
    const std::vector<Record>& records,
    const std::vector<std::string>& entity_types) {
  EntityMatrixReport report;
  report.entity_types = entity_types;
  std::map<std::string, std::map<std::string, size_t>> counts;  // id -> type -> n
  for (const auto& r : records) counts[r.id];  // rows never dropped
  detail::for_each_chunk(records, [&](const Record& r, const Annotation& a) {
    auto it = a.metadata.find("entity");
    if (it == a.metadata.end()) return;
    counts[r.id][it->second]++;
  });
  for (auto& [id, per_type] : counts) {
    std::vector<size_t> row;
    for (const auto& type : entity_types) {
      size_t n = per_type.count(type) ? per_type[type] : 0;
      row.push_back(n);
      report.totals[type] += n;
    }
    report.rows.emplace_back(id, std::move(row));
  }
  return report;
}

struct AssertionFilterRow {
  std::string chunk;
  std::string entity;
  std::string label;
  std::string document_id;
};

// (chunk text, assertion label) rows filtered to an entity type and a label
// set; an empty label set keeps all rows.
inline std::vector<AssertionFilterRow> report_assertion_filter(
    const std::vector<Record>& records, const std::string& entity_type,
    const std::vector<std::string>& labels) {
  std::vector<AssertionFilterRow> rows;
  for (const auto& r : records) {
    for (const auto& [name, col] : r.columns) {
      for (const auto& a : col) {
        if (a.kind != AnnotationKind::assertion) continue;
        auto eit = a.metadata.find("entity");
        std::string entity = eit == a.metadata.end() ? "" : eit->second;
        if (!entity_type.empty() && entity != entity_type) continue;
        auto lit = a.metadata.find("label");
        std::string label = lit == a.metadata.end() ? a.result : lit->second;
        if (!labels.empty() &&
            std::find(labels.begin(), labels.end(), label) == labels.end())
          continue;
        auto cit = a.metadata.find("chunk");
        rows.push_back({cit == a.metadata.end() ? a.result : cit->second, entity,
                        label, r.id});
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Scaling benchmark: per stage-group and worker count, wall time, docs/sec
// and speedup vs one worker. Outputs are asserted identical across worker
// counts before any timing is reported.
// ---------------------------------------------------------------------------

struct BenchmarkRow {
  std::string group;
  size_t workers = 0;
  double wall_seconds = 0.0;
  double docs_per_second = 0.0;
  double speedup = 1.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
};

struct BenchmarkEquivalenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
// FNV-1a over the serialized output (embedding vectors stripped, matching
// the annotation file default), so equivalence checking does not require
// holding two full serializations in memory.
inline void fnv1a(uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
}
}  // namespace detail

inline BenchmarkReport run_benchmark(
    const std::vector<Record>& records,
    const std::vector<std::pair<std::string, const PipelineModel*>>& groups,
    const std::vector<size_t>& worker_counts, size_t block_size = 256) {
  BenchmarkReport report;
  for (const auto& [name, model] : groups) {
    uint64_t baseline_hash = 0;
    double baseline_time = 0.0;
    for (size_t wi = 0; wi < worker_counts.size(); ++wi) {
      size_t workers = worker_counts[wi];
      uint64_t hash = 14695981039346656037ULL;
      auto t0 = std::chrono::steady_clock::now();
      for (size_t lo = 0; lo < records.size(); lo += block_size) {
        size_t hi = std::min(lo + block_size, records.size());
        std::vector<Record> block(records.begin() + long(lo),
                                  records.begin() + long(hi));
        auto out = transform(*model, block, workers);
        for (auto& r : out) {
          for (auto& [cname, col] : r.columns)
            for (auto& a : col) a.vector.reset();
          detail::fnv1a(hash, record_to_jsonl(r));
          detail::fnv1a(hash, "\n");
        }
      }
      auto t1 = std::chrono::steady_clock::now();
      if (wi == 0) {
        baseline_hash = hash;
        baseline_time = std::chrono::duration<double>(t1 - t0).count();
      } else if (hash != baseline_hash) {
        throw BenchmarkEquivalenceError(
            "output mismatch in group '" + name + "' at " +
            std::to_string(workers) + " workers");
      }
      double secs = wi == 0 ? baseline_time
                            : std::chrono::duration<double>(t1 - t0).count();
      BenchmarkRow row;
      row.group = name;
      row.workers = workers;
      row.wall_seconds = secs;
      row.docs_per_second = secs > 0 ? double(records.size()) / secs : 0.0;
      row.speedup = secs > 0 ? baseline_time / secs : 1.0;
      report.rows.push_back(row);
    }
  }
  return report;
}

inline nlohmann::ordered_json to_json(const BenchmarkReport& r) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"group", row.group},
                    {"workers", row.workers},
                    {"wall_seconds", row.wall_seconds},
                    {"docs_per_second", row.docs_per_second},
                    {"speedup", row.speedup}});
  return {{"rows", rows}};
}

}  // namespace clinlp

#endif  // CLINLP_CORPUS_HPP
