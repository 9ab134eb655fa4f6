#ifndef CLINLP_ANNOTATION_HPP
#define CLINLP_ANNOTATION_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinlp/utf8.hpp"

namespace clinlp {

enum class AnnotationKind {
  document,
  sentence,
  token,
  word_embedding,
  named_entity_tag,
  chunk,
  assertion,
};

inline const char* to_string(AnnotationKind k) {
  switch (k) {
    case AnnotationKind::document: return "document";
    case AnnotationKind::sentence: return "sentence";
    case AnnotationKind::token: return "token";
    case AnnotationKind::word_embedding: return "word_embedding";
    case AnnotationKind::named_entity_tag: return "named_entity_tag";
    case AnnotationKind::chunk: return "chunk";
    case AnnotationKind::assertion: return "assertion";
  }
  return "?";
}

inline AnnotationKind kind_from_string(const std::string& s) {
  if (s == "document") return AnnotationKind::document;
  if (s == "sentence") return AnnotationKind::sentence;
  if (s == "token") return AnnotationKind::token;
  if (s == "word_embedding") return AnnotationKind::word_embedding;
  if (s == "named_entity_tag") return AnnotationKind::named_entity_tag;
  if (s == "chunk") return AnnotationKind::chunk;
  if (s == "assertion") return AnnotationKind::assertion;
  throw std::runtime_error("unknown annotation kind: " + s);
}

// Character offsets are Unicode scalar-value indices, end inclusive.
struct Annotation {
  AnnotationKind kind = AnnotationKind::document;
  size_t begin = 0;
  size_t end = 0;
  std::string result;
  std::map<std::string, std::string> metadata;
  std::optional<std::vector<double>> vector;
};

struct Record {
  std::string id;
  std::string text;
  std::vector<std::pair<std::string, std::vector<Annotation>>> columns;

  bool has_column(const std::string& name) const {
    for (auto& c : columns)
      if (c.first == name) return true;
    return false;
  }
  const std::vector<Annotation>& column(const std::string& name) const {
    for (auto& c : columns)
      if (c.first == name) return c.second;
    throw std::runtime_error("missing column '" + name + "'");
  }
  void add_column(const std::string& name, std::vector<Annotation> anns) {
    if (has_column(name)) throw std::runtime_error("duplicate column '" + name + "'");
    columns.emplace_back(name, std::move(anns));
  }
};

// Checks the Annotation type invariants against the record text.
inline void check_annotation(const Annotation& a, const std::string& text) {
  size_t n = utf8::scalar_length(text);
  if (a.begin > a.end) throw std::runtime_error("annotation begin > end");
  bool empty_marker = a.begin == 0 && a.end == 0 && a.result.empty();
  if (n == 0 && empty_marker) return;
  if (a.end >= n && !empty_marker)
    throw std::runtime_error("annotation out of text bounds");
  if (a.kind == AnnotationKind::token && !a.metadata.count("normalized") &&
      a.result != utf8::slice(text, a.begin, a.end))
    throw std::runtime_error("token result does not match text slice");
}

// JSONL serialization. One object per record: id, text,
// columns: name -> [{kind, begin, end, result, metadata[, vector]}].
inline nlohmann::ordered_json to_json(const Annotation& a) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(a.kind);
  j["begin"] = a.begin;
  j["end"] = a.end;
  j["result"] = a.result;
  j["metadata"] = a.metadata;
  if (a.vector) j["vector"] = *a.vector;
  return j;
}

inline Annotation annotation_from_json(const nlohmann::json& j) {
  Annotation a;
  a.kind = kind_from_string(j.at("kind").get<std::string>());
  a.begin = j.at("begin").get<size_t>();
  a.end = j.at("end").get<size_t>();
  a.result = j.at("result").get<std::string>();
  if (j.contains("metadata"))
    a.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  if (j.contains("vector")) a.vector = j.at("vector").get<std::vector<double>>();
  return a;
}

inline std::string record_to_jsonl(const Record& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["text"] = r.text;
  nlohmann::ordered_json cols = nlohmann::ordered_json::object();
  for (auto& [name, anns] : r.columns) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (auto& a : anns) arr.push_back(to_json(a));
    cols[name] = arr;
  }
  j["columns"] = cols;
  return j.dump();
}

inline Record record_from_jsonl(const std::string& line) {
  auto j = nlohmann::ordered_json::parse(line);  // column order is meaningful
  Record r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  if (j.contains("columns")) {
    for (auto& [name, arr] : j.at("columns").items()) {
      std::vector<Annotation> anns;
      for (auto& aj : arr) anns.push_back(annotation_from_json(aj));
      r.columns.emplace_back(name, std::move(anns));
    }
  }
  return r;
}

}  // namespace clinlp

#endif  // CLINLP_ANNOTATION_HPP
