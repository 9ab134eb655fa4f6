#ifndef CLINLP_TEXT_STAGES_HPP
#define CLINLP_TEXT_STAGES_HPP

#include <set>
#include <string>
#include <vector>

#include "clinlp/annotation.hpp"

namespace clinlp {

struct TokenizerRules {
  bool keep_internal_hyphens = true;
  // Punctuation split into standalone tokens. Never contains alphanumerics.
  std::set<uint32_t> split_characters = {'.', ',', ';', ':', '!', '?', '(',
                                         ')', '[', ']', '{', '}', '"', '\'',
                                         '/', '%', '&', '*', '+', '=', '<',
                                         '>', '#', '@', '~', '|', '\\'};
};

struct SentenceRules {
  std::set<uint32_t> terminators = {'.', '!', '?'};
  // Words never treated as sentence ends; each ends with a terminator.
  std::set<std::string> abbreviation_list = {
      "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.",  "vs.", "e.g.", "i.e.",
      "etc.", "Fig.", "fig.", "No.", "no.",  "approx.", "pt.", "dept."};
};

namespace detail {
inline bool is_space_cp(uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v';
}
inline bool is_alnum_cp(uint32_t cp) {
  if (cp > 127) return true;  // non-ASCII treated as word characters
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}
}  // namespace detail

// Entry point: single annotation over the trimmed text.
inline Annotation assemble(const std::string& text) {
  auto cps = utf8::scalars(text);
  size_t b = 0, e = cps.size();
  while (b < e && detail::is_space_cp(cps[b])) ++b;
  while (e > b && detail::is_space_cp(cps[e - 1])) --e;
  Annotation a;
  a.kind = AnnotationKind::document;
  if (b == e) {  // empty or whitespace-only: empty-document marker
    a.begin = 0;
    a.end = 0;
    a.result = "";
    a.metadata["trim_prefix"] = std::to_string(b);
    a.metadata["empty"] = "true";
    return a;
  }
  a.begin = b;
  a.end = e - 1;
  a.result = utf8::slice(text, b, e - 1);
  a.metadata["trim_prefix"] = std::to_string(b);
  return a;
}

// Boundaries after a terminator followed by whitespace, unless the word
// ending at the terminator is a known abbreviation.
inline std::vector<Annotation> detect_sentences(const std::string& text,
                                                const Annotation& document,
                                                const SentenceRules& rules = {}) {
  std::vector<Annotation> out;
  if (document.metadata.count("empty")) return out;
  auto cps = utf8::scalars(text);
  size_t lo = document.begin, hi = document.end;
  size_t sent_start = lo;
  size_t index = 0;
  auto flush = [&](size_t end_incl) {
    // trim whitespace at both ends
    size_t b = sent_start, e = end_incl;
    while (b <= e && detail::is_space_cp(cps[b])) ++b;
    while (e > b && detail::is_space_cp(cps[e])) --e;
    if (b > e || detail::is_space_cp(cps[b])) return;
    Annotation a;
    a.kind = AnnotationKind::sentence;
    a.begin = b;
    a.end = e;
    a.result = utf8::slice(text, b, e);
    a.metadata["sentence"] = std::to_string(index++);
    out.push_back(std::move(a));
  };
  for (size_t i = lo; i <= hi; ++i) {
    if (!rules.terminators.count(cps[i])) continue;
    bool at_end = i == hi;
    if (!at_end && !detail::is_space_cp(cps[i + 1])) continue;
    // word ending here, including the terminator
    size_t wb = i;
    while (wb > sent_start && !detail::is_space_cp(cps[wb - 1])) --wb;
    std::string word = utf8::slice(text, wb, i);
    if (rules.abbreviation_list.count(word)) continue;
    flush(i);
    sent_start = i + 1;
  }
  if (sent_start <= hi) flush(hi);
  return out;
}

// Whitespace tokenization with standalone punctuation tokens.
inline std::vector<Annotation> tokenize(const std::string& text,
                                        const Annotation& sentence,
                                        const TokenizerRules& rules = {}) {
  std::vector<Annotation> out;
  auto cps = utf8::scalars(text);
  std::string sent_index;
  if (auto it = sentence.metadata.find("sentence"); it != sentence.metadata.end())
    sent_index = it->second;
  size_t i = sentence.begin;
  auto emit = [&](size_t b, size_t e) {
    Annotation a;
    a.kind = AnnotationKind::token;
    a.begin = b;
    a.end = e;
    a.result = utf8::slice(text, b, e);
    if (!sent_index.empty()) a.metadata["sentence"] = sent_index;
    out.push_back(std::move(a));
  };
  while (i <= sentence.end) {
    if (detail::is_space_cp(cps[i])) {
      ++i;
      continue;
    }
    if (rules.split_characters.count(cps[i])) {
      emit(i, i);
      ++i;
      continue;
    }
    size_t b = i;
    while (i <= sentence.end && !detail::is_space_cp(cps[i])) {
      if (rules.split_characters.count(cps[i])) break;
      if (cps[i] == '-' && !rules.keep_internal_hyphens) break;
      ++i;
    }
    if (i == b) {  // lone hyphen with keep_internal_hyphens=false
      emit(i, i);
      ++i;
      continue;
    }
    emit(b, i - 1);
  }
  return out;
}

// Strips surrounding non-alphanumeric characters from each token's result;
// offsets are preserved, emptied tokens are dropped.
inline std::vector<Annotation> normalize(const std::vector<Annotation>& tokens) {
  std::vector<Annotation> out;
  for (const auto& t : tokens) {
    auto cps = utf8::scalars(t.result);
    size_t b = 0, e = cps.size();
    while (b < e && !detail::is_alnum_cp(cps[b])) ++b;
    while (e > b && !detail::is_alnum_cp(cps[e - 1])) --e;
    if (b == e) continue;
    Annotation a = t;
    a.result = utf8::slice(t.result, b, e - 1);
    if (a.result != t.result) a.metadata["normalized"] = "true";
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace clinlp

#endif  // CLINLP_TEXT_STAGES_HPP
