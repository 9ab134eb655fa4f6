#ifndef CLINLP_TAG_CODEC_HPP
#define CLINLP_TAG_CODEC_HPP

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinlp/annotation.hpp"

namespace clinlp {

enum class TagScheme { BIO, BIOES };

// Token-index span with an entity label.
struct Chunk {
  size_t first_token = 0;
  size_t last_token = 0;
  std::string label;

  bool operator==(const Chunk&) const = default;
};

struct ParsedTag {
  char prefix = 'O';
  std::string label;
};

inline ParsedTag parse_tag(const std::string& tag, TagScheme scheme) {
  if (tag == "O") return {'O', ""};
  if (tag.size() < 3 || tag[1] != '-')
    throw std::runtime_error("malformed tag '" + tag + "'");
  char p = tag[0];
  bool ok = (p == 'B' || p == 'I') ||
            (scheme == TagScheme::BIOES && (p == 'E' || p == 'S'));
  if (!ok) throw std::runtime_error("tag prefix '" + std::string(1, p) +
                                    "' not valid for scheme");
  return {p, tag.substr(2)};
}

inline std::vector<std::string> encode_tags(const std::vector<Chunk>& chunks,
                                            size_t n_tokens, TagScheme scheme) {
  std::vector<Chunk> sorted = chunks;
  std::sort(sorted.begin(), sorted.end(), [](const Chunk& a, const Chunk& b) {
    return a.first_token < b.first_token;
  });
  std::vector<std::string> tags(n_tokens, "O");
  long prev_end = -1;
  for (auto& c : sorted) {
    if (c.first_token > c.last_token || c.last_token >= n_tokens)
      throw std::runtime_error("chunk out of range");
    if (c.label.empty()) throw std::runtime_error("empty chunk label");
    if (long(c.first_token) <= prev_end)
      throw std::runtime_error("overlap at token " +
                               std::to_string(c.first_token));
    prev_end = long(c.last_token);
    size_t len = c.last_token - c.first_token + 1;
    if (scheme == TagScheme::BIO) {
      tags[c.first_token] = "B-" + c.label;
      for (size_t t = c.first_token + 1; t <= c.last_token; ++t)
        tags[t] = "I-" + c.label;
    } else {
      if (len == 1) {
        tags[c.first_token] = "S-" + c.label;
      } else {
        tags[c.first_token] = "B-" + c.label;
        for (size_t t = c.first_token + 1; t < c.last_token; ++t)
          tags[t] = "I-" + c.label;
        tags[c.last_token] = "E-" + c.label;
      }
    }
  }
  return tags;
}

// Strict decode: exact inverse of encode, rejects ill-formed sequences.
inline std::vector<Chunk> decode_tags(const std::vector<std::string>& tags,
                                      TagScheme scheme) {
  std::vector<Chunk> chunks;
  bool open = false;
  Chunk cur;
  auto fail = [](size_t pos, const std::string& why) {
    throw std::runtime_error("ill-formed tag sequence at position " +
                             std::to_string(pos) + ": " + why);
  };
  for (size_t t = 0; t < tags.size(); ++t) {
    ParsedTag p = parse_tag(tags[t], scheme);
    switch (p.prefix) {
      case 'O':
        if (open && scheme == TagScheme::BIOES) fail(t, "unterminated entity");
        if (open) chunks.push_back(cur);
        open = false;
        break;
      case 'B':
        if (open && scheme == TagScheme::BIOES) fail(t, "unterminated entity");
        if (open) chunks.push_back(cur);
        cur = {t, t, p.label};
        open = true;
        break;
      case 'S':
        if (open) fail(t, "unterminated entity");
        chunks.push_back({t, t, p.label});
        break;
      case 'I':
        if (!open) fail(t, "I tag outside entity");
        if (cur.label != p.label) fail(t, "label change inside entity");
        cur.last_token = t;
        break;
      case 'E':
        if (!open) fail(t, "E tag outside entity");
        if (cur.label != p.label) fail(t, "label change inside entity");
        cur.last_token = t;
        chunks.push_back(cur);
        open = false;
        break;
    }
  }
  if (open) {
    if (scheme == TagScheme::BIOES)
      fail(tags.size(), "unterminated entity at sequence end");
    chunks.push_back(cur);
  }
  return chunks;
}

// Total decoder for raw model output. Repairs: an orphan I/E opens a new
// chunk, a label change closes the previous one, unterminated BIOES chunks
// are closed at sequence end.
inline std::vector<Chunk> decode_tags_lenient(const std::vector<std::string>& tags,
                                              TagScheme scheme) {
  std::vector<Chunk> chunks;
  bool open = false;
  Chunk cur;
  auto close = [&] {
    if (open) chunks.push_back(cur);
    open = false;
  };
  for (size_t t = 0; t < tags.size(); ++t) {
    ParsedTag p = parse_tag(tags[t], scheme);
    switch (p.prefix) {
      case 'O':
        close();
        break;
      case 'B':
        close();
        cur = {t, t, p.label};
        open = true;
        break;
      case 'S':
        close();
        chunks.push_back({t, t, p.label});
        break;
      case 'I':
        if (open && cur.label == p.label) {
          cur.last_token = t;
        } else {
          close();
          cur = {t, t, p.label};
          open = true;
        }
        break;
      case 'E':
        if (open && cur.label == p.label) {
          cur.last_token = t;
          chunks.push_back(cur);
          open = false;
        } else {
          close();
          chunks.push_back({t, t, p.label});
        }
        break;
    }
  }
  close();
  return chunks;
}

// NerConverter: per-token tags + token offsets -> character-offset chunk
// annotations over the source text.
inline std::vector<Annotation> convert_ner(const std::string& text,
                                           const std::vector<Annotation>& tokens,
                                           const std::vector<std::string>& tags,
                                           TagScheme scheme,
                                           bool lenient = true) {
  if (tokens.size() != tags.size())
    throw std::runtime_error("length mismatch: " + std::to_string(tokens.size()) +
                             " tokens vs " + std::to_string(tags.size()) + " tags");
  auto chunks = lenient ? decode_tags_lenient(tags, scheme)
                        : decode_tags(tags, scheme);
  std::vector<Annotation> out;
  auto offs = utf8::scalar_byte_offsets(text);
  for (auto& c : chunks) {
    Annotation a;
    a.kind = AnnotationKind::chunk;
    a.begin = tokens[c.first_token].begin;
    a.end = tokens[c.last_token].end;
    a.result = utf8::slice(text, offs, a.begin, a.end);
    a.metadata["entity"] = c.label;
    auto sit = tokens[c.first_token].metadata.find("sentence");
    if (sit != tokens[c.first_token].metadata.end())
      a.metadata["sentence"] = sit->second;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace clinlp

#endif  // CLINLP_TAG_CODEC_HPP
