#ifndef CLINLP_EMBEDDINGS_HPP
#define CLINLP_EMBEDDINGS_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "clinlp/tensor.hpp"

namespace clinlp {

// Pretrained word vectors loaded from a text file: one "token v1 ... vD"
// entry per line, optional "V D" header line.
struct EmbeddingStore {
  size_t dimension = 0;
  std::unordered_map<std::string, size_t> vocabulary;
  Tensor matrix;  // [V x dimension]
  bool case_fallback = true;
  size_t duplicate_count = 0;

  struct Lookup {
    std::vector<double> vector;
    bool covered = false;
  };

  Lookup lookup(const std::string& token) const {
    auto it = vocabulary.find(token);
    if (it == vocabulary.end() && case_fallback) {
      std::string lower = token;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      it = vocabulary.find(lower);
    }
    if (it == vocabulary.end())
      return {std::vector<double>(dimension, 0.0), false};
    const double* r = matrix.row(it->second);
    return {std::vector<double>(r, r + dimension), true};
  }

  double coverage(const std::vector<std::string>& tokens) const {
    if (tokens.empty()) return 1.0;
    size_t covered = 0;
    for (auto& t : tokens) covered += lookup(t).covered ? 1 : 0;
    return double(covered) / double(tokens.size());
  }
};

inline EmbeddingStore parse_embeddings(std::istream& in, bool case_fallback = true) {
  EmbeddingStore store;
  store.case_fallback = case_fallback;
  std::vector<double> values;
  std::string line;
  size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (first) {
      first = false;
      // "V D" header: numeric token, single value, no stored vector
      if (row.size() == 1 && !token.empty() &&
          std::all_of(token.begin(), token.end(),
                      [](unsigned char c) { return std::isdigit(c); })) {
        store.dimension = size_t(row[0]);
        continue;
      }
    }
    if (row.empty())
      throw std::runtime_error("line " + std::to_string(lineno) + ": no values");
    if (store.dimension == 0) store.dimension = row.size();
    if (row.size() != store.dimension)
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected " +
                               std::to_string(store.dimension) + " values, got " +
                               std::to_string(row.size()));
    if (store.vocabulary.count(token)) {
      ++store.duplicate_count;  // first occurrence wins
      continue;
    }
    store.vocabulary.emplace(token, store.vocabulary.size());
    values.insert(values.end(), row.begin(), row.end());
  }
  size_t V = store.vocabulary.size();
  store.matrix = Tensor({V, store.dimension}, std::move(values));
  return store;
}

inline EmbeddingStore load_embeddings(const std::string& path,
                                      bool case_fallback = true) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path);
  return parse_embeddings(in, case_fallback);
}

}  // namespace clinlp

#endif  // CLINLP_EMBEDDINGS_HPP
