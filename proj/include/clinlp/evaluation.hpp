#ifndef CLINLP_EVALUATION_HPP
#define CLINLP_EVALUATION_HPP

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinlp/tag_codec.hpp"

namespace clinlp {

struct LabelMetrics {
  size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  // Preserves a fixed label order when one is imposed (assertion reports).
  std::vector<std::pair<std::string, LabelMetrics>> per_label;
  double micro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> token_accuracy;
};

namespace detail {
inline double ratio(size_t num, size_t den) {
  return den == 0 ? 0.0 : double(num) / double(den);
}
inline double f1_of(double p, double r) {
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}
inline void finalize(EvalReport& rep) {
  size_t tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  for (auto& [label, m] : rep.per_label) {
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = f1_of(m.precision, m.recall);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    macro_sum += m.f1;
  }
  rep.micro_precision = ratio(tp, tp + fp);
  rep.micro_recall = ratio(tp, tp + fn);
  rep.micro_f1 = f1_of(rep.micro_precision, rep.micro_recall);
  rep.macro_f1 = rep.per_label.empty() ? 0.0 : macro_sum / double(rep.per_label.size());
}
}  // namespace detail

// Strict chunk matching: a prediction is a true positive iff an identical
// (first, last, label) chunk exists in the gold set for that sentence.
inline EvalReport chunk_prf(const std::vector<std::vector<Chunk>>& gold,
                            const std::vector<std::vector<Chunk>>& pred) {
  if (gold.size() != pred.size())
    throw std::runtime_error("gold/pred sentence count mismatch");
  std::map<std::string, LabelMetrics> acc;
  for (size_t s = 0; s < gold.size(); ++s) {
    for (const auto& p : pred[s]) {
      bool hit = std::find(gold[s].begin(), gold[s].end(), p) != gold[s].end();
      if (hit)
        acc[p.label].tp++;
      else
        acc[p.label].fp++;
    }
    for (const auto& g : gold[s]) {
      bool hit = std::find(pred[s].begin(), pred[s].end(), g) != pred[s].end();
      if (!hit) acc[g.label].fn++;
    }
  }
  EvalReport rep;
  for (auto& [label, m] : acc) rep.per_label.emplace_back(label, m);
  detail::finalize(rep);
  return rep;
}

inline double token_accuracy(const std::vector<std::string>& gold,
                             const std::vector<std::string>& pred) {
  if (gold.size() != pred.size())
    throw std::runtime_error("token accuracy: length mismatch");
  if (gold.empty()) throw std::runtime_error("empty evaluation");
  size_t hit = 0;
  for (size_t i = 0; i < gold.size(); ++i) hit += gold[i] == pred[i] ? 1 : 0;
  return double(hit) / double(gold.size());
}

// Fixed row order of the assertion report.
inline const std::vector<std::string>& assertion_report_order() {
  static const std::vector<std::string> order = {
      "absent", "associated_with_someone_else", "conditional",
      "hypothetical", "possible", "present"};
  return order;
}

// Per-label F1 rows in fixed order plus micro F1. For single-label
// multi-class classification micro F1 equals accuracy.
inline EvalReport assertion_report(const std::vector<std::string>& gold,
                                   const std::vector<std::string>& pred) {
  if (gold.size() != pred.size())
    throw std::runtime_error("assertion report: length mismatch");
  const auto& order = assertion_report_order();
  auto known = [&](const std::string& l) {
    return std::find(order.begin(), order.end(), l) != order.end();
  };
  std::map<std::string, LabelMetrics> acc;
  for (auto& l : order) acc[l];
  for (size_t i = 0; i < gold.size(); ++i) {
    if (!known(gold[i])) throw std::runtime_error("unknown label '" + gold[i] + "'");
    if (!known(pred[i])) throw std::runtime_error("unknown label '" + pred[i] + "'");
    if (gold[i] == pred[i]) {
      acc[gold[i]].tp++;
    } else {
      acc[pred[i]].fp++;
      acc[gold[i]].fn++;
    }
  }
  EvalReport rep;
  for (auto& l : order) rep.per_label.emplace_back(l, acc[l]);
  detail::finalize(rep);
  return rep;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& rep) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (auto& [label, m] : rep.per_label) {
    labels[label] = {{"tp", m.tp},
                     {"fp", m.fp},
                     {"fn", m.fn},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1}};
  }
  j["per_label"] = labels;
  j["micro_precision"] = rep.micro_precision;
  j["micro_recall"] = rep.micro_recall;
  j["micro_f1"] = rep.micro_f1;
  j["macro_f1"] = rep.macro_f1;
  if (rep.token_accuracy) j["token_accuracy"] = *rep.token_accuracy;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport rep;
  for (auto& [label, mj] : j.at("per_label").items()) {
    LabelMetrics m;
    m.tp = mj.at("tp").get<size_t>();
    m.fp = mj.at("fp").get<size_t>();
    m.fn = mj.at("fn").get<size_t>();
    m.precision = mj.at("precision").get<double>();
    m.recall = mj.at("recall").get<double>();
    m.f1 = mj.at("f1").get<double>();
    rep.per_label.emplace_back(label, m);
  }
  rep.micro_precision = j.at("micro_precision").get<double>();
  rep.micro_recall = j.at("micro_recall").get<double>();
  rep.micro_f1 = j.at("micro_f1").get<double>();
  rep.macro_f1 = j.at("macro_f1").get<double>();
  if (j.contains("token_accuracy"))
    rep.token_accuracy = j.at("token_accuracy").get<double>();
  return rep;
}

enum class ReportStyle { table, json };

inline std::string format_report(const EvalReport& rep, ReportStyle style) {
  if (style == ReportStyle::json) return report_to_json(rep).dump(2);
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "label\tprecision\trecall\tf1\n";
  for (auto& [label, m] : rep.per_label)
    os << label << '\t' << m.precision << '\t' << m.recall << '\t' << m.f1 << '\n';
  os << "micro F1\t" << rep.micro_precision << '\t' << rep.micro_recall << '\t'
     << rep.micro_f1 << '\n';
  os << "macro F1\t\t\t" << rep.macro_f1 << '\n';
  if (rep.token_accuracy)
    os << "token accuracy\t\t\t" << *rep.token_accuracy << '\n';
  return os.str();
}

}  // namespace clinlp

#endif  // CLINLP_EVALUATION_HPP
