#ifndef CLINLP_PIPELINE_HPP
#define CLINLP_PIPELINE_HPP

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "clinlp/annotation.hpp"

namespace clinlp {

struct StageSpec {
  std::string name;
  std::vector<std::string> input_columns;
  std::string output_column;
  AnnotationKind produces = AnnotationKind::document;
};

// A fitted, appliable stage. Immutable after construction; apply must be
// safe to call from concurrent workers.
class Stage {
 public:
  virtual ~Stage() = default;
  virtual StageSpec spec() const = 0;
  virtual std::vector<Annotation> apply(const Record& record) const = 0;
};

// A trainable stage: fit() on the upstream-transformed dataset yields the
// appliable stage.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual StageSpec spec() const = 0;
  virtual std::shared_ptr<Stage> fit(const std::vector<Record>& dataset) = 0;
};

struct PipelineItem {
  std::shared_ptr<Stage> stage;          // fixed stage
  std::shared_ptr<Estimator> estimator;  // trainable stage
  StageSpec spec() const { return stage ? stage->spec() : estimator->spec(); }
  bool trainable() const { return estimator != nullptr; }
};

struct Pipeline {
  std::vector<PipelineItem> stages;

  void add(std::shared_ptr<Stage> s) { stages.push_back({std::move(s), nullptr}); }
  void add(std::shared_ptr<Estimator> e) {
    stages.push_back({nullptr, std::move(e)});
  }
};

struct PipelineModel {
  std::vector<std::shared_ptr<Stage>> stages;
};

// Dependency validation: every input column must be produced earlier (or be
// the reserved "text" input), output columns must be unique, and the
// produced kind must match what downstream stages expect.
inline std::vector<std::string> validate(const std::vector<StageSpec>& specs,
                                         const std::set<std::string>& provided = {}) {
  std::vector<std::string> errors;
  std::set<std::string> available = provided;
  available.insert("text");
  for (const auto& s : specs) {
    for (const auto& in : s.input_columns)
      if (!available.count(in))
        errors.push_back("stage '" + s.name + "': missing input column '" + in +
                         "'");
    if (available.count(s.output_column) && s.output_column != "text")
      errors.push_back("stage '" + s.name + "': duplicate output column '" +
                       s.output_column + "'");
    if (s.output_column == "text")
      errors.push_back("stage '" + s.name + "': output column 'text' is reserved");
    for (const auto& in : s.input_columns)
      if (in == s.output_column)
        errors.push_back("stage '" + s.name + "': output column equals input '" +
                         in + "'");
    available.insert(s.output_column);
  }
  return errors;
}

inline std::vector<std::string> validate(const Pipeline& p) {
  std::vector<StageSpec> specs;
  for (auto& item : p.stages) specs.push_back(item.spec());
  return validate(specs);
}

inline std::vector<std::string> validate(const PipelineModel& m) {
  std::vector<StageSpec> specs;
  for (auto& s : m.stages) specs.push_back(s->spec());
  return validate(specs);
}

namespace detail {

inline Record apply_stages(const std::vector<std::shared_ptr<Stage>>& stages,
                           Record record) {
  for (const auto& stage : stages) {
    try {
      auto anns = stage->apply(record);
      record.add_column(stage->spec().output_column, std::move(anns));
    } catch (const std::exception& e) {
      Annotation err;
      err.kind = AnnotationKind::document;
      err.begin = 0;
      err.end = 0;
      err.result = e.what();
      err.metadata["stage"] = stage->spec().name;
      if (!record.has_column("errors")) record.add_column("errors", {});
      for (auto& [name, col] : record.columns)
        if (name == "errors") col.push_back(std::move(err));
      break;  // downstream stages would be missing their inputs
    }
  }
  return record;
}

}  // namespace detail

// Append-only, order-preserving transform. Per-record failures land in an
// "errors" column instead of aborting the run. Output is independent of the
// worker count.
inline std::vector<Record> transform(const PipelineModel& model,
                                     const std::vector<Record>& records,
                                     size_t workers = 1) {
  std::set<std::string> provided;
  if (!records.empty()) {
    for (auto& [name, col] : records.front().columns) provided.insert(name);
    for (const auto& r : records) {
      for (auto it = provided.begin(); it != provided.end();)
        it = r.has_column(*it) ? std::next(it) : provided.erase(it);
    }
  }
  std::vector<StageSpec> specs;
  for (auto& s : model.stages) specs.push_back(s->spec());
  auto errors = validate(specs, provided);
  if (!errors.empty())
    throw std::runtime_error("invalid pipeline: " + errors.front());
  std::vector<Record> out(records.size());
  if (workers <= 1 || records.size() <= 1) {
    for (size_t i = 0; i < records.size(); ++i)
      out[i] = detail::apply_stages(model.stages, records[i]);
    return out;
  }
  workers = std::min(workers, records.size());
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = w; i < records.size(); i += workers)
        out[i] = detail::apply_stages(model.stages, records[i]);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

// Trains each trainable stage in order on the dataset transformed by all
// preceding stages; fixed stages pass through.
inline PipelineModel fit(const Pipeline& pipeline,
                         const std::vector<Record>& dataset) {
  // columns already present on every dataset record (e.g. gold labels)
  // count as available inputs
  std::set<std::string> provided;
  if (!dataset.empty()) {
    for (auto& [name, col] : dataset.front().columns) provided.insert(name);
    for (const auto& r : dataset) {
      for (auto it = provided.begin(); it != provided.end();)
        it = r.has_column(*it) ? std::next(it) : provided.erase(it);
    }
  }
  std::vector<StageSpec> specs;
  for (auto& item : pipeline.stages) specs.push_back(item.spec());
  auto errors = validate(specs, provided);
  if (!errors.empty())
    throw std::runtime_error("invalid pipeline: " + errors.front());
  PipelineModel model;
  std::vector<Record> current = dataset;
  for (const auto& item : pipeline.stages) {
    std::shared_ptr<Stage> fitted;
    if (item.trainable()) {
      try {
        fitted = item.estimator->fit(current);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " in stage " +
                                 item.spec().name);
      }
    } else {
      fitted = item.stage;
    }
    // materialize this stage's output for downstream estimators
    for (auto& r : current) {
      try {
        r.add_column(fitted->spec().output_column, fitted->apply(r));
      } catch (const std::exception& e) {
        throw std::runtime_error("fit failed on record '" + r.id + "' in stage " +
                                 item.spec().name + ": " + e.what());
      }
    }
    model.stages.push_back(std::move(fitted));
  }
  return model;
}

}  // namespace clinlp

#endif  // CLINLP_PIPELINE_HPP
