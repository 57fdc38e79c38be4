#pragma once

#include <array>
#include <string>
#include <vector>

#include "ideoscale/gold.hpp"
#include "ideoscale/prediction.hpp"

namespace ideoscale {

/// 3x3 tally indexed (gold class, predicted class).
struct ConfusionMatrix {
  std::array<std::array<long, 3>, 3> counts{};
  long total = 0;

  void add(IdeologyClass gold, IdeologyClass predicted) {
    ++counts[index_of(gold)][index_of(predicted)];
    ++total;
  }
  long at(IdeologyClass gold, IdeologyClass predicted) const {
    return counts[index_of(gold)][index_of(predicted)];
  }
  long row_sum(IdeologyClass gold) const {
    const auto& r = counts[index_of(gold)];
    return r[0] + r[1] + r[2];
  }
  long column_sum(IdeologyClass predicted) const {
    const auto k = index_of(predicted);
    return counts[0][k] + counts[1][k] + counts[2][k];
  }
  long trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Sentences dropped from one (model, benchmark) comparison.
struct Exclusions {
  std::size_t no_gold = 0;  // tie or uncoded for the benchmark
  std::size_t parse_failed = 0;
  std::size_t transport_failed = 0;
};

/// Tallies every sentence that has both a gold label and an ok prediction.
inline ConfusionMatrix confusion_matrix(const PredictionSet& predictions, const GoldLabelSet& gold,
                                        Exclusions* exclusions = nullptr) {
  ConfusionMatrix cm;
  Exclusions ex;
  for (const auto& p : predictions.items) {
    const auto* g = gold.find(p.sentence_id);
    if (!g) {
      ++ex.no_gold;
      continue;
    }
    if (p.status == PredictionStatus::ParseFailed) {
      ++ex.parse_failed;
      continue;
    }
    if (p.status == PredictionStatus::TransportFailed) {
      ++ex.transport_failed;
      continue;
    }
    cm.add(g->label, *p.label);
  }
  if (exclusions) *exclusions = ex;
  if (cm.total == 0) throw Error("confusion_matrix: no sentence has both a gold label and an ok prediction");
  return cm;
}

struct ClassMetrics {
  std::string model_id;
  CoderSource benchmark = CoderSource::Expert;
  IdeologyClass cls = IdeologyClass::Neutral;
  double f1 = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool degenerate = false;  // some ratio had a zero denominator and was set to 0
};

/// One-vs-rest metrics for `cls`: precision TP/(TP+FP), recall TP/(TP+FN),
/// their harmonic mean, and binary accuracy (TP+TN)/total.
inline ClassMetrics class_metrics(const ConfusionMatrix& cm, IdeologyClass cls) {
  ClassMetrics m;
  m.cls = cls;
  const long tp = cm.at(cls, cls);
  const long fp = cm.column_sum(cls) - tp;
  const long fn = cm.row_sum(cls) - tp;
  const long tn = cm.total - tp - fp - fn;
  const auto ratio = [&](long num, long den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1 = 0.0;
    m.degenerate = true;
  }
  m.accuracy = ratio(tp + tn, cm.total);
  return m;
}

struct MetricsCell {
  std::string model_id;
  CoderSource benchmark;
  ConfusionMatrix cm;
  Exclusions exclusions;
};

/// One row per (model, benchmark, class); models in the given order, then
/// benchmarks in the given order, then Left, Neutral, Right.
inline std::vector<ClassMetrics> metrics_table(const std::vector<const PredictionSet*>& models,
                                               const std::vector<const GoldLabelSet*>& benchmarks,
                                               std::vector<MetricsCell>* cells = nullptr) {
  std::vector<ClassMetrics> rows;
  for (const auto* model : models) {
    for (const auto* gold : benchmarks) {
      Exclusions ex;
      const auto cm = confusion_matrix(*model, *gold, &ex);
      if (cells) cells->push_back({model->model_id, gold->source, cm, ex});
      for (auto cls : kAllClasses) {
        auto m = class_metrics(cm, cls);
        m.model_id = model->model_id;
        m.benchmark = gold->source;
        rows.push_back(m);
      }
    }
  }
  return rows;
}

}  // namespace ideoscale
