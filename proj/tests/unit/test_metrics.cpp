#include <gtest/gtest.h>

#include <random>

#include "ideoscale/metrics.hpp"
#include "support/oracles.hpp"

using namespace ideoscale;

namespace {

struct Fixture {
  GoldLabelSet gold;
  PredictionSet preds;
};

Fixture build(const std::vector<std::pair<IdeologyClass, IdeologyClass>>& pairs) {
  Fixture f;
  f.gold.source = CoderSource::Expert;
  f.preds.model_id = "m";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string id = "s" + std::to_string(i);
    f.gold.add({id, CoderSource::Expert, pairs[i].first, 1, 1});
    f.preds.items.push_back(make_ok(id, pairs[i].second));
  }
  return f;
}

constexpr auto L = IdeologyClass::Left;
constexpr auto N = IdeologyClass::Neutral;
constexpr auto R = IdeologyClass::Right;

}  // namespace

TEST(ClassMetrics, WorkedExample) {
  const auto f = build({{L, L}, {L, N}, {N, N}, {R, R}});
  const auto cm = confusion_matrix(f.preds, f.gold);
  const auto m = class_metrics(cm, L);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_FALSE(m.degenerate);
}

TEST(ClassMetrics, AccuracyIsClassDependent) {
  const auto f = build({{L, L}, {L, L}, {L, N}, {N, R}, {R, R}, {R, N}});
  const auto cm = confusion_matrix(f.preds, f.gold);
  const double acc_l = class_metrics(cm, L).accuracy;
  const double acc_n = class_metrics(cm, N).accuracy;
  const double acc_r = class_metrics(cm, R).accuracy;
  EXPECT_NEAR(acc_l, 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(acc_n, 3.0 / 6.0, 1e-15);
  EXPECT_NEAR(acc_r, 4.0 / 6.0, 1e-15);
  EXPECT_NE(acc_l, acc_n);
}

TEST(ClassMetrics, DegenerateWhenClassNeverPredicted) {
  const auto f = build({{L, L}, {R, L}});
  const auto m = class_metrics(confusion_matrix(f.preds, f.gold), R);
  EXPECT_TRUE(m.degenerate);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  const auto n = class_metrics(confusion_matrix(f.preds, f.gold), N);
  EXPECT_TRUE(n.degenerate);
  EXPECT_DOUBLE_EQ(n.accuracy, 1.0);
}

TEST(ConfusionMatrix, ExclusionsAreCounted) {
  auto f = build({{L, L}, {R, R}, {N, N}});
  f.preds.items[0].status = PredictionStatus::ParseFailed;
  f.preds.items[0].label.reset();
  f.preds.items[1].status = PredictionStatus::TransportFailed;
  f.preds.items[1].label.reset();
  f.preds.items.push_back(make_ok("nogold", L));
  Exclusions ex;
  const auto cm = confusion_matrix(f.preds, f.gold, &ex);
  EXPECT_EQ(cm.total, 1);
  EXPECT_EQ(cm.at(N, N), 1);
  EXPECT_EQ(ex.parse_failed, 1u);
  EXPECT_EQ(ex.transport_failed, 1u);
  EXPECT_EQ(ex.no_gold, 1u);
}

TEST(ConfusionMatrix, EmptyIntersectionThrows) {
  auto f = build({{L, L}});
  f.preds.items[0].sentence_id = "other";
  EXPECT_THROW(confusion_matrix(f.preds, f.gold), Error);
}

TEST(ClassMetrics, PropertyAgreesWithOracle) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> len(1, 60), cls(0, 2);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::pair<IdeologyClass, IdeologyClass>> pairs;
    std::vector<std::pair<int, int>> raw;
    const int n = len(gen);
    for (int k = 0; k < n; ++k) {
      const int g = cls(gen), p = cls(gen);
      pairs.emplace_back(static_cast<IdeologyClass>(g), static_cast<IdeologyClass>(p));
      raw.emplace_back(g, p);
    }
    const auto f = build(pairs);
    const auto cm = confusion_matrix(f.preds, f.gold);
    ASSERT_EQ(cm.counts, oracle::tally(raw));
    for (int c = 0; c < 3; ++c) {
      const auto b = oracle::one_vs_rest(raw, c);
      const auto m = class_metrics(cm, static_cast<IdeologyClass>(c));
      const double p = b.tp + b.fp ? double(b.tp) / double(b.tp + b.fp) : 0.0;
      const double r = b.tp + b.fn ? double(b.tp) / double(b.tp + b.fn) : 0.0;
      const double f1 = b.tp ? 2.0 * b.tp / double(2 * b.tp + b.fp + b.fn) : 0.0;
      ASSERT_NEAR(m.precision, p, 1e-12);
      ASSERT_NEAR(m.recall, r, 1e-12);
      ASSERT_NEAR(m.f1, f1, 1e-12);
      ASSERT_NEAR(m.accuracy, double(b.tp + b.tn) / n, 1e-12);
      ASSERT_GE(m.f1, 0.0);
      ASSERT_LE(m.f1, 1.0);
    }
  }
}

TEST(MetricsTable, RowOrderModelBenchmarkClass) {
  auto f = build({{L, L}, {R, N}});
  GoldLabelSet crowd;
  crowd.source = CoderSource::Crowd;
  crowd.add({"s0", CoderSource::Crowd, L, 1, 1});
  PredictionSet other = f.preds;
  other.model_id = "n";
  std::vector<MetricsCell> cells;
  const auto rows = metrics_table({&f.preds, &other}, {&f.gold, &crowd}, &cells);
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[0].model_id, "m");
  EXPECT_EQ(rows[0].cls, L);
  EXPECT_EQ(rows[2].cls, R);
  EXPECT_EQ(rows[3].benchmark, CoderSource::Crowd);
  EXPECT_EQ(rows[6].model_id, "n");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[1].exclusions.no_gold, 1u);
}
