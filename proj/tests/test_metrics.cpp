#include <doctest.h>

#include <random>

#include "opnn/error.hpp"
#include "opnn/metrics.hpp"
#include "oracles.hpp"

using namespace opnn;
using namespace opnn::metrics;

namespace {

ConfusionMatrix random_matrix(std::mt19937_64& rng) {
  return {1 + rng() % 100, 1 + rng() % 100, 1 + rng() % 100, 1 + rng() % 100};
}

}  // namespace

TEST_SUITE("evalmetrics") {
  TEST_CASE("confusion counting") {
    CHECK(confusion({1, 0, 1, 0}, {1, 1, 0, 0}) == ConfusionMatrix{1, 1, 1, 1});
    CHECK(confusion({1, 1, 0}, {1, 1, 0}) == ConfusionMatrix{2, 1, 0, 0});
    CHECK(confusion({}, {}) == ConfusionMatrix{});
    CHECK(confusion({1, 0, 0}, {1, 1, 0}, 0) == ConfusionMatrix{1, 1, 1, 0});
    CHECK_THROWS_AS(confusion({1}, {1, 0}), ShapeError);
  }

  TEST_CASE("worked example") {
    const auto m = opnn::metrics::metrics(ConfusionMatrix{50, 30, 10, 10});
    CHECK(format_metric(m.accuracy) == "80.00");
    CHECK(format_metric(m.precision) == "83.33");
    CHECK(format_metric(m.sensitivity) == "83.33");
    CHECK(format_metric(m.specificity) == "75.00");
    CHECK(format_metric(m.f1) == "83.33");
    CHECK(m.undefined_count() == 0);
  }

  TEST_CASE("perfect classifier and undefined cells") {
    const auto perfect = opnn::metrics::metrics(ConfusionMatrix{7, 9, 0, 0});
    for (const auto& v : {perfect.accuracy, perfect.precision, perfect.sensitivity, perfect.specificity, perfect.f1}) {
      CHECK(*v == 100.0);
    }
    const auto no_positive = opnn::metrics::metrics(ConfusionMatrix{0, 5, 3, 0});
    CHECK(!no_positive.sensitivity);
    CHECK(*no_positive.precision == 0.0);
    CHECK(format_metric(no_positive.sensitivity) == "undefined");
    CHECK(no_positive.undefined_count() >= 1);
    CHECK(opnn::metrics::metrics(ConfusionMatrix{}).undefined_count() == 5);
  }

  TEST_CASE("weighted averages") {
    Metrics a, b;
    a.accuracy = 80;
    b.accuracy = 60;
    a.precision = 10;
    b.precision = 20;
    CHECK(*weighted_metrics({a, b}, {5, 5}).accuracy == doctest::Approx(70));
    const auto w = weighted_metrics({a, b}, {3958, 5846});
    CHECK(*w.precision == doctest::Approx((3958 * 10.0 + 5846 * 20.0) / 9804));
    CHECK(*weighted_metrics({a, b}, {0, 4}).accuracy == 60);
    Metrics undefined_b = b;
    undefined_b.accuracy.reset();
    CHECK(!weighted_metrics({a, undefined_b}, {3, 4}).accuracy);
    CHECK(*weighted_metrics({a, undefined_b}, {3, 0}).accuracy == 80);
  }

  TEST_CASE("class report rows") {
    const ConfusionMatrix cm{50, 30, 10, 10};
    const auto rep = class_report(cm);
    CHECK(rep.positive_support == 60);
    CHECK(rep.negative_support == 40);
    CHECK(*rep.positive.precision == doctest::Approx(*opnn::metrics::metrics(cm).precision));
    CHECK(*rep.negative.precision == doctest::Approx(*opnn::metrics::metrics(cm.swapped()).precision));
    CHECK(*rep.weighted.sensitivity == doctest::Approx((60 * 50.0 / 60 + 40 * 30.0 / 40) / 100 * 100));
  }

  TEST_CASE("ROC examples") {
    auto r = roc_auc({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0});
    CHECK(r.auc == doctest::Approx(0.75));
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}).auc == 1.0);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1}).auc == 0.5);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), Error);
    CHECK(r.curve.points.front().fpr == 0.0);
    CHECK(r.curve.points.front().tpr == 0.0);
    CHECK(r.curve.points.back().fpr == 1.0);
    CHECK(r.curve.points.back().tpr == 1.0);
    CHECK(r.curve.thresholds.size() + 1 == r.curve.points.size());
  }

  TEST_CASE("property: trapezoid AUC equals pairwise ranking") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng() % 60;
      std::vector<double> scores(n);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(rng() % 10) / 10.0;
        labels[i] = static_cast<int>(rng() % 2);
      }
      labels[0] = 1;
      labels[1] = 0;
      const auto r = roc_auc(scores, labels);
      CHECK(std::abs(r.auc - oracle::pairwise_auc(scores, labels)) < 1e-12);
      CHECK(std::abs(mann_whitney_auc(scores, labels) - oracle::pairwise_auc(scores, labels)) < 1e-12);
      for (std::size_t i = 1; i < r.curve.points.size(); ++i) {
        CHECK(r.curve.points[i].fpr >= r.curve.points[i - 1].fpr);
        CHECK(r.curve.points[i].tpr >= r.curve.points[i - 1].tpr);
      }
      for (std::size_t i = 1; i < r.curve.thresholds.size(); ++i) {
        CHECK(r.curve.thresholds[i] < r.curve.thresholds[i - 1]);
      }
    }
  }

  TEST_CASE("property: metrics are invariant under scaling the counts") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
      const auto cm = random_matrix(rng);
      const std::size_t k = 1 + rng() % 50;
      const auto a = opnn::metrics::metrics(cm);
      const auto b = opnn::metrics::metrics({cm.tp * k, cm.tn * k, cm.fp * k, cm.fn * k});
      CHECK(*a.accuracy == doctest::Approx(*b.accuracy).epsilon(1e-12));
      CHECK(*a.precision == doctest::Approx(*b.precision).epsilon(1e-12));
      CHECK(*a.sensitivity == doctest::Approx(*b.sensitivity).epsilon(1e-12));
      CHECK(*a.specificity == doctest::Approx(*b.specificity).epsilon(1e-12));
      CHECK(*a.f1 == doctest::Approx(*b.f1).epsilon(1e-12));
    }
  }

  TEST_CASE("property: swapping the positive class") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const auto cm = random_matrix(rng);
      const auto a = opnn::metrics::metrics(cm);
      const auto b = opnn::metrics::metrics(cm.swapped());
      CHECK(*b.precision == doctest::Approx(100.0 * cm.tn / (cm.tn + cm.fn)));
      CHECK(*b.sensitivity == doctest::Approx(*a.specificity));
      CHECK(*b.specificity == doctest::Approx(*a.sensitivity));
      CHECK(*b.accuracy == doctest::Approx(*a.accuracy));
    }
  }
}
