#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace opnn::metrics {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  /// The same counts seen with the other class as positive.
  ConfusionMatrix swapped() const noexcept { return {tn, tp, fn, fp}; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Classes are 0/1; `positive` names the positive one.
ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels, int positive = 1);

/// Percentages. An empty optional marks a zero denominator.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> f1;

  std::size_t undefined_count() const noexcept;
};

Metrics metrics(const ConfusionMatrix& cm);

/// Support-weighted mean of per-class metrics. A metric undefined in a class
/// with nonzero support is undefined in the result; zero-support classes are
/// ignored.
Metrics weighted_metrics(const std::vector<Metrics>& per_class, const std::vector<std::size_t>& supports);

/// Per-class rows (class 0, class 1) and the weighted row for a binary task.
struct ClassReport {
  Metrics negative;
  Metrics positive;
  Metrics weighted;
  std::size_t negative_support = 0;
  std::size_t positive_support = 0;
};

ClassReport class_report(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  /// threshold i produced points[i + 1]; points[0] is (0, 0).
  std::vector<double> thresholds;
};

struct RocResult {
  RocCurve curve;
  double auc = 0;
};

/// Descending-threshold sweep, equal scores stepping together; AUC by the
/// trapezoid rule. Labels are 0/1 with 1 positive.
RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// P(score_pos > score_neg) + 0.5 P(tie), counted over all pairs.
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// "undefined" or the value with two decimals.
std::string format_metric(const std::optional<double>& value);

}  // namespace opnn::metrics
