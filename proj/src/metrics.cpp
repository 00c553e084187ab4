#include "opnn/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "opnn/error.hpp"

namespace opnn::metrics {

namespace {

std::optional<double> percent(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

void check_binary(const std::vector<int>& labels, const char* what) {
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorKind::Argument, fmt::format("{}: labels must be 0 or 1, got {}", what, l));
  }
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels, int positive) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("label count", predictions.size(), labels.size(), "confusion");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pos = predictions[i] == positive;
    const bool true_pos = labels[i] == positive;
    if (pred_pos && true_pos) ++cm.tp;
    else if (pred_pos) ++cm.fp;
    else if (true_pos) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

std::size_t Metrics::undefined_count() const noexcept {
  return !accuracy + !precision + !sensitivity + !specificity + !f1;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  m.accuracy = percent(cm.tp + cm.tn, cm.total());
  m.precision = percent(cm.tp, cm.tp + cm.fp);
  m.sensitivity = percent(cm.tp, cm.tp + cm.fn);
  m.specificity = percent(cm.tn, cm.tn + cm.fp);
  // 2PR / (P + R) = 2TP / (2TP + FP + FN); undefined only when both are.
  m.f1 = percent(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  return m;
}

Metrics weighted_metrics(const std::vector<Metrics>& per_class, const std::vector<std::size_t>& supports) {
  if (per_class.size() != supports.size()) {
    throw ShapeError("support count", per_class.size(), supports.size(), "weighted_metrics");
  }
  const std::size_t total = std::accumulate(supports.begin(), supports.end(), std::size_t{0});
  require(total > 0, ErrorKind::Argument, "weighted_metrics: supports sum to zero");

  auto combine = [&](std::optional<double> Metrics::*field) -> std::optional<double> {
    double acc = 0.0;
    for (std::size_t i = 0; i < per_class.size(); ++i) {
      if (supports[i] == 0) continue;
      const auto& v = per_class[i].*field;
      if (!v) return std::nullopt;
      acc += static_cast<double>(supports[i]) * *v;
    }
    return acc / static_cast<double>(total);
  };
  Metrics w;
  w.accuracy = combine(&Metrics::accuracy);
  w.precision = combine(&Metrics::precision);
  w.sensitivity = combine(&Metrics::sensitivity);
  w.specificity = combine(&Metrics::specificity);
  w.f1 = combine(&Metrics::f1);
  return w;
}

ClassReport class_report(const ConfusionMatrix& cm) {
  ClassReport r;
  r.positive = metrics(cm);
  r.negative = metrics(cm.swapped());
  r.positive_support = cm.tp + cm.fn;
  r.negative_support = cm.tn + cm.fp;
  if (r.positive_support + r.negative_support > 0) {
    r.weighted = weighted_metrics({r.negative, r.positive}, {r.negative_support, r.positive_support});
  }
  return r;
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("label count", scores.size(), labels.size(), "roc_auc");
  check_binary(labels, "roc_auc");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::Argument, "roc_auc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult result;
  result.curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    std::size_t j = i;
    for (; j < order.size() && scores[order[j]] == threshold; ++j) {
      if (labels[order[j]] == 1) ++tp;
      else ++fp;
    }
    const RocPoint prev = result.curve.points.back();
    const RocPoint next{static_cast<double>(fp) / static_cast<double>(negatives),
                        static_cast<double>(tp) / static_cast<double>(positives)};
    area += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
    result.curve.points.push_back(next);
    result.curve.thresholds.push_back(threshold);
    i = j;
  }
  result.auc = area;
  return result;
}

double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("label count", scores.size(), labels.size(), "mann_whitney_auc");
  }
  check_binary(labels, "mann_whitney_auc");
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  if (pairs == 0) throw Error(ErrorKind::Argument, "mann_whitney_auc: both classes must be present");
  return wins / static_cast<double>(pairs);
}

std::string format_metric(const std::optional<double>& value) {
  return value ? fmt::format("{:.2f}", *value) : std::string("undefined");
}

}  // namespace opnn::metrics
