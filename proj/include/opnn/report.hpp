#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opnn/metrics.hpp"

namespace opnn::report {

/// Test-set outcome of one classifier.
struct ClassifierResult {
  /// "raw_ppg", "restored_ppg" or "ecg".
  std::string branch;
  int split = 0;
  std::size_t q = 0;
  metrics::ConfusionMatrix confusion;
  std::vector<double> scores;
  std::vector<int> labels;
};

/// "<branch>_split<split>_q<q>".
std::string file_stem(const std::string& branch, int split, std::size_t q);

/// Model,Class,Accuracy,Precision,Sensitivity,F1_score,Specificity,Support,Undefined
/// Three rows per model (NonAF, AF, Weighted Average), models ordered by q.
std::string metrics_csv(std::vector<ClassifierResult> results);

/// Model,TP,TN,FP,FN with AF positive.
std::string confusion_csv(std::vector<ClassifierResult> results);

/// fpr,tpr
std::string roc_csv(const metrics::RocCurve& curve);

/// Branch,Accuracy,Precision,Sensitivity,F1_score,Specificity (weighted)
std::string branch_comparison_csv(const std::vector<ClassifierResult>& results);

/// Number of undefined metric cells across all rows of metrics_csv.
std::size_t undefined_cells(const std::vector<ClassifierResult>& results);

struct Series {
  std::string name;
  std::vector<std::optional<double>> values;
};

std::string roc_svg(const std::vector<std::pair<std::string, metrics::RocCurve>>& curves, const std::string& title);

/// Grouped bars: one group per category, one bar per series. Undefined
/// values are drawn as an empty slot.
std::string bar_chart_svg(const std::vector<std::string>& categories, const std::vector<Series>& series,
                          const std::string& title, double y_max = 100.0);

}  // namespace opnn::report
