#include "opnn/report.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace opnn::report {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void sort_by_q(std::vector<ClassifierResult>& results) {
  std::stable_sort(results.begin(), results.end(), [](const ClassifierResult& a, const ClassifierResult& b) {
    return std::tie(a.branch, a.split, a.q) < std::tie(b.branch, b.split, b.q);
  });
}

std::string model_name(const ClassifierResult& r) { return fmt::format("Q{}", r.q); }

std::string metric_row(const metrics::Metrics& m) {
  return fmt::format("{},{},{},{},{}", metrics::format_metric(m.accuracy), metrics::format_metric(m.precision),
                     metrics::format_metric(m.sensitivity), metrics::format_metric(m.f1),
                     metrics::format_metric(m.specificity));
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string file_stem(const std::string& branch, int split, std::size_t q) {
  return fmt::format("{}_split{}_q{}", branch, split, q);
}

std::string metrics_csv(std::vector<ClassifierResult> results) {
  sort_by_q(results);
  std::string out = "Model,Class,Accuracy,Precision,Sensitivity,F1_score,Specificity,Support,Undefined\n";
  for (const auto& r : results) {
    const auto rep = metrics::class_report(r.confusion);
    const auto name = model_name(r);
    out += fmt::format("{},NonAF,{},{},{}\n", name, metric_row(rep.negative), rep.negative_support,
                       rep.negative.undefined_count());
    out += fmt::format("{},AF,{},{},{}\n", name, metric_row(rep.positive), rep.positive_support,
                       rep.positive.undefined_count());
    out += fmt::format("{},Weighted Average,{},{},{}\n", name, metric_row(rep.weighted),
                       rep.negative_support + rep.positive_support, rep.weighted.undefined_count());
  }
  return out;
}

std::size_t undefined_cells(const std::vector<ClassifierResult>& results) {
  std::size_t n = 0;
  for (const auto& r : results) {
    const auto rep = metrics::class_report(r.confusion);
    n += rep.negative.undefined_count() + rep.positive.undefined_count() + rep.weighted.undefined_count();
  }
  return n;
}

std::string confusion_csv(std::vector<ClassifierResult> results) {
  sort_by_q(results);
  std::string out = "Model,TP,TN,FP,FN\n";
  for (const auto& r : results) {
    const auto& c = r.confusion;
    out += fmt::format("{},{},{},{},{}\n", model_name(r), c.tp, c.tn, c.fp, c.fn);
  }
  return out;
}

std::string roc_csv(const metrics::RocCurve& curve) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : curve.points) out += fmt::format("{:.6f},{:.6f}\n", p.fpr, p.tpr);
  return out;
}

std::string branch_comparison_csv(const std::vector<ClassifierResult>& results) {
  std::string out = "Branch,Model,Accuracy,Precision,Sensitivity,F1_score,Specificity\n";
  for (const auto& r : results) {
    out += fmt::format("{},{},{}\n", r.branch, model_name(r), metric_row(metrics::class_report(r.confusion).weighted));
  }
  return out;
}

std::string roc_svg(const std::vector<std::pair<std::string, metrics::RocCurve>>& curves, const std::string& title) {
  constexpr double kSize = 360, kLeft = 60, kTop = 40;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kLeft + kSize + 160, kTop + kSize + 50, kLeft + kSize / 2, escape(title));
  auto x = [&](double v) { return kLeft + v * kSize; };
  auto y = [&](double v) { return kTop + (1.0 - v) * kSize; };
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, kSize, kSize);
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n",
                     x(0), y(0), x(1), y(1));
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.2f}</text>\n", x(v), y(0) + 16, v);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2f}</text>\n", kLeft - 6, y(v) + 4, v);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">False positive rate</text>\n", x(0.5),
                     y(0) + 36);
  svg += fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">True positive rate</text>\n",
      y(0.5));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* colour = kPalette[c % std::size(kPalette)];
    std::string points;
    for (const auto& p : curves[c].second.points) points += fmt::format("{:.2f},{:.2f} ", x(p.fpr), y(p.tpr));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", colour, points);
    const double ly = kTop + 16 + 18 * static_cast<double>(c);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", kLeft + kSize + 12,
                       ly - 10, colour);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft + kSize + 30, ly, escape(curves[c].first));
  }
  return svg + "</svg>\n";
}

std::string bar_chart_svg(const std::vector<std::string>& categories, const std::vector<Series>& series,
                          const std::string& title, double y_max) {
  constexpr double kLeft = 60, kTop = 40, kHeight = 300, kBar = 16, kGap = 24;
  const double group = kBar * static_cast<double>(series.size()) + kGap;
  const double width = group * static_cast<double>(categories.size());
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kLeft + width + 170, kTop + kHeight + 50, kLeft + width / 2, escape(title));
  auto y = [&](double v) { return kTop + (1.0 - std::clamp(v / y_max, 0.0, 1.0)) * kHeight; };
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     kTop + kHeight);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kTop + kHeight,
                     kLeft + width);
  for (int i = 0; i <= 5; ++i) {
    const double v = y_max * i / 5.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:g}</text>\n", kLeft - 6, y(v) + 4, v);
  }
  for (std::size_t g = 0; g < categories.size(); ++g) {
    const double gx = kLeft + kGap / 2 + group * static_cast<double>(g);
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (g >= series[s].values.size() || !series[s].values[g]) continue;
      const double v = *series[s].values[g];
      svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
                         gx + kBar * static_cast<double>(s), y(v), kBar - 2, kTop + kHeight - y(v),
                         kPalette[s % std::size(kPalette)]);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       gx + kBar * static_cast<double>(series.size()) / 2, kTop + kHeight + 18,
                       escape(categories[g]));
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = kTop + 16 + 18 * static_cast<double>(s);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", kLeft + width + 12,
                       ly - 10, kPalette[s % std::size(kPalette)]);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft + width + 30, ly, escape(series[s].name));
  }
  return svg + "</svg>\n";
}

}  // namespace opnn::report
