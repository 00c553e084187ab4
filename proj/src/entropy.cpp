#include "opnn/entropy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>

#include "opnn/error.hpp"

namespace opnn::entropy {

namespace {

void check_length(std::span<const double> x, std::size_t minimum, const char* what) {
  if (x.size() < minimum) {
    throw Error(ErrorKind::Argument, fmt::format("{}: need at least {} samples, got {}", what, minimum, x.size()));
  }
}

double population_sd(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : x) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / n);
}

}  // namespace

double tolerance(std::span<const double> x, const EntropyParams& p) {
  if (p.r_is_absolute) return p.r;
  if (x.empty()) return 0.0;
  // Rounding in the mean would otherwise give a constant a tiny spread.
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) return 0.0;
  return p.r * population_sd(x);
}

double apen(std::span<const double> x, const EntropyParams& p) {
  require(p.m >= 1, ErrorKind::Argument, "apen: m must be >= 1");
  const auto m = static_cast<std::size_t>(p.m);
  check_length(x, m + 2, "apen");
  const double r = tolerance(x, p);
  if (!(r > 0.0)) throw Error(ErrorKind::Argument, "apen: tolerance is zero (constant input with relative r)");

  const std::size_t n = x.size();
  const std::size_t count_m = n - m + 1;
  const std::size_t count_m1 = n - m;
  std::vector<std::size_t> c_m(count_m, 1);    // self-match
  std::vector<std::size_t> c_m1(count_m1, 1);  // self-match
  for (std::size_t i = 0; i < count_m; ++i) {
    for (std::size_t j = i + 1; j < count_m; ++j) {
      bool close = true;
      for (std::size_t k = 0; k < m; ++k) {
        if (std::abs(x[i + k] - x[j + k]) > r) {
          close = false;
          break;
        }
      }
      if (!close) continue;
      ++c_m[i];
      ++c_m[j];
      if (j < count_m1 && std::abs(x[i + m] - x[j + m]) <= r) {
        ++c_m1[i];
        ++c_m1[j];
      }
    }
  }
  double phi_m = 0.0;
  for (auto c : c_m) phi_m += std::log(static_cast<double>(c) / static_cast<double>(count_m));
  double phi_m1 = 0.0;
  for (auto c : c_m1) phi_m1 += std::log(static_cast<double>(c) / static_cast<double>(count_m1));
  return phi_m / static_cast<double>(count_m) - phi_m1 / static_cast<double>(count_m1);
}

double sampen(std::span<const double> x, const EntropyParams& p) {
  require(p.m >= 1, ErrorKind::Argument, "sampen: m must be >= 1");
  const auto m = static_cast<std::size_t>(p.m);
  check_length(x, m + 2, "sampen");
  const double r = tolerance(x, p);
  if (!(r > 0.0)) throw Error(ErrorKind::Argument, "sampen: tolerance is zero (constant input with relative r)");

  const std::size_t templates = x.size() - m;
  std::uint64_t b = 0;
  std::uint64_t a = 0;
  for (std::size_t i = 0; i < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      bool close = true;
      for (std::size_t k = 0; k < m; ++k) {
        if (std::abs(x[i + k] - x[j + k]) > r) {
          close = false;
          break;
        }
      }
      if (!close) continue;
      ++b;
      if (std::abs(x[i + m] - x[j + m]) <= r) ++a;
    }
  }
  if (a == 0 || b == 0) return std::numeric_limits<double>::infinity();
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

double fuzzyen(std::span<const double> x, const EntropyParams& p) {
  require(p.m >= 1, ErrorKind::Argument, "fuzzyen: m must be >= 1");
  require(p.fuzzy_power >= 1, ErrorKind::Argument, "fuzzyen: fuzzy power must be >= 1");
  const auto m = static_cast<std::size_t>(p.m);
  check_length(x, m + 2, "fuzzyen");
  const double r = tolerance(x, p);
  const std::size_t templates = x.size() - m;

  std::vector<double> mean_m(templates);
  std::vector<double> mean_m1(templates);
  for (std::size_t i = 0; i < templates; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += x[i + k];
    mean_m[i] = s / static_cast<double>(m);
    mean_m1[i] = (s + x[i + m]) / static_cast<double>(m + 1);
  }
  auto membership = [&](double d) {
    if (d == 0.0) return 1.0;
    if (!(r > 0.0)) return 0.0;
    return std::exp(-std::pow(d, p.fuzzy_power) / r);
  };

  double sum_m = 0.0;
  double sum_m1 = 0.0;
  for (std::size_t i = 0; i < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      double d_m = 0.0;
      double d_m1 = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double diff = x[i + k] - x[j + k];
        d_m = std::max(d_m, std::abs(diff - (mean_m[i] - mean_m[j])));
        d_m1 = std::max(d_m1, std::abs(diff - (mean_m1[i] - mean_m1[j])));
      }
      d_m1 = std::max(d_m1, std::abs(x[i + m] - x[j + m] - (mean_m1[i] - mean_m1[j])));
      sum_m += membership(d_m);
      sum_m1 += membership(d_m1);
    }
  }
  // Each unordered pair stands for D_ij and D_ji.
  const double norm = 2.0 / (static_cast<double>(templates) * static_cast<double>(templates - 1));
  return std::log(sum_m * norm) - std::log(sum_m1 * norm);
}

std::size_t ordinal_pattern(std::span<const double> window) {
  const std::size_t n = window.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return window[a] < window[b]; });
  // Lehmer code of the permutation.
  std::size_t index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j) smaller += order[j] < order[i];
    index = index * (n - i) + smaller;
  }
  return index;
}

double permen(std::span<const double> x, const EntropyParams& p) {
  require(p.perm_order >= 2, ErrorKind::Argument, "permen: order must be >= 2");
  const auto order = static_cast<std::size_t>(p.perm_order);
  check_length(x, order + 1, "permen");
  std::size_t factorial = 1;
  for (std::size_t k = 2; k <= order; ++k) factorial *= k;

  const std::size_t windows = x.size() - order + 1;
  std::vector<std::size_t> counts(factorial, 0);
  for (std::size_t t = 0; t < windows; ++t) ++counts[ordinal_pattern(x.subspan(t, order))];
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double prob = static_cast<double>(c) / static_cast<double>(windows);
    h -= prob * std::log(prob);
  }
  if (p.normalize_perm) h /= std::log(static_cast<double>(factorial));
  return h;
}

EntropyRow entropy_row(const std::string& name, const std::vector<sig::Segment>& segments, const EntropyParams& p) {
  if (segments.empty()) throw Error(ErrorKind::Data, "entropy report: segment set '" + name + "' is empty");
  EntropyRow row;
  row.name = name;
  row.segments = segments.size();
  double f = 0, s = 0, a = 0, pe = 0;
  std::size_t finite_sampen = 0;
  for (const auto& seg : segments) {
    f += fuzzyen(seg.samples, p);
    pe += permen(seg.samples, p);
    // A flat segment is perfectly regular; relative tolerance is zero there.
    if (!p.r_is_absolute && tolerance(seg.samples, p) == 0.0) {
      ++finite_sampen;
      continue;
    }
    a += apen(seg.samples, p);
    const double se = sampen(seg.samples, p);
    if (std::isfinite(se)) {
      s += se;
      ++finite_sampen;
    } else {
      ++row.sampen_undefined;
    }
  }
  const double n = static_cast<double>(segments.size());
  row.fuzzyen = f / n;
  row.apen = a / n;
  row.permen = pe / n;
  row.sampen = finite_sampen > 0 ? s / static_cast<double>(finite_sampen) : std::numeric_limits<double>::infinity();
  return row;
}

EntropyReport entropy_report(const std::vector<sig::Segment>& before, const std::vector<sig::Segment>& pass1,
                             const std::vector<sig::Segment>& pass2, const EntropyParams& p) {
  auto keys = [](const std::vector<sig::Segment>& set) {
    std::multiset<sig::SegmentKey> k;
    for (const auto& s : set) k.insert(s.source);
    return k;
  };
  const auto reference = keys(before);
  if (keys(pass1) != reference || keys(pass2) != reference) {
    throw Error(ErrorKind::Data, "entropy report: segment sets are not aligned by source key");
  }
  EntropyReport report;
  report.rows.push_back(entropy_row("Raw Original", before, p));
  report.rows.push_back(entropy_row("Restored (Pass 1)", pass1, p));
  report.rows.push_back(entropy_row("Restored (Pass 2)", pass2, p));
  return report;
}

std::string report_csv(const EntropyReport& report) {
  std::string out = "Data,FuzzyEn,SampEn,ApEn,PermEn,Segments,SampEnUndefined\n";
  for (const auto& row : report.rows) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{},{}\n", row.name, row.fuzzyen, row.sampen, row.apen,
                       row.permen, row.segments, row.sampen_undefined);
  }
  return out;
}

}  // namespace opnn::entropy
