#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "opnn/error.hpp"
#include "opnn/sigproc.hpp"

namespace opnn::sig {

std::string to_string(Modality m) { return m == Modality::ECG ? "ECG" : "PPG"; }

std::string to_string(Label l) {
  switch (l) {
    case Label::AF: return "AF";
    case Label::NonAF: return "NonAF";
    case Label::Unlabeled: return "Unlabeled";
  }
  return "Unlabeled";
}

std::string to_string(Quality q) {
  switch (q) {
    case Quality::Unassessed: return "Unassessed";
    case Quality::Acceptable: return "Acceptable";
    case Quality::Corrupted: return "Corrupted";
  }
  return "Unassessed";
}

Modality parse_modality(const std::string& s) {
  if (s == "ECG" || s == "ecg") return Modality::ECG;
  if (s == "PPG" || s == "ppg") return Modality::PPG;
  throw Error(ErrorKind::Data, "unknown modality '" + s + "'");
}

Label parse_label(const std::string& s) {
  if (s == "AF") return Label::AF;
  if (s == "NonAF" || s == "Non-AF") return Label::NonAF;
  if (s == "Unlabeled") return Label::Unlabeled;
  throw Error(ErrorKind::Data, "unknown label '" + s + "'");
}

Quality parse_quality(const std::string& s) {
  if (s == "Acceptable") return Quality::Acceptable;
  if (s == "Corrupted") return Quality::Corrupted;
  if (s == "Unassessed") return Quality::Unassessed;
  throw Error(ErrorKind::Data, "unknown quality '" + s + "'");
}

std::vector<double> moving_minimum(std::span<const double> x, std::size_t window) {
  require(window >= 1, ErrorKind::Argument, "moving_minimum: window must be positive");
  const std::size_t n = x.size();
  const std::size_t before = window / 2;
  const std::size_t after = window - 1 - before;
  std::vector<double> out(n);
  std::deque<std::size_t> q;  // indices with increasing values
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + after);
    while (next <= hi) {
      while (!q.empty() && x[q.back()] >= x[next]) q.pop_back();
      q.push_back(next++);
    }
    const std::size_t lo = i >= before ? i - before : 0;
    while (q.front() < lo) q.pop_front();
    out[i] = x[q.front()];
  }
  return out;
}

std::vector<double> baseline_correct(std::span<const double> signal, double fs, double window_s, int poly_order) {
  require(poly_order >= 1, ErrorKind::Argument, "baseline_correct: polynomial order must be >= 1");
  const auto window = static_cast<std::size_t>(std::llround(window_s * fs));
  require(window >= 3, ErrorKind::Argument, "baseline_correct: window must cover at least 3 samples");
  const std::size_t n = signal.size();
  const auto coeffs = static_cast<std::size_t>(poly_order) + 1;
  if (n < coeffs) {
    throw Error(ErrorKind::Numeric, "baseline_correct: " + std::to_string(n) + " samples cannot determine a degree-" +
                                        std::to_string(poly_order) + " polynomial");
  }

  const auto minima = moving_minimum(signal, window);
  auto time = [n](std::size_t i) {
    return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
  };

  // Fit on samples whose window is complete; truncated edge windows are
  // biased upward on a slope. Fall back to all samples on short inputs.
  const std::size_t before = window / 2;
  const std::size_t after = window - 1 - before;
  std::size_t first = before;
  std::size_t last = n > after ? n - after : 0;
  if (last <= first || last - first < coeffs) {
    first = 0;
    last = n;
  }

  const auto rows = static_cast<Eigen::Index>(last - first);
  Eigen::MatrixXd vander(rows, static_cast<Eigen::Index>(coeffs));
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t i = first + static_cast<std::size_t>(r);
    double p = 1.0;
    for (std::size_t k = 0; k < coeffs; ++k) {
      vander(r, static_cast<Eigen::Index>(k)) = p;
      p *= time(i);
    }
    rhs(r) = minima[i];
  }
  const Eigen::VectorXd beta = vander.colPivHouseholderQr().solve(rhs);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = coeffs; k-- > 0;) acc = acc * time(i) + beta(static_cast<Eigen::Index>(k));
    out[i] = signal[i] - acc;
  }
  return out;
}

std::vector<double> normalize(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);
  double sq = 0.0;
  for (double v : signal) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(n));
  if (!(sd > 0.0)) return std::vector<double>(n, 0.5);

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (signal[i] - mean) / sd;
  const auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) return std::vector<double>(n, 0.5);
  for (double& v : z) v = (v - lo) / range;
  return z;
}

std::vector<Segment> segment_split(const RawRecording& rec, double window_s) {
  if (std::abs(rec.sample_rate_hz - kSegmentRateHz) > 1e-9) {
    throw Error(ErrorKind::Argument, "segment_split: recording must be at 250 Hz, got " +
                                         std::to_string(rec.sample_rate_hz));
  }
  require(window_s > 0, ErrorKind::Argument, "segment_split: window must be positive");
  const auto length = static_cast<std::size_t>(std::llround(window_s * rec.sample_rate_hz));
  std::vector<Segment> out;
  const std::size_t count = rec.samples.size() / length;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Segment s;
    const auto begin = rec.samples.begin() + static_cast<std::ptrdiff_t>(w * length);
    s.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(length));
    s.sample_rate_hz = rec.sample_rate_hz;
    s.modality = rec.modality;
    s.source = SegmentKey{rec.subject_id, w};
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Segment> preprocess_recording(const RawRecording& rec, const PreprocessConfig& config) {
  RawRecording r = resample(rec, config.target_hz);
  const bool ecg = rec.modality == Modality::ECG;
  const double low = ecg ? config.ecg_low_hz : config.ppg_low_hz;
  const double high = ecg ? config.ecg_high_hz : config.ppg_high_hz;
  if (!r.samples.empty()) r.samples = bandpass_filter(r.samples, r.sample_rate_hz, low, high, config.filter_order);
  auto segments = segment_split(r, config.window_s);
  for (auto& s : segments) {
    s.samples = normalize(baseline_correct(s.samples, s.sample_rate_hz, config.baseline_window_s,
                                           config.baseline_poly_order));
  }
  return segments;
}

}  // namespace opnn::sig
