#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "opnn/sigproc.hpp"

namespace opnn::entropy {

struct EntropyParams {
  /// Embedding dimension.
  int m = 2;
  /// Tolerance; a multiple of the sequence's population SD unless
  /// `r_is_absolute` is set.
  double r = 0.1;
  bool r_is_absolute = false;
  /// Exponent n of the fuzzy membership exp(-d^n / r).
  int fuzzy_power = 2;
  int perm_order = 3;
  bool normalize_perm = true;
};

/// The absolute tolerance used for `x`.
double tolerance(std::span<const double> x, const EntropyParams& p);

/// Approximate entropy, phi^m(r) - phi^{m+1}(r), self-matches counted.
double apen(std::span<const double> x, const EntropyParams& p = {});

/// Sample entropy, -ln(A / B), self-matches excluded. Returns +infinity when
/// either match count is zero.
double sampen(std::span<const double> x, const EntropyParams& p = {});

/// Fuzzy entropy with mean-removed templates and exponential membership.
double fuzzyen(std::span<const double> x, const EntropyParams& p = {});

/// Shannon entropy of ordinal patterns (ties: earlier index ranks lower),
/// optionally divided by ln(order!).
double permen(std::span<const double> x, const EntropyParams& p = {});

/// Ordinal pattern index in [0, order!) of `window`.
std::size_t ordinal_pattern(std::span<const double> window);

struct EntropyRow {
  std::string name;
  double fuzzyen = 0;
  double sampen = 0;
  double apen = 0;
  double permen = 0;
  std::size_t segments = 0;
  /// Segments whose SampEn was undefined (+infinity) and left out of the mean.
  std::size_t sampen_undefined = 0;
};

struct EntropyReport {
  std::vector<EntropyRow> rows;
};

EntropyRow entropy_row(const std::string& name, const std::vector<sig::Segment>& segments, const EntropyParams& p);

/// Mean entropies for the raw / pass-1 / pass-2 sets, which must cover the
/// same source keys.
EntropyReport entropy_report(const std::vector<sig::Segment>& before, const std::vector<sig::Segment>& pass1,
                             const std::vector<sig::Segment>& pass2, const EntropyParams& p = {});

/// Header: Data,FuzzyEn,SampEn,ApEn,PermEn,Segments,SampEnUndefined
std::string report_csv(const EntropyReport& report);

}  // namespace opnn::entropy
