#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace opnn::sig {

inline constexpr double kSegmentRateHz = 250.0;
inline constexpr std::size_t kSegmentLength = 2500;

enum class Modality { ECG, PPG };
enum class Label { AF, NonAF, Unlabeled };
enum class Quality { Unassessed, Acceptable, Corrupted };

std::string to_string(Modality m);
std::string to_string(Label l);
std::string to_string(Quality q);
Modality parse_modality(const std::string& s);
Label parse_label(const std::string& s);
Quality parse_quality(const std::string& s);

struct RawRecording {
  std::vector<double> samples;
  double sample_rate_hz = kSegmentRateHz;
  Modality modality = Modality::PPG;
  std::string subject_id;
  double start_time_s = 0.0;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// Identifies a 10 s window; ECG and PPG windows of the same subject and
/// index are a pair.
struct SegmentKey {
  std::string subject_id;
  std::size_t window = 0;

  auto operator<=>(const SegmentKey&) const = default;
};

struct Segment {
  std::vector<double> samples;
  double sample_rate_hz = kSegmentRateHz;
  Modality modality = Modality::PPG;
  Label label = Label::Unlabeled;
  Quality quality = Quality::Unassessed;
  SegmentKey source;
  /// Test split the segment belongs to (1 or 2); 0 when unassigned.
  int split = 0;
};

// ---------------------------------------------------------------------------
// Filters

/// Second-order section, a0 normalised to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

/// Digital Butterworth band-pass (bilinear transform with pre-warping) as a
/// cascade of `order` second-order sections, scaled to unit gain at the
/// centre of the band.
std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

/// Complex frequency response magnitude of an SOS cascade.
double sos_magnitude(std::span<const Biquad> sos, double freq_hz, double fs);

/// Single forward pass (direct form II transposed), zero initial state.
std::vector<double> sos_filter(std::span<const Biquad> sos, std::span<const double> x);

/// Forward-backward filtering with odd-extension padding and steady-state
/// initial conditions; zero phase, squared magnitude response.
std::vector<double> sos_filtfilt(std::span<const Biquad> sos, std::span<const double> x);

/// Zero-phase band-pass with a 4th-order Butterworth prototype.
std::vector<double> bandpass_filter(std::span<const double> signal, double fs, double low_hz, double high_hz,
                                    int order = 4);

/// Hamming-windowed sinc low-pass with unit DC gain.
std::vector<double> lowpass_fir(std::size_t taps, double cutoff_hz, double fs);

/// Rational-ratio resampling. Anti-alias / interpolation low-pass at 0.45 x
/// the Nyquist frequency of the lower of the two rates.
RawRecording resample(const RawRecording& rec, double target_hz);

// ---------------------------------------------------------------------------
// Baseline, normalisation, windowing

/// Centred moving minimum; the window is truncated at the edges. Even
/// windows cover [i - w/2, i + w/2 - 1].
std::vector<double> moving_minimum(std::span<const double> x, std::size_t window);

/// Moving minimum -> least-squares polynomial -> evaluate -> subtract.
std::vector<double> baseline_correct(std::span<const double> signal, double fs, double window_s = 1.0,
                                     int poly_order = 6);

/// z-score followed by min-max scaling to [0, 1]. Constant input -> 0.5.
std::vector<double> normalize(std::span<const double> signal);

/// Non-overlapping windows of round(window_s * 250) samples; the remainder is
/// dropped. The recording must already be at 250 Hz.
std::vector<Segment> segment_split(const RawRecording& rec, double window_s = 10.0);

struct PreprocessConfig {
  double target_hz = kSegmentRateHz;
  double window_s = 10.0;
  double baseline_window_s = 1.0;
  int baseline_poly_order = 6;
  int filter_order = 4;
  double ecg_low_hz = 0.05;
  double ecg_high_hz = 100.0;
  double ppg_low_hz = 0.5;
  double ppg_high_hz = 25.0;
};

/// resample -> band-pass on the whole recording, then per window:
/// baseline correction -> normalisation.
std::vector<Segment> preprocess_recording(const RawRecording& rec, const PreprocessConfig& config = {});

}  // namespace opnn::sig
