#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "opnn/sigproc.hpp"

namespace opnn::synth {

/// Beat-to-beat interval variability is expressed as the coefficient of
/// variation of the inter-pulse intervals.
struct PulseTrainConfig {
  double fs = sig::kSegmentRateHz;
  std::size_t length = sig::kSegmentLength;
  double min_rate_bpm = 60.0;
  double max_rate_bpm = 100.0;
  double jitter = 0.01;
  double noise_sd = 0.01;
};

/// Beat onsets from `start_s` up to `end_s` with normally distributed
/// interval deviations (clipped at 2.5 sd, intervals at least 0.3 s).
std::vector<double> beat_times(std::mt19937_64& rng, double start_s, double end_s, double rate_bpm, double jitter);

/// Sums one PPG pulse (systolic + dicrotic Gaussian) per beat, each with a
/// random amplitude in [0.95, 1.05], plus Gaussian noise.
std::vector<double> render_ppg(const std::vector<double>& beats, double fs, std::size_t length, double noise_sd,
                               std::mt19937_64& rng);

/// P, QRS and T Gaussians per beat plus Gaussian noise.
std::vector<double> render_ecg(const std::vector<double>& beats, double fs, std::size_t length, double noise_sd,
                               std::mt19937_64& rng);

/// Two-Gaussian PPG-like pulses (systolic + dicrotic) at a random phase.
std::vector<double> pulse_train(std::mt19937_64& rng, const PulseTrainConfig& config = {});

/// Regular rhythm: interval CV drawn from [0.005, 0.02).
std::vector<double> regular_train(std::mt19937_64& rng);
/// Irregular rhythm: interval CV drawn from [0.15, 0.35]. Same morphology,
/// rate range and amplitudes as the regular trains.
std::vector<double> irregular_train(std::mt19937_64& rng);

struct CorruptionConfig {
  double drift_amplitude = 0.6;
  std::size_t max_dropouts = 3;
  double noise_sd = 0.15;
};

/// Slow baseline drift, flat dropouts and broadband Gaussian noise.
std::vector<double> corrupt(std::span<const double> clean, std::mt19937_64& rng, const CorruptionConfig& config = {});

std::vector<double> white_noise(std::mt19937_64& rng, std::size_t length = sig::kSegmentLength);

/// Normalized 2500-sample segments: irregular trains labelled AF, regular
/// ones NonAF, alternating so the classes are balanced.
std::vector<sig::Segment> rhythm_corpus(std::size_t count, std::uint64_t seed);

/// Normalized pulse trains (Acceptable) and white noise (Corrupted),
/// alternating.
std::vector<sig::Segment> quality_corpus(std::size_t count, std::uint64_t seed);

/// Clean trains and independently drawn corrupted trains, both normalized
/// and tagged Acceptable (they passed the gate; only their quality differs).
struct RestorationCorpus {
  std::vector<sig::Segment> clean;
  std::vector<sig::Segment> corrupted;
};
RestorationCorpus restoration_corpus(std::size_t per_domain, std::uint64_t seed);

}  // namespace opnn::synth
