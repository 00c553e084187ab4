#include "opnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace opnn::synth {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

sig::Segment make_segment(std::vector<double> samples, std::size_t index, const char* subject) {
  sig::Segment s;
  s.samples = sig::normalize(samples);
  s.modality = sig::Modality::PPG;
  s.source = sig::SegmentKey{subject, index};
  return s;
}

}  // namespace

std::vector<double> beat_times(std::mt19937_64& rng, double start_s, double end_s, double rate_bpm, double jitter) {
  const double mean_interval = 60.0 / rate_bpm;
  std::normal_distribution<double> deviation(0.0, jitter);
  std::vector<double> beats;
  for (double t = start_s; t < end_s;) {
    beats.push_back(t);
    const double d = jitter > 0 ? std::clamp(deviation(rng), -2.5 * jitter, 2.5 * jitter) : 0.0;
    t += std::max(0.3, mean_interval * (1.0 + d));
  }
  return beats;
}

std::vector<double> render_ppg(const std::vector<double>& beats, double fs, std::size_t length, double noise_sd,
                               std::mt19937_64& rng) {
  std::vector<double> amplitude(beats.size());
  for (auto& a : amplitude) a = uniform(rng, 0.95, 1.05);
  std::normal_distribution<double> noise(0.0, noise_sd);
  std::vector<double> out(length);
  std::size_t first = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const double time = static_cast<double>(i) / fs;
    while (first < beats.size() && beats[first] < time - 1.0) ++first;
    double v = 0.0;
    for (std::size_t b = first; b < beats.size() && beats[b] <= time + 0.5; ++b) {
      const double dt = time - beats[b];
      const double sys = (dt - 0.15) / 0.05;
      const double dia = (dt - 0.40) / 0.08;
      v += amplitude[b] * (std::exp(-0.5 * sys * sys) + 0.4 * std::exp(-0.5 * dia * dia));
    }
    out[i] = v + noise(rng);
  }
  return out;
}

std::vector<double> render_ecg(const std::vector<double>& beats, double fs, std::size_t length, double noise_sd,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, noise_sd);
  std::vector<double> out(length);
  std::size_t first = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const double time = static_cast<double>(i) / fs;
    while (first < beats.size() && beats[first] < time - 1.0) ++first;
    double v = 0.0;
    for (std::size_t b = first; b < beats.size() && beats[b] <= time + 0.5; ++b) {
      const double dt = time - beats[b];
      const double p = (dt + 0.16) / 0.025;
      const double qrs = dt / 0.012;
      const double t = (dt - 0.28) / 0.045;
      v += 0.15 * std::exp(-0.5 * p * p) + std::exp(-0.5 * qrs * qrs) + 0.3 * std::exp(-0.5 * t * t);
    }
    out[i] = v + noise(rng);
  }
  return out;
}

std::vector<double> pulse_train(std::mt19937_64& rng, const PulseTrainConfig& config) {
  const double rate = uniform(rng, config.min_rate_bpm, config.max_rate_bpm);
  const double duration = static_cast<double>(config.length) / config.fs;
  // Start up to one interval before the window so the first pulse can be partial.
  const double start = -uniform(rng, 0.0, 60.0 / rate);
  const auto beats = beat_times(rng, start, duration + 0.5, rate, config.jitter);
  return render_ppg(beats, config.fs, config.length, config.noise_sd, rng);
}

std::vector<double> regular_train(std::mt19937_64& rng) {
  PulseTrainConfig c;
  c.jitter = uniform(rng, 0.005, 0.02);
  return pulse_train(rng, c);
}

std::vector<double> irregular_train(std::mt19937_64& rng) {
  PulseTrainConfig c;
  c.jitter = uniform(rng, 0.15, 0.35);
  return pulse_train(rng, c);
}

std::vector<double> corrupt(std::span<const double> clean, std::mt19937_64& rng, const CorruptionConfig& config) {
  const std::size_t n = clean.size();
  std::vector<double> out(clean.begin(), clean.end());
  const double pi = std::numbers::pi;

  const double f1 = uniform(rng, 0.05, 0.3);
  const double f2 = uniform(rng, 0.3, 0.8);
  const double p1 = uniform(rng, 0.0, 2 * pi);
  const double p2 = uniform(rng, 0.0, 2 * pi);
  const double fs = sig::kSegmentRateHz;
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / fs;
    out[i] += config.drift_amplitude * (std::sin(2 * pi * f1 * time + p1) + 0.5 * std::sin(2 * pi * f2 * time + p2));
  }

  const auto dropouts = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, config.max_dropouts))(rng);
  for (std::size_t d = 0; d < dropouts && n > 0; ++d) {
    const auto width = static_cast<std::size_t>(uniform(rng, 0.2, 0.8) * fs);
    const auto start = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const double level = out[start];
    for (std::size_t i = start; i < std::min(n, start + width); ++i) out[i] = level;
  }

  std::normal_distribution<double> noise(0.0, config.noise_sd);
  for (auto& v : out) v += noise(rng);
  return out;
}

std::vector<double> white_noise(std::mt19937_64& rng, std::size_t length) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> out(length);
  for (auto& v : out) v = noise(rng);
  return out;
}

std::vector<sig::Segment> rhythm_corpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<sig::Segment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const bool af = i % 2 == 1;
    auto s = make_segment(af ? irregular_train(rng) : regular_train(rng), i, "synthetic-rhythm");
    s.label = af ? sig::Label::AF : sig::Label::NonAF;
    s.quality = sig::Quality::Acceptable;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<sig::Segment> quality_corpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<sig::Segment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const bool bad = i % 2 == 1;
    std::vector<double> x;
    if (bad) {
      x = white_noise(rng);
    } else {
      x = uniform(rng, 0.0, 1.0) < 0.5 ? regular_train(rng) : irregular_train(rng);
    }
    auto s = make_segment(std::move(x), i, "synthetic-quality");
    s.quality = bad ? sig::Quality::Corrupted : sig::Quality::Acceptable;
    out.push_back(std::move(s));
  }
  return out;
}

RestorationCorpus restoration_corpus(std::size_t per_domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RestorationCorpus corpus;
  for (std::size_t i = 0; i < per_domain; ++i) {
    auto clean = make_segment(regular_train(rng), i, "synthetic-clean");
    clean.quality = sig::Quality::Acceptable;
    corpus.clean.push_back(std::move(clean));

    const auto base = regular_train(rng);
    auto bad = make_segment(corrupt(base, rng), i, "synthetic-corrupted");
    bad.quality = sig::Quality::Acceptable;
    corpus.corrupted.push_back(std::move(bad));
  }
  return corpus;
}

}  // namespace opnn::synth
