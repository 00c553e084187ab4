#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "opnn/error.hpp"
#include "opnn/sigproc.hpp"

namespace opnn::sig {

namespace {

using cplx = std::complex<double>;

cplx section_response(const Biquad& s, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

/// Steady-state DF2T state of one section for a unit step input.
std::pair<double, double> step_state(const Biquad& s) {
  const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  const double z1 = s.b2 - s.a2 * dc;
  const double z0 = s.b1 - s.a1 * dc + z1;
  return {z0, z1};
}

std::vector<double> run_sos(std::span<const Biquad> sos, std::span<const double> x,
                            std::vector<std::pair<double, double>> state) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    auto [z0, z1] = state[k];
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z0;
      z0 = s.b1 * in - s.a1 * out + z1;
      z1 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

/// Per-section initial state proportional to the first sample, with each
/// section's state scaled by the DC gain of the sections before it.
std::vector<std::pair<double, double>> initial_state(std::span<const Biquad> sos, double x0) {
  std::vector<std::pair<double, double>> zi;
  double scale = x0;
  for (const auto& s : sos) {
    const auto [z0, z1] = step_state(s);
    zi.emplace_back(z0 * scale, z1 * scale);
    scale *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  }
  return zi;
}

double odd_extended(std::span<const double> x, std::ptrdiff_t i) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (i < 0) {
    const auto mirror = std::min(-i, n - 1);
    return 2.0 * x[0] - x[static_cast<std::size_t>(mirror)];
  }
  if (i >= n) {
    const auto mirror = std::max<std::ptrdiff_t>(2 * (n - 1) - i, 0);
    return 2.0 * x[static_cast<std::size_t>(n - 1)] - x[static_cast<std::size_t>(mirror)];
  }
  return x[static_cast<std::size_t>(i)];
}

}  // namespace

std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  require(order >= 1, ErrorKind::Argument, "butterworth_bandpass: order must be >= 1");
  if (!(fs > 0) || !(low_hz > 0) || !(low_hz < high_hz) || !(high_hz < fs / 2)) {
    throw Error(ErrorKind::Argument, "butterworth_bandpass: need 0 < low < high < fs/2, got low=" +
                                         std::to_string(low_hz) + " high=" + std::to_string(high_hz) +
                                         " fs=" + std::to_string(fs));
  }
  const double pi = std::numbers::pi;
  const double w1 = 2.0 * fs * std::tan(pi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(pi * high_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Analog prototype poles -> band-pass poles -> bilinear transform.
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const cplx p = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cplx a = p * bw / 2.0;
    const cplx d = std::sqrt(a * a - w0sq);
    for (const cplx s : {a + d, a - d}) poles.push_back((2.0 * fs + s) / (2.0 * fs - s));
  }

  std::vector<cplx> upper;
  std::vector<double> real;
  for (const auto& z : poles) {
    if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z))) {
      if (z.imag() > 0) upper.push_back(z);
    } else {
      real.push_back(z.real());
    }
  }
  std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
  std::sort(real.begin(), real.end());

  std::vector<Biquad> sos;
  for (const auto& z : upper) sos.push_back(Biquad{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    sos.push_back(Biquad{1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  }
  if (sos.size() != static_cast<std::size_t>(order)) {
    throw Error(ErrorKind::Numeric, "butterworth_bandpass: pole pairing failed");
  }

  // Unit magnitude at the digital image of the analog centre frequency.
  const double centre = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  for (auto& s : sos) {
    const double g = 1.0 / std::abs(section_response(s, centre));
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return sos;
}

double sos_magnitude(std::span<const Biquad> sos, double freq_hz, double fs) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
  cplx h = 1.0;
  for (const auto& s : sos) h *= section_response(s, omega);
  return std::abs(h);
}

std::vector<double> sos_filter(std::span<const Biquad> sos, std::span<const double> x) {
  return run_sos(sos, x, std::vector<std::pair<double, double>>(sos.size(), {0.0, 0.0}));
}

std::vector<double> sos_filtfilt(std::span<const Biquad> sos, std::span<const double> x) {
  if (x.empty()) return {};
  const std::size_t n = x.size();
  const std::size_t padlen = std::min<std::size_t>(3 * (2 * sos.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i > 0; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto y = run_sos(sos, ext, initial_state(sos, ext.front()));
  std::reverse(y.begin(), y.end());
  y = run_sos(sos, y, initial_state(sos, y.front()));
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(padlen), y.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

std::vector<double> bandpass_filter(std::span<const double> signal, double fs, double low_hz, double high_hz,
                                    int order) {
  const auto sos = butterworth_bandpass(order, low_hz, high_hz, fs);
  return sos_filtfilt(sos, signal);
}

std::vector<double> lowpass_fir(std::size_t taps, double cutoff_hz, double fs) {
  require(taps % 2 == 1, ErrorKind::Argument, "lowpass_fir: tap count must be odd");
  require(cutoff_hz > 0 && cutoff_hz < fs / 2, ErrorKind::Argument, "lowpass_fir: cutoff outside (0, fs/2)");
  const double pi = std::numbers::pi;
  const double fc = cutoff_hz / fs;
  const auto half = static_cast<double>(taps / 2);
  std::vector<double> h(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    const double n = static_cast<double>(i) - half;
    const double sinc = n == 0.0 ? 2.0 * fc : std::sin(2.0 * pi * fc * n) / (pi * n);
    const double window = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(taps - 1));
    h[i] = sinc * window;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

RawRecording resample(const RawRecording& rec, double target_hz) {
  const double source = rec.sample_rate_hz;
  const auto src_int = std::llround(source);
  const auto dst_int = std::llround(target_hz);
  if (std::abs(source - static_cast<double>(src_int)) > 1e-9 ||
      std::abs(target_hz - static_cast<double>(dst_int)) > 1e-9 || src_int <= 0 || dst_int <= 0) {
    throw Error(ErrorKind::Argument, "resample: rates must be positive integers, got " + std::to_string(source) +
                                         " -> " + std::to_string(target_hz));
  }
  const auto g = std::gcd(src_int, dst_int);
  const auto up = static_cast<std::size_t>(dst_int / g);
  const auto down = static_cast<std::size_t>(src_int / g);
  constexpr std::size_t kMaxFactor = 8;
  if (up > kMaxFactor || down > kMaxFactor) {
    throw Error(ErrorKind::Argument, "resample: unsupported ratio " + std::to_string(up) + "/" +
                                         std::to_string(down) + " (" + std::to_string(source) + " Hz -> " +
                                         std::to_string(target_hz) + " Hz)");
  }

  RawRecording out = rec;
  out.sample_rate_hz = target_hz;
  if (up == 1 && down == 1) return out;
  if (rec.samples.empty()) {
    out.samples.clear();
    return out;
  }

  const double rate = source * static_cast<double>(up);
  const double cutoff = 0.45 * std::min(source, target_hz) / 2.0;
  const std::size_t half = 16 * std::max(up, down);
  auto h = lowpass_fir(2 * half + 1, cutoff, rate);
  // Each polyphase branch sums to exactly 1/up so DC passes unchanged.
  for (std::size_t phase = 0; phase < up; ++phase) {
    double sum = 0.0;
    for (std::size_t k = phase; k < h.size(); k += up) sum += h[k];
    for (std::size_t k = phase; k < h.size(); k += up) h[k] *= 1.0 / (static_cast<double>(up) * sum);
  }

  const std::span<const double> x(rec.samples);
  const std::size_t n_up = x.size() * up;
  const std::size_t n_out = (n_up + down - 1) / down;
  out.samples.assign(n_out, 0.0);
  const auto upf = static_cast<std::ptrdiff_t>(up);
  for (std::size_t j = 0; j < n_out; ++j) {
    const auto centre = static_cast<std::ptrdiff_t>(j * down);
    double acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const std::ptrdiff_t v = centre + static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(half);
      // Only every up-th sample of the zero-stuffed stream is non-zero.
      const std::ptrdiff_t r = ((v % upf) + upf) % upf;
      if (r != 0) continue;
      acc += h[k] * odd_extended(x, (v - r) / upf);
    }
    out.samples[j] = static_cast<double>(up) * acc;
  }
  return out;
}

}  // namespace opnn::sig
