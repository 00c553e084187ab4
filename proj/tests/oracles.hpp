#pragma once

// Reference implementations written straight from the definitions. They
// share nothing with the library beyond the Tensor container.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "opnn/module.hpp"
#include "opnn/selfonn.hpp"

namespace oracle {

using opnn::Tensor;

// ---------------------------------------------------------------------------
// Convolution

/// Plain 1D cross-correlation, weights laid out [out][in][tap].
inline Tensor<double> conv1d(const Tensor<double>& x, const std::vector<double>& w, const std::vector<double>& b,
                             std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t pad,
                             bool depthwise) {
  const std::size_t in = x.channels();
  const std::size_t len = x.length();
  const std::size_t out_len = (len + 2 * pad - kernel) / stride + 1;
  const std::size_t group = depthwise ? 1 : in;
  Tensor<double> y(out_channels, out_len);
  for (std::size_t m = 0; m < out_channels; ++m) {
    for (std::size_t t = 0; t < out_len; ++t) {
      double acc = b[m];
      for (std::size_t c = 0; c < group; ++c) {
        const std::size_t src = depthwise ? m : c;
        for (std::size_t tau = 0; tau < kernel; ++tau) {
          const long pos = static_cast<long>(t * stride + tau) - static_cast<long>(pad);
          if (pos < 0 || pos >= static_cast<long>(len)) continue;
          acc += w[(m * group + c) * kernel + tau] * x(src, static_cast<std::size_t>(pos));
        }
      }
      y(m, t) = acc;
    }
  }
  return y;
}

/// Generative-neuron layer evaluated term by term with std::pow.
inline Tensor<double> selfonn(const Tensor<double>& x, const opnn::SelfOnn1d<double>& layer) {
  const auto& cfg = layer.config();
  const std::size_t len = x.length();
  const std::size_t pad = layer.padding();
  const std::size_t out_len = (len + 2 * pad - cfg.kernel_size) / cfg.stride + 1;
  const std::size_t group = cfg.depthwise ? 1 : cfg.in_channels;
  Tensor<double> y(cfg.out_channels, out_len);
  for (std::size_t m = 0; m < cfg.out_channels; ++m) {
    for (std::size_t t = 0; t < out_len; ++t) {
      double acc = layer.bias()[m];
      for (std::size_t c = 0; c < group; ++c) {
        const std::size_t src = cfg.depthwise ? m : c;
        for (std::size_t k = 0; k < cfg.q; ++k) {
          for (std::size_t tau = 0; tau < cfg.kernel_size; ++tau) {
            const long pos = static_cast<long>(t * cfg.stride + tau) - static_cast<long>(pad);
            if (pos < 0 || pos >= static_cast<long>(len)) continue;
            const double w = layer.weights()[((m * group + c) * cfg.q + k) * cfg.kernel_size + tau];
            acc += w * std::pow(x(src, static_cast<std::size_t>(pos)), static_cast<double>(k + 1));
          }
        }
      }
      y(m, t) = acc;
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Finite differences

inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
  double worst = 0;
  std::size_t checked = 0;
};

/// Compares a module's backward pass with central differences of the scalar
/// L = sum(upstream * forward(x)) with respect to every input element and
/// every trainable parameter element.
inline GradCheck check_gradients(opnn::Module<double>& module, opnn::Batch<double> input,
                                 const opnn::Batch<double>& upstream, opnn::Mode mode, double step = 1e-4) {
  auto objective = [&](const opnn::Batch<double>& x) {
    opnn::Pass pass(mode, false);
    const auto y = module.forward(x, pass);
    double s = 0;
    for (std::size_t b = 0; b < y.size(); ++b) {
      for (std::size_t i = 0; i < y[b].size(); ++i) s += y[b].values()[i] * upstream[b].values()[i];
    }
    return s;
  };

  module.zero_grad();
  opnn::Pass pass(mode);
  module.forward(input, pass);
  const auto grad_in = module.backward(upstream, pass);

  GradCheck result;
  auto record = [&](double analytic, double numeric) {
    result.worst = std::max(result.worst, relative_error(analytic, numeric));
    ++result.checked;
  };
  for (std::size_t b = 0; b < input.size(); ++b) {
    for (std::size_t i = 0; i < input[b].size(); ++i) {
      double& v = input[b].values()[i];
      const double saved = v;
      v = saved + step;
      const double plus = objective(input);
      v = saved - step;
      const double minus = objective(input);
      v = saved;
      record(grad_in[b].values()[i], (plus - minus) / (2 * step));
    }
  }
  for (auto* p : module.trainable_parameters()) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + step;
      const double plus = objective(input);
      p->value[i] = saved - step;
      const double minus = objective(input);
      p->value[i] = saved;
      record(p->grad[i], (plus - minus) / (2 * step));
    }
  }
  return result;
}

inline opnn::Batch<double> random_batch(std::mt19937_64& rng, std::size_t batch, std::size_t channels,
                                        std::size_t length, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  opnn::Batch<double> out;
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor<double> t(channels, length);
    for (auto& v : t.values()) v = u(rng);
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entropies, each from its textbook definition with explicit templates

using Series = std::vector<double>;

inline double sd(const Series& x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0;
  for (double v : x) s += (v - mean) * (v - mean);
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline std::vector<Series> templates(const Series& x, std::size_t m, std::size_t count) {
  std::vector<Series> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(x.begin() + static_cast<long>(i), x.begin() + static_cast<long>(i + m));
  return out;
}

inline double chebyshev(const Series& a, const Series& b) {
  double d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

inline double apen(const Series& x, std::size_t m, double r) {
  const std::size_t n = x.size();
  auto phi = [&](std::size_t len) {
    const auto t = templates(x, len, n - len + 1);
    double s = 0;
    for (const auto& a : t) {
      std::size_t c = 0;
      for (const auto& b : t) c += chebyshev(a, b) <= r;
      s += std::log(static_cast<double>(c) / static_cast<double>(t.size()));
    }
    return s / static_cast<double>(t.size());
  };
  return phi(m) - phi(m + 1);
}

inline double sampen(const Series& x, std::size_t m, double r) {
  const std::size_t n = x.size();
  auto matches = [&](std::size_t len) {
    const auto t = templates(x, len, n - m);
    double c = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (i != j && chebyshev(t[i], t[j]) <= r) c += 1;
      }
    }
    return c;
  };
  const double b = matches(m);
  const double a = matches(m + 1);
  if (a == 0 || b == 0) return std::numeric_limits<double>::infinity();
  return -std::log(a / b);
}

inline double fuzzyen(const Series& x, std::size_t m, double r, int power) {
  const std::size_t n = x.size();
  auto phi = [&](std::size_t len) {
    auto t = templates(x, len, n - m);
    for (auto& v : t) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(len);
      for (double& e : v) e -= mean;
    }
    double s = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double row = 0;
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (i == j) continue;
        row += std::exp(-std::pow(chebyshev(t[i], t[j]), power) / r);
      }
      s += row / static_cast<double>(t.size() - 1);
    }
    return s / static_cast<double>(t.size());
  };
  return std::log(phi(m)) - std::log(phi(m + 1));
}

inline double permen(const Series& x, std::size_t order, bool normalize) {
  std::map<std::vector<std::size_t>, double> counts;
  const std::size_t windows = x.size() - order + 1;
  for (std::size_t t = 0; t < windows; ++t) {
    std::vector<std::size_t> rank(order);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return x[t + a] < x[t + b]; });
    counts[rank] += 1;
  }
  double h = 0;
  for (const auto& [pattern, c] : counts) {
    const double p = c / static_cast<double>(windows);
    h -= p * std::log(p);
  }
  if (normalize) {
    double f = 1;
    for (std::size_t k = 2; k <= order; ++k) f *= static_cast<double>(k);
    h /= std::log(f);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Ranking

/// Fraction of (positive, negative) pairs ranked correctly, ties half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace oracle
