#include "opnn/selfonn.hpp"

#include <cmath>
#include <numeric>

namespace opnn {

namespace {

/// Double-precision dot product with a fixed lane split so the compiler can
/// vectorise it while the summation order stays independent of the target.
template <typename T>
double dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  double lanes[kLanes] = {};
  std::size_t t = 0;
  for (; t + kLanes <= n; t += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] += static_cast<double>(a[t + l]) * static_cast<double>(b[t + l]);
  }
  double acc = 0.0;
  for (; t < n; ++t) acc += static_cast<double>(a[t]) * static_cast<double>(b[t]);
  for (double v : lanes) acc += v;
  return acc;
}

template <typename T>
double sum(const T* a, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  double lanes[kLanes] = {};
  std::size_t t = 0;
  for (; t + kLanes <= n; t += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] += static_cast<double>(a[t + l]);
  }
  double acc = 0.0;
  for (; t < n; ++t) acc += static_cast<double>(a[t]);
  for (double v : lanes) acc += v;
  return acc;
}

}  // namespace

template <typename T>
SelfOnn1d<T>::SelfOnn1d(const SelfOnnConfig& config) : config_(config) {
  require(config.in_channels > 0 && config.out_channels > 0, ErrorKind::Argument,
          "SelfOnn1d: channel counts must be positive");
  require(config.kernel_size > 0, ErrorKind::Argument, "SelfOnn1d: kernel_size must be positive");
  require(config.q > 0, ErrorKind::Argument, "SelfOnn1d: q must be >= 1");
  require(config.stride > 0, ErrorKind::Argument, "SelfOnn1d: stride must be positive");
  if (config.depthwise && config.in_channels != config.out_channels) {
    throw ShapeError("out_channels (depthwise)", config.in_channels, config.out_channels, "SelfOnn1d");
  }
  padding_ = config.padding.value_or((config.kernel_size - 1) / 2);
  weights_ = Parameter<T>("weight", config.out_channels * in_per_group() * config.q * config.kernel_size);
  bias_ = Parameter<T>("bias", config.out_channels);
}

template <typename T>
void SelfOnn1d<T>::initialize(std::mt19937_64& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_per_group() * config_.kernel_size * config_.q));
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& w : weights_.value) w = static_cast<T>(dist(rng));
  for (auto& b : bias_.value) b = static_cast<T>(dist(rng));
}

template <typename T>
std::size_t SelfOnn1d<T>::output_length(std::size_t input_length) const {
  const std::size_t padded = input_length + 2 * padding_;
  if (padded < config_.kernel_size) {
    throw ShapeError("padded length >=", config_.kernel_size, padded, "SelfOnn1d");
  }
  return (padded - config_.kernel_size) / config_.stride + 1;
}

template <typename T>
typename SelfOnn1d<T>::Powers SelfOnn1d<T>::powers(const Tensor<T>& input) const {
  if (input.channels() != config_.in_channels) {
    throw ShapeError("input channels", config_.in_channels, input.channels(), "SelfOnn1d");
  }
  const std::size_t q = config_.q;
  const std::size_t s = config_.stride;
  Powers p;
  p.input_length = input.length();
  p.phase_length = (input.length() + 2 * padding_ + s - 1) / s;
  p.data.assign(config_.in_channels * q * s * p.phase_length, T{0});
  for (std::size_t c = 0; c < config_.in_channels; ++c) {
    const auto row = input.channel(c);
    for (std::size_t x = 0; x < row.size(); ++x) {
      const std::size_t xp = x + padding_;
      const std::size_t phase = xp % s;
      const std::size_t j = xp / s;
      // Repeated multiplication keeps odd powers of negative inputs exact in sign.
      T value = row[x];
      for (std::size_t k = 0; k < q; ++k) {
        p.data[((c * q + k) * s + phase) * p.phase_length + j] = value;
        value *= row[x];
      }
    }
  }
  return p;
}

template <typename T>
Tensor<T> SelfOnn1d<T>::evaluate(const Powers& p) const {
  const std::size_t out_len = output_length(p.input_length);
  const std::size_t q = config_.q;
  const std::size_t s = config_.stride;
  const std::size_t kernel = config_.kernel_size;
  Tensor<T> out(config_.out_channels, out_len);
  const T* w = weights_.value.data();
  for (std::size_t m = 0; m < config_.out_channels; ++m) {
    T* __restrict row = out.channel(m).data();
    std::fill(row, row + out_len, bias_.value[m]);
    const std::size_t c_begin = config_.depthwise ? m : 0;
    const std::size_t c_count = in_per_group();
    for (std::size_t ci = 0; ci < c_count; ++ci) {
      const std::size_t c = c_begin + ci;
      for (std::size_t k = 0; k < q; ++k) {
        for (std::size_t tau = 0; tau < kernel; ++tau) {
          const T weight = w[weight_index(m, ci, k, tau)];
          const T* __restrict src =
              p.data.data() + ((c * q + k) * s + tau % s) * p.phase_length + tau / s;
          for (std::size_t t = 0; t < out_len; ++t) row[t] += weight * src[t];
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> SelfOnn1d<T>::propagate(const Powers& p, const Tensor<T>& upstream, std::vector<T>& grad_w,
                                  std::vector<T>& grad_b) const {
  const std::size_t out_len = output_length(p.input_length);
  if (upstream.channels() != config_.out_channels) {
    throw ShapeError("upstream channels", config_.out_channels, upstream.channels(), "SelfOnn1d::backward");
  }
  if (upstream.length() != out_len) {
    throw ShapeError("upstream length", out_len, upstream.length(), "SelfOnn1d::backward");
  }
  const std::size_t q = config_.q;
  const std::size_t s = config_.stride;
  const std::size_t kernel = config_.kernel_size;
  std::vector<T> grad_powers(p.data.size(), T{0});
  const T* w = weights_.value.data();

  for (std::size_t m = 0; m < config_.out_channels; ++m) {
    const T* __restrict g = upstream.channel(m).data();
    grad_b[m] += static_cast<T>(sum(g, out_len));

    const std::size_t c_begin = config_.depthwise ? m : 0;
    for (std::size_t ci = 0; ci < in_per_group(); ++ci) {
      const std::size_t c = c_begin + ci;
      for (std::size_t k = 0; k < q; ++k) {
        for (std::size_t tau = 0; tau < kernel; ++tau) {
          const std::size_t idx = weight_index(m, ci, k, tau);
          const std::size_t offset = ((c * q + k) * s + tau % s) * p.phase_length + tau / s;
          const T* __restrict src = p.data.data() + offset;
          T* __restrict dst = grad_powers.data() + offset;
          const T weight = w[idx];
          for (std::size_t t = 0; t < out_len; ++t) dst[t] += weight * g[t];
          grad_w[idx] += static_cast<T>(dot(g, src, out_len));
        }
      }
    }
  }

  // Chain through the powers: d(x^(k+1))/dx = (k+1) x^k.
  Tensor<T> grad_in(config_.in_channels, p.input_length);
  for (std::size_t c = 0; c < config_.in_channels; ++c) {
    T* row = grad_in.channel(c).data();
    for (std::size_t x = 0; x < p.input_length; ++x) {
      const std::size_t xp = x + padding_;
      const std::size_t phase = xp % s;
      const std::size_t j = xp / s;
      auto at = [&](std::size_t k) { return ((c * q + k) * s + phase) * p.phase_length + j; };
      T sum = grad_powers[at(0)];
      for (std::size_t k = 1; k < q; ++k) {
        sum += static_cast<T>(k + 1) * p.data[at(k - 1)] * grad_powers[at(k)];
      }
      row[x] = sum;
    }
  }
  return grad_in;
}

template <typename T>
Tensor<T> SelfOnn1d<T>::apply(const Tensor<T>& input) const {
  return evaluate(powers(input));
}

template <typename T>
std::pair<SelfOnnGradients<T>, Tensor<T>> SelfOnn1d<T>::gradients(const Tensor<T>& input,
                                                                  const Tensor<T>& upstream) const {
  SelfOnnGradients<T> grads{std::vector<T>(weights_.size(), T{0}), std::vector<T>(bias_.size(), T{0})};
  auto grad_in = propagate(powers(input), upstream, grads.weights, grads.bias);
  return {std::move(grads), std::move(grad_in)};
}

template <typename T>
Batch<T> SelfOnn1d<T>::forward(const Batch<T>& input, Pass& pass) {
  std::vector<Powers> cache;
  cache.reserve(input.size());
  Batch<T> out;
  out.reserve(input.size());
  for (const auto& x : input) {
    cache.push_back(powers(x));
    out.push_back(evaluate(cache.back()));
  }
  pass.push(std::move(cache));
  return out;
}

template <typename T>
Batch<T> SelfOnn1d<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  auto cache = pass.pop<std::vector<Powers>>();
  if (cache.size() != grad_output.size()) {
    throw ShapeError("batch size", cache.size(), grad_output.size(), "SelfOnn1d::backward");
  }
  Batch<T> grad_in;
  grad_in.reserve(cache.size());
  for (std::size_t b = 0; b < cache.size(); ++b) {
    grad_in.push_back(propagate(cache[b], grad_output[b], weights_.grad, bias_.grad));
  }
  return grad_in;
}

template <typename T>
void SelfOnn1d<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&weights_);
  out.push_back(&bias_);
}

template <typename T>
void SelfOnn1d<T>::records(std::vector<LayerRecord<T>>& out) {
  out.push_back(LayerRecord<T>{LayerTag::SelfOnn,
                               {static_cast<std::uint32_t>(config_.out_channels),
                                static_cast<std::uint32_t>(in_per_group()),
                                static_cast<std::uint32_t>(config_.q),
                                static_cast<std::uint32_t>(config_.kernel_size)},
                               static_cast<std::uint32_t>(config_.q),
                               {&weights_, &bias_}});
}

template class SelfOnn1d<float>;
template class SelfOnn1d<double>;

}  // namespace opnn
