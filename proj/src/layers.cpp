#include "opnn/layers.hpp"

#include <cmath>
#include <limits>

namespace opnn {

// ---------------------------------------------------------------------------
// Tanh

template <typename T>
Batch<T> Tanh<T>::forward(const Batch<T>& input, Pass& pass) {
  // Saturated values are pulled just inside the open interval (-1, 1).
  const T bound = std::nextafter(T{1}, T{0});
  Batch<T> out = input;
  for (auto& x : out) {
    for (auto& v : x.values()) v = std::clamp(std::tanh(v), -bound, bound);
  }
  if (pass.recording()) pass.push(out);
  return out;
}

template <typename T>
Batch<T> Tanh<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  auto out = pass.pop<Batch<T>>();
  if (out.size() != grad_output.size()) {
    throw ShapeError("batch size", out.size(), grad_output.size(), "Tanh::backward");
  }
  Batch<T> grad = grad_output;
  for (std::size_t b = 0; b < grad.size(); ++b) {
    if (!grad[b].same_shape(out[b])) {
      throw ShapeError("element count", out[b].size(), grad[b].size(), "Tanh::backward");
    }
    auto g = grad[b].values();
    auto y = out[b].values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= T{1} - y[i] * y[i];
  }
  return grad;
}

// ---------------------------------------------------------------------------
// BatchNorm1d

template <typename T>
BatchNorm1d<T>::BatchNorm1d(const BatchNormConfig& config)
    : config_(config),
      gamma_("gamma", config.channels),
      beta_("beta", config.channels),
      running_mean_("running_mean", config.channels, false),
      running_var_("running_var", config.channels, false) {
  require(config.channels > 0, ErrorKind::Argument, "BatchNorm1d: channels must be positive");
  std::fill(gamma_.value.begin(), gamma_.value.end(), T{1});
  std::fill(running_var_.value.begin(), running_var_.value.end(), T{1});
}

template <typename T>
Batch<T> BatchNorm1d<T>::forward(const Batch<T>& input, Pass& pass) {
  const std::size_t channels = config_.channels;
  check_batch_shape(input, channels, "BatchNorm1d");
  const bool batch_stats = pass.training();
  if (batch_stats && input.size() < 2) {
    throw ShapeError("train-mode batch size >=", 2, input.size(), "BatchNorm1d");
  }

  Cache cache;
  cache.batch_statistics = batch_stats;
  cache.inv_std.assign(channels, 0.0);
  std::vector<double> mean(channels, 0.0);

  if (batch_stats) {
    std::size_t count = 0;
    std::vector<double> sum(channels, 0.0);
    for (const auto& x : input) {
      count += x.length();
      for (std::size_t c = 0; c < channels; ++c) {
        for (T v : x.channel(c)) sum[c] += static_cast<double>(v);
      }
    }
    std::vector<double> sq(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) mean[c] = sum[c] / static_cast<double>(count);
    for (const auto& x : input) {
      for (std::size_t c = 0; c < channels; ++c) {
        for (T v : x.channel(c)) {
          const double d = static_cast<double>(v) - mean[c];
          sq[c] += d * d;
        }
      }
    }
    const double n = static_cast<double>(count);
    for (std::size_t c = 0; c < channels; ++c) {
      const double var = sq[c] / n;
      cache.inv_std[c] = 1.0 / std::sqrt(var + config_.epsilon);
      const double unbiased = count > 1 ? sq[c] / (n - 1.0) : var;
      running_mean_.value[c] = static_cast<T>((1.0 - config_.momentum) * running_mean_.value[c] +
                                              config_.momentum * mean[c]);
      running_var_.value[c] = static_cast<T>((1.0 - config_.momentum) * running_var_.value[c] +
                                             config_.momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = running_mean_.value[c];
      cache.inv_std[c] = 1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + config_.epsilon);
    }
  }

  Batch<T> out;
  out.reserve(input.size());
  if (pass.recording()) cache.normalized.reserve(input.size());
  for (const auto& x : input) {
    Tensor<T> normalized(channels, x.length());
    Tensor<T> y(channels, x.length());
    for (std::size_t c = 0; c < channels; ++c) {
      const auto src = x.channel(c);
      auto nrm = normalized.channel(c);
      auto dst = y.channel(c);
      const double g = gamma_.value[c];
      const double b = beta_.value[c];
      for (std::size_t t = 0; t < src.size(); ++t) {
        const double xh = (static_cast<double>(src[t]) - mean[c]) * cache.inv_std[c];
        nrm[t] = static_cast<T>(xh);
        dst[t] = static_cast<T>(g * xh + b);
      }
    }
    out.push_back(std::move(y));
    if (pass.recording()) cache.normalized.push_back(std::move(normalized));
  }
  pass.push(std::move(cache));
  return out;
}

template <typename T>
Batch<T> BatchNorm1d<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  auto cache = pass.pop<Cache>();
  const std::size_t channels = config_.channels;
  if (cache.normalized.size() != grad_output.size()) {
    throw ShapeError("batch size", cache.normalized.size(), grad_output.size(), "BatchNorm1d::backward");
  }
  std::vector<double> sum_dy(channels, 0.0);
  std::vector<double> sum_dy_xh(channels, 0.0);
  std::size_t count = 0;
  for (std::size_t b = 0; b < grad_output.size(); ++b) {
    const auto& g = grad_output[b];
    const auto& xh = cache.normalized[b];
    if (!g.same_shape(xh)) throw ShapeError("element count", xh.size(), g.size(), "BatchNorm1d::backward");
    count += g.length();
    for (std::size_t c = 0; c < channels; ++c) {
      const auto gc = g.channel(c);
      const auto xc = xh.channel(c);
      for (std::size_t t = 0; t < gc.size(); ++t) {
        sum_dy[c] += static_cast<double>(gc[t]);
        sum_dy_xh[c] += static_cast<double>(gc[t]) * static_cast<double>(xc[t]);
      }
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    beta_.grad[c] += static_cast<T>(sum_dy[c]);
    gamma_.grad[c] += static_cast<T>(sum_dy_xh[c]);
  }

  const double n = static_cast<double>(count);
  Batch<T> grad_in;
  grad_in.reserve(grad_output.size());
  for (std::size_t b = 0; b < grad_output.size(); ++b) {
    const auto& g = grad_output[b];
    const auto& xh = cache.normalized[b];
    Tensor<T> dx(channels, g.length());
    for (std::size_t c = 0; c < channels; ++c) {
      const auto gc = g.channel(c);
      const auto xc = xh.channel(c);
      auto dc = dx.channel(c);
      const double scale = static_cast<double>(gamma_.value[c]) * cache.inv_std[c];
      if (cache.batch_statistics) {
        const double mean_dy = sum_dy[c] / n;
        const double mean_dy_xh = sum_dy_xh[c] / n;
        for (std::size_t t = 0; t < gc.size(); ++t) {
          dc[t] = static_cast<T>(scale * (static_cast<double>(gc[t]) - mean_dy -
                                          static_cast<double>(xc[t]) * mean_dy_xh));
        }
      } else {
        for (std::size_t t = 0; t < gc.size(); ++t) dc[t] = static_cast<T>(scale * gc[t]);
      }
    }
    grad_in.push_back(std::move(dx));
  }
  return grad_in;
}

template <typename T>
void BatchNorm1d<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

template <typename T>
void BatchNorm1d<T>::records(std::vector<LayerRecord<T>>& out) {
  out.push_back(LayerRecord<T>{LayerTag::BatchNorm,
                               {static_cast<std::uint32_t>(config_.channels)},
                               0,
                               {&gamma_, &beta_, &running_mean_, &running_var_}});
}

// ---------------------------------------------------------------------------
// AdaptiveAvgPool1d

template <typename T>
AdaptiveAvgPool1d<T>::AdaptiveAvgPool1d(std::size_t target_length) : target_(target_length) {
  require(target_length > 0, ErrorKind::Argument, "AdaptiveAvgPool1d: target length must be positive");
}

template <typename T>
Tensor<T> AdaptiveAvgPool1d<T>::apply(const Tensor<T>& input) const {
  const std::size_t length = input.length();
  if (target_ > length) throw ShapeError("input length >=", target_, length, "AdaptiveAvgPool1d");
  Tensor<T> out(input.channels(), target_);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const auto src = input.channel(c);
    for (std::size_t i = 0; i < target_; ++i) {
      const std::size_t begin = i * length / target_;
      const std::size_t end = (i + 1) * length / target_;
      double sum = 0.0;
      for (std::size_t t = begin; t < end; ++t) sum += static_cast<double>(src[t]);
      out(c, i) = static_cast<T>(sum / static_cast<double>(end - begin));
    }
  }
  return out;
}

template <typename T>
Batch<T> AdaptiveAvgPool1d<T>::forward(const Batch<T>& input, Pass& pass) {
  Batch<T> out;
  out.reserve(input.size());
  std::vector<std::size_t> lengths;
  for (const auto& x : input) {
    out.push_back(apply(x));
    lengths.push_back(x.length());
  }
  pass.push(std::move(lengths));
  return out;
}

template <typename T>
Batch<T> AdaptiveAvgPool1d<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  auto lengths = pass.pop<std::vector<std::size_t>>();
  Batch<T> grad_in;
  grad_in.reserve(grad_output.size());
  for (std::size_t b = 0; b < grad_output.size(); ++b) {
    const auto& g = grad_output[b];
    const std::size_t length = lengths.at(b);
    if (g.length() != target_) throw ShapeError("upstream length", target_, g.length(), "AdaptiveAvgPool1d");
    Tensor<T> dx(g.channels(), length);
    for (std::size_t c = 0; c < g.channels(); ++c) {
      for (std::size_t i = 0; i < target_; ++i) {
        const std::size_t begin = i * length / target_;
        const std::size_t end = (i + 1) * length / target_;
        const T share = g(c, i) / static_cast<T>(end - begin);
        for (std::size_t t = begin; t < end; ++t) dx(c, t) = share;
      }
    }
    grad_in.push_back(std::move(dx));
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Upsample1d

template <typename T>
Upsample1d<T>::Upsample1d(std::size_t factor) : factor_(factor) {
  require(factor > 0, ErrorKind::Argument, "Upsample1d: factor must be positive");
}

template <typename T>
Batch<T> Upsample1d<T>::forward(const Batch<T>& input, Pass& /*pass*/) {
  Batch<T> out;
  out.reserve(input.size());
  for (const auto& x : input) {
    Tensor<T> y(x.channels(), x.length() * factor_);
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const auto src = x.channel(c);
      auto dst = y.channel(c);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = src[t / factor_];
    }
    out.push_back(std::move(y));
  }
  return out;
}

template <typename T>
Batch<T> Upsample1d<T>::backward(const Batch<T>& grad_output, Pass& /*pass*/) {
  Batch<T> grad_in;
  grad_in.reserve(grad_output.size());
  for (const auto& g : grad_output) {
    if (g.length() % factor_ != 0) {
      throw ShapeError("length multiple of", factor_, g.length(), "Upsample1d::backward");
    }
    Tensor<T> dx(g.channels(), g.length() / factor_);
    for (std::size_t c = 0; c < g.channels(); ++c) {
      const auto src = g.channel(c);
      auto dst = dx.channel(c);
      for (std::size_t t = 0; t < src.size(); ++t) dst[t / factor_] += src[t];
    }
    grad_in.push_back(std::move(dx));
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Flatten

template <typename T>
Batch<T> Flatten<T>::forward(const Batch<T>& input, Pass& pass) {
  Batch<T> out;
  out.reserve(input.size());
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (const auto& x : input) {
    shapes.emplace_back(x.channels(), x.length());
    out.push_back(x.flattened());
  }
  pass.push(std::move(shapes));
  return out;
}

template <typename T>
Batch<T> Flatten<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  auto shapes = pass.pop<std::vector<std::pair<std::size_t, std::size_t>>>();
  Batch<T> grad_in;
  grad_in.reserve(grad_output.size());
  for (std::size_t b = 0; b < grad_output.size(); ++b) {
    const auto [channels, length] = shapes.at(b);
    grad_in.emplace_back(channels, length, grad_output[b].storage());
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Affine

template <typename T>
Batch<T> Affine<T>::forward(const Batch<T>& input, Pass& /*pass*/) {
  Batch<T> out = input;
  for (auto& x : out) {
    for (auto& v : x.values()) v = scale_ * v + shift_;
  }
  return out;
}

template <typename T>
Batch<T> Affine<T>::backward(const Batch<T>& grad_output, Pass& /*pass*/) {
  Batch<T> grad = grad_output;
  for (auto& g : grad) {
    for (auto& v : g.values()) v *= scale_;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Sequential / Residual

template <typename T>
Batch<T> Sequential<T>::forward(const Batch<T>& input, Pass& pass) {
  Batch<T> x = input;
  for (auto& m : modules_) x = m->forward(x, pass);
  return x;
}

template <typename T>
Batch<T> Sequential<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  Batch<T> g = grad_output;
  for (auto it = modules_.rbegin(); it != modules_.rend(); ++it) g = (*it)->backward(g, pass);
  return g;
}

template <typename T>
void Sequential<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto& m : modules_) m->collect(out);
}

template <typename T>
void Sequential<T>::records(std::vector<LayerRecord<T>>& out) {
  for (auto& m : modules_) m->records(out);
}

template <typename T>
Batch<T> Residual<T>::forward(const Batch<T>& input, Pass& pass) {
  Batch<T> y = body_->forward(input, pass);
  if (y.size() != input.size()) throw ShapeError("batch size", input.size(), y.size(), "Residual");
  for (std::size_t b = 0; b < y.size(); ++b) {
    if (!y[b].same_shape(input[b])) {
      throw ShapeError("residual length", input[b].length(), y[b].length(), "Residual");
    }
    auto dst = y[b].values();
    auto src = input[b].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return y;
}

template <typename T>
Batch<T> Residual<T>::backward(const Batch<T>& grad_output, Pass& pass) {
  Batch<T> g = body_->backward(grad_output, pass);
  for (std::size_t b = 0; b < g.size(); ++b) {
    auto dst = g[b].values();
    auto src = grad_output[b].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return g;
}

template class Tanh<float>;
template class Tanh<double>;
template class BatchNorm1d<float>;
template class BatchNorm1d<double>;
template class AdaptiveAvgPool1d<float>;
template class AdaptiveAvgPool1d<double>;
template class Upsample1d<float>;
template class Upsample1d<double>;
template class Flatten<float>;
template class Flatten<double>;
template class Affine<float>;
template class Affine<double>;
template class Sequential<float>;
template class Sequential<double>;
template class Residual<float>;
template class Residual<double>;

}  // namespace opnn
