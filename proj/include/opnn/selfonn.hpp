#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "opnn/module.hpp"

namespace opnn {

struct SelfOnnConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 1;
  std::size_t q = 1;
  std::size_t stride = 1;
  /// Zero padding on each side. Unset means "same" length at stride 1,
  /// i.e. (kernel_size - 1) / 2.
  std::optional<std::size_t> padding;
  /// One input channel per output channel (in == out required).
  bool depthwise = false;
};

/// Parameter gradients of a generative-neuron layer.
template <typename T>
struct SelfOnnGradients {
  std::vector<T> weights;
  std::vector<T> bias;
};

/// 1D operational layer with generative neurons. Each connection applies a
/// learned q-term Maclaurin polynomial (without constant term, which is
/// carried by the bias) to its input sample and the results are summed over
/// input channels and kernel taps:
///
///   out[m, t] = b[m] + sum_{c, k, tau} w[m, c, k, tau] * x[c, t*stride + tau - pad]^(k+1)
///
/// With q == 1 this is exactly a 1D convolution (cross-correlation).
template <typename T>
class SelfOnn1d final : public Module<T> {
 public:
  explicit SelfOnn1d(const SelfOnnConfig& config);

  /// Uniform in [-s, s] with s = 1 / sqrt(fan_in * kernel_size * q).
  void initialize(std::mt19937_64& rng);

  const SelfOnnConfig& config() const noexcept { return config_; }
  std::size_t q() const noexcept { return config_.q; }
  std::size_t kernel_size() const noexcept { return config_.kernel_size; }
  std::size_t padding() const noexcept { return padding_; }
  std::size_t in_per_group() const noexcept { return config_.depthwise ? 1 : config_.in_channels; }
  std::size_t output_length(std::size_t input_length) const;

  /// weights[m][c][k][tau], k = 0..q-1 multiplies the (k+1)-th power.
  std::size_t weight_index(std::size_t m, std::size_t c, std::size_t k, std::size_t tau) const noexcept {
    return ((m * in_per_group() + c) * config_.q + k) * config_.kernel_size + tau;
  }
  std::vector<T>& weights() noexcept { return weights_.value; }
  const std::vector<T>& weights() const noexcept { return weights_.value; }
  std::vector<T>& bias() noexcept { return bias_.value; }
  const std::vector<T>& bias() const noexcept { return bias_.value; }
  const Parameter<T>& weight_parameter() const noexcept { return weights_; }
  const Parameter<T>& bias_parameter() const noexcept { return bias_; }

  /// Stateless single-sample evaluation.
  Tensor<T> apply(const Tensor<T>& input) const;

  /// Exact parameter and input gradients of apply() for one sample given the
  /// gradient of some scalar with respect to its output.
  std::pair<SelfOnnGradients<T>, Tensor<T>> gradients(const Tensor<T>& input,
                                                      const Tensor<T>& upstream) const;

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void records(std::vector<LayerRecord<T>>& out) override;
  std::string name() const override { return "SelfOnn1d"; }

 private:
  /// Zero-padded input powers split into `stride` phases so that every tap
  /// reads a contiguous run: element x of the padded signal lives at
  /// [(c*q + k)*stride + x % stride][x / stride].
  struct Powers {
    std::size_t input_length = 0;
    std::size_t phase_length = 0;
    std::vector<T> data;
  };

  Powers powers(const Tensor<T>& input) const;
  Tensor<T> evaluate(const Powers& p) const;
  Tensor<T> propagate(const Powers& p, const Tensor<T>& upstream, std::vector<T>& grad_w,
                      std::vector<T>& grad_b) const;

  SelfOnnConfig config_;
  std::size_t padding_ = 0;
  Parameter<T> weights_;
  Parameter<T> bias_;
};

extern template class SelfOnn1d<float>;
extern template class SelfOnn1d<double>;

}  // namespace opnn
