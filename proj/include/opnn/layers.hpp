#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "opnn/module.hpp"
#include "opnn/selfonn.hpp"

namespace opnn {

template <typename T>
class Tanh final : public Module<T> {
 public:
  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  std::string name() const override { return "Tanh"; }
};

struct BatchNormConfig {
  std::size_t channels = 1;
  double epsilon = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalization over (batch x length). Train mode uses batch
/// statistics and updates the running estimates; eval mode uses the running
/// estimates.
template <typename T>
class BatchNorm1d final : public Module<T> {
 public:
  explicit BatchNorm1d(const BatchNormConfig& config);

  std::vector<T>& gamma() noexcept { return gamma_.value; }
  std::vector<T>& beta() noexcept { return beta_.value; }
  const std::vector<T>& running_mean() const noexcept { return running_mean_.value; }
  const std::vector<T>& running_var() const noexcept { return running_var_.value; }

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void records(std::vector<LayerRecord<T>>& out) override;
  std::string name() const override { return "BatchNorm1d"; }

 private:
  struct Cache {
    Batch<T> normalized;
    std::vector<double> inv_std;
    bool batch_statistics = true;
  };

  BatchNormConfig config_;
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Parameter<T> running_mean_;
  Parameter<T> running_var_;
};

/// Bin i averages input samples [floor(i*L/n), floor((i+1)*L/n)).
template <typename T>
class AdaptiveAvgPool1d final : public Module<T> {
 public:
  explicit AdaptiveAvgPool1d(std::size_t target_length);

  Tensor<T> apply(const Tensor<T>& input) const;

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  std::string name() const override { return "AdaptiveAvgPool1d"; }

 private:
  std::size_t target_;
};

/// Nearest-neighbour upsampling by an integer factor.
template <typename T>
class Upsample1d final : public Module<T> {
 public:
  explicit Upsample1d(std::size_t factor);

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  std::string name() const override { return "Upsample1d"; }

 private:
  std::size_t factor_;
};

/// (C, L) -> (C*L, 1), so kernel-1 layers act as fully connected layers.
template <typename T>
class Flatten final : public Module<T> {
 public:
  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  std::string name() const override { return "Flatten"; }
};

/// y = scale * x + shift with fixed constants.
template <typename T>
class Affine final : public Module<T> {
 public:
  Affine(T scale, T shift) : scale_(scale), shift_(shift) {}

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  std::string name() const override { return "Affine"; }

 private:
  T scale_;
  T shift_;
};

template <typename T>
class Sequential final : public Module<T> {
 public:
  Sequential() = default;

  template <typename M>
  M& add(std::unique_ptr<M> module) {
    M& ref = *module;
    modules_.push_back(std::move(module));
    return ref;
  }

  template <typename M, typename... Args>
  M& emplace(Args&&... args) {
    return add(std::make_unique<M>(std::forward<Args>(args)...));
  }

  std::size_t size() const noexcept { return modules_.size(); }
  Module<T>& at(std::size_t i) { return *modules_.at(i); }

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void records(std::vector<LayerRecord<T>>& out) override;
  std::string name() const override { return "Sequential"; }

 private:
  std::vector<ModulePtr<T>> modules_;
};

/// out = x + body(x). The body must preserve shape.
template <typename T>
class Residual final : public Module<T> {
 public:
  explicit Residual(std::unique_ptr<Sequential<T>> body) : body_(std::move(body)) {}

  Sequential<T>& body() noexcept { return *body_; }

  Batch<T> forward(const Batch<T>& input, Pass& pass) override;
  Batch<T> backward(const Batch<T>& grad_output, Pass& pass) override;
  void collect(std::vector<Parameter<T>*>& out) override { body_->collect(out); }
  void records(std::vector<LayerRecord<T>>& out) override { body_->records(out); }
  std::string name() const override { return "Residual"; }

 private:
  std::unique_ptr<Sequential<T>> body_;
};

extern template class Tanh<float>;
extern template class Tanh<double>;
extern template class BatchNorm1d<float>;
extern template class BatchNorm1d<double>;
extern template class AdaptiveAvgPool1d<float>;
extern template class AdaptiveAvgPool1d<double>;
extern template class Upsample1d<float>;
extern template class Upsample1d<double>;
extern template class Flatten<float>;
extern template class Flatten<double>;
extern template class Affine<float>;
extern template class Affine<double>;
extern template class Sequential<float>;
extern template class Sequential<double>;
extern template class Residual<float>;
extern template class Residual<double>;

}  // namespace opnn
