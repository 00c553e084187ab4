#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "opnn/module.hpp"

namespace opnn {

struct Sgd {
  double learning_rate = 0.25;
  double momentum = 0.0;
};

struct Adam {
  double learning_rate = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Hyperparameters plus per-parameter moment arrays. Moments are allocated
/// lazily on the first step so that they are congruent with whatever
/// parameter list the state is used with.
struct OptimizerState {
  std::variant<Sgd, Adam> variant;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step_count = 0;

  OptimizerState() : variant(Sgd{}) {}
  explicit OptimizerState(Sgd sgd) : variant(sgd) {}
  explicit OptimizerState(Adam adam) : variant(adam) {}

  double learning_rate() const;
};

/// p <- p - lr * v with v <- momentum * v + g.
template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, OptimizerState& state);

/// Bias-corrected Adam.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, OptimizerState& state);

/// Dispatches on the state's variant. Buffers (non-trainable) are skipped.
template <typename T>
void optimizer_step(std::span<Parameter<T>* const> params, OptimizerState& state);

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm);

}  // namespace opnn
