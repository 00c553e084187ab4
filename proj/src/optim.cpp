#include "opnn/optim.hpp"

#include <cmath>

namespace opnn {

double OptimizerState::learning_rate() const {
  return std::visit([](const auto& v) { return v.learning_rate; }, variant);
}

namespace {

template <typename T>
void ensure_moments(std::span<Parameter<T>* const> params, std::vector<std::vector<double>>& moments) {
  if (moments.empty()) {
    moments.reserve(params.size());
    for (const auto* p : params) moments.emplace_back(p->size(), 0.0);
    return;
  }
  if (moments.size() != params.size()) {
    throw ShapeError("parameter arrays", moments.size(), params.size(), "optimizer state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (moments[i].size() != params[i]->size()) {
      throw ShapeError("parameter size", moments[i].size(), params[i]->size(), "optimizer state");
    }
  }
}

}  // namespace

template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, OptimizerState& state) {
  const auto* sgd = std::get_if<Sgd>(&state.variant);
  require(sgd != nullptr, ErrorKind::Argument, "sgd_step: optimizer state is not SGD");
  require(sgd->learning_rate > 0, ErrorKind::Argument, "sgd_step: learning rate must be positive");
  ensure_moments(params, state.first_moment);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (!p.trainable) continue;
    auto& velocity = state.first_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      velocity[j] = sgd->momentum * velocity[j] + static_cast<double>(p.grad[j]);
      p.value[j] = static_cast<T>(static_cast<double>(p.value[j]) - sgd->learning_rate * velocity[j]);
    }
  }
  ++state.step_count;
}

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, OptimizerState& state) {
  const auto* adam = std::get_if<Adam>(&state.variant);
  require(adam != nullptr, ErrorKind::Argument, "adam_step: optimizer state is not Adam");
  require(adam->learning_rate > 0, ErrorKind::Argument, "adam_step: learning rate must be positive");
  ensure_moments(params, state.first_moment);
  ensure_moments(params, state.second_moment);
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(adam->beta1, t);
  const double correction2 = 1.0 - std::pow(adam->beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (!p.trainable) continue;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m[j] = adam->beta1 * m[j] + (1.0 - adam->beta1) * g;
      v[j] = adam->beta2 * v[j] + (1.0 - adam->beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] = static_cast<T>(static_cast<double>(p.value[j]) -
                                  adam->learning_rate * m_hat / (std::sqrt(v_hat) + adam->epsilon));
    }
  }
}

template <typename T>
void optimizer_step(std::span<Parameter<T>* const> params, OptimizerState& state) {
  if (std::holds_alternative<Sgd>(state.variant)) {
    sgd_step(params, state);
  } else {
    adam_step(params, state);
  }
}

template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) {
    if (!p->trainable) continue;
    for (T g : p->grad) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto* p : params) {
      if (!p->trainable) continue;
      for (T& g : p->grad) g = static_cast<T>(g * scale);
    }
  }
  return norm;
}

template void sgd_step<float>(std::span<Parameter<float>* const>, OptimizerState&);
template void sgd_step<double>(std::span<Parameter<double>* const>, OptimizerState&);
template void adam_step<float>(std::span<Parameter<float>* const>, OptimizerState&);
template void adam_step<double>(std::span<Parameter<double>* const>, OptimizerState&);
template void optimizer_step<float>(std::span<Parameter<float>* const>, OptimizerState&);
template void optimizer_step<double>(std::span<Parameter<double>* const>, OptimizerState&);
template double clip_grad_norm<float>(std::span<Parameter<float>* const>, double);
template double clip_grad_norm<double>(std::span<Parameter<double>* const>, double);

}  // namespace opnn
