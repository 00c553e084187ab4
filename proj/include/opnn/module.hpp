#pragma once

#include <any>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "opnn/tensor.hpp"

namespace opnn {

enum class Mode { Train, Eval };

/// One forward pass through a network. Layers push whatever they need for
/// backward onto the tape during forward and pop it (LIFO) during backward,
/// so the same network can be run several times before any backward call as
/// long as each run has its own Pass.
class Pass {
 public:
  explicit Pass(Mode mode, bool record = true) : mode_(mode), record_(record) {}

  Mode mode() const noexcept { return mode_; }
  bool training() const noexcept { return mode_ == Mode::Train; }
  bool recording() const noexcept { return record_; }
  bool empty() const noexcept { return tape_.empty(); }
  std::size_t depth() const noexcept { return tape_.size(); }

  template <typename C>
  void push(C cache) {
    if (record_) tape_.emplace_back(std::move(cache));
  }

  template <typename C>
  C pop() {
    if (tape_.empty()) throw Error(ErrorKind::Argument, "backward called without a recorded forward pass");
    C cache = std::any_cast<C>(std::move(tape_.back()));
    tape_.pop_back();
    return cache;
  }

 private:
  Mode mode_;
  bool record_;
  std::vector<std::any> tape_;
};

/// A named parameter array with its gradient accumulator. Buffers (such as
/// batch-norm running statistics) are parameters with trainable == false:
/// they are checkpointed but never touched by an optimizer.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, std::size_t count, bool is_trainable = true)
      : name(std::move(n)), value(count, T{0}), grad(count, T{0}), trainable(is_trainable) {}

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T{0}); }
};

enum class LayerTag : std::uint8_t {
  SelfOnn = 1,
  BatchNorm = 2,
};

/// Checkpoint manifest entry for one parametric layer.
template <typename T>
struct LayerRecord {
  LayerTag tag;
  std::vector<std::uint32_t> shape;
  std::uint32_t q = 0;
  std::vector<Parameter<T>*> blocks;
};

template <typename T>
class Module {
 public:
  virtual ~Module() = default;

  virtual Batch<T> forward(const Batch<T>& input, Pass& pass) = 0;
  virtual Batch<T> backward(const Batch<T>& grad_output, Pass& pass) = 0;

  /// Appends every parameter (trainable or buffer) in a fixed order.
  virtual void collect(std::vector<Parameter<T>*>& /*out*/) {}
  virtual void records(std::vector<LayerRecord<T>>& /*out*/) {}
  virtual std::string name() const = 0;

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> all;
    collect(all);
    return all;
  }

  std::vector<Parameter<T>*> trainable_parameters() {
    std::vector<Parameter<T>*> out;
    for (auto* p : parameters()) {
      if (p->trainable) out.push_back(p);
    }
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t trainable_count() {
    std::size_t n = 0;
    for (auto* p : trainable_parameters()) n += p->size();
    return n;
  }
};

template <typename T>
using ModulePtr = std::unique_ptr<Module<T>>;

}  // namespace opnn
