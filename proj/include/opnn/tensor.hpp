#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "opnn/error.hpp"

namespace opnn {

/// A (channels x length) array stored channel-major. Every value that flows
/// through a network is one of these.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(std::size_t channels, std::size_t length, T fill = T{0})
      : channels_(channels), length_(length), data_(channels * length, fill) {
    check_extent();
  }

  Tensor(std::size_t channels, std::size_t length, std::vector<T> data)
      : channels_(channels), length_(length), data_(std::move(data)) {
    check_extent();
    if (data_.size() != channels_ * length_) {
      throw ShapeError("element count", channels_ * length_, data_.size(), "Tensor");
    }
  }

  /// Single-channel tensor holding a copy of `values`.
  static Tensor from_signal(std::span<const T> values) {
    return Tensor(1, values.size(), std::vector<T>(values.begin(), values.end()));
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t c, std::size_t t) { return data_[c * length_ + t]; }
  const T& operator()(std::size_t c, std::size_t t) const { return data_[c * length_ + t]; }

  std::span<T> channel(std::size_t c) { return {data_.data() + c * length_, length_}; }
  std::span<const T> channel(std::size_t c) const { return {data_.data() + c * length_, length_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return channels_ == other.channels_ && length_ == other.length_;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  /// Same shape and contents, reinterpreted as (channels * length) x 1.
  Tensor flattened() const { return Tensor(data_.size(), 1, data_); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(channels_, length_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  void check_extent() const {
    if (channels_ == 0) throw ShapeError("channels >=", 1, 0, "Tensor");
    if (length_ == 0) throw ShapeError("length >=", 1, 0, "Tensor");
  }

  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<T> data_;
};

/// A mini-batch; element i is sample i.
template <typename T>
using Batch = std::vector<Tensor<T>>;

template <typename T>
void check_batch_shape(const Batch<T>& batch, std::size_t channels, const std::string& context) {
  for (const auto& x : batch) {
    if (x.channels() != channels) throw ShapeError("channels", channels, x.channels(), context);
  }
}

template <typename T>
bool all_finite(const Batch<T>& batch) {
  return std::all_of(batch.begin(), batch.end(), [](const Tensor<T>& t) { return t.all_finite(); });
}

template <typename T>
Batch<T> zeros_like(const Batch<T>& batch) {
  Batch<T> out;
  out.reserve(batch.size());
  for (const auto& x : batch) out.emplace_back(x.channels(), x.length());
  return out;
}

}  // namespace opnn
