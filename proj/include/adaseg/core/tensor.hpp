#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adaseg/core/error.hpp"

namespace adaseg {

// Dense row-major tensor. Activations use (N, C, H, W); convolution weights
// use (Cout, Cin*kh*kw); vectors are rank-1. Always contiguous.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape)
      : shape_(std::move(shape)), v_(checked_numel(shape_), T(0)) {}
  Tensor(std::initializer_list<std::int64_t> shape)
      : Tensor(std::vector<std::int64_t>(shape)) {}

  static Tensor full(std::vector<std::int64_t> shape, T value) {
    Tensor t(std::move(shape));
    for (auto& x : t.v_) x = value;
    return t;
  }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(v_.size()); }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& vec() { return v_; }
  const std::vector<T>& vec() const { return v_; }

  T& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return v_[static_cast<std::size_t>(i)];
  }

  // 4-D accessor (N, C, H, W).
  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return v_[idx4(n, c, h, w)];
  }
  const T& at(std::int64_t n, std::int64_t c, std::int64_t h,
              std::int64_t w) const {
    return v_[idx4(n, c, h, w)];
  }

  void fill(T value) {
    for (auto& x : v_) x = value;
  }

  Tensor<T> reshaped(std::vector<std::int64_t> shape) const {
    Tensor<T> out;
    out.shape_ = std::move(shape);
    if (checked_numel(out.shape_) != numel())
      throw DimensionError("reshape changes element count");
    out.v_ = v_;
    return out;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i)
      os << shape_[i] << (i + 1 < shape_.size() ? "," : "");
    os << ")";
    return os.str();
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::int64_t i = 0; i < numel(); ++i)
      out[i] = static_cast<U>(v_[static_cast<std::size_t>(i)]);
    return out;
  }

  bool same_shape(const Tensor<T>& o) const { return shape_ == o.shape_; }

 private:
  static std::size_t checked_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) {
      if (d < 0) throw DimensionError("negative tensor dimension");
      n *= d;
    }
    return static_cast<std::size_t>(n);
  }
  std::size_t idx4(std::int64_t n, std::int64_t c, std::int64_t h,
                   std::int64_t w) const {
    return static_cast<std::size_t>(
        ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w);
  }

  std::vector<std::int64_t> shape_;
  std::vector<T> v_;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         a.shape_str() + " vs " + b.shape_str());
}

}  // namespace adaseg
