/* Copyright 2026 The Linerec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef LINEREC_TENSOR_HPP_
#define LINEREC_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace linerec {

// Dense row-major N-d array. Carrier for images, feature maps, logits,
// parameters and gradients. Float by default; double instantiation is used
// by the finite-difference verification paths.
template <typename S>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_numel(shape_)), S(0));
  }

  static TensorT from(std::vector<int> shape, std::vector<S> values) {
    TensorT t;
    if (static_cast<int64_t>(values.size()) != checked_numel(shape)) {
      throw std::invalid_argument("tensor data length does not match shape " +
                                  shape_to_string(shape));
    }
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }

  int dim(int i) const {
    if (i < 0 || i >= rank()) {
      throw std::out_of_range("tensor dim index out of range");
    }
    return shape_[static_cast<size_t>(i)];
  }

  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  // Element access for tests and small-scale code; hot paths index raw data().
  template <typename... Ix>
  S& at(Ix... idx) {
    return data_[flat_index({static_cast<int>(idx)...})];
  }
  template <typename... Ix>
  const S& at(Ix... idx) const {
    return data_[flat_index({static_cast<int>(idx)...})];
  }

  TensorT reshaped(std::vector<int> new_shape) const {
    if (checked_numel(new_shape) != numel()) {
      throw std::invalid_argument("reshape from " + shape_to_string(shape_) +
                                  " to " + shape_to_string(new_shape) +
                                  " changes element count");
    }
    TensorT t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }

  template <typename S2>
  TensorT<S2> cast() const {
    std::vector<S2> out(data_.size());
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<S2>(data_[i]);
    return TensorT<S2>::from(shape_, std::move(out));
  }

  std::string shape_str() const { return shape_to_string(shape_); }

  static std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) os << "x";
      os << shape[i];
    }
    os << "]";
    return os.str();
  }

 private:
  static int64_t checked_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      if (d <= 0) {
        throw std::invalid_argument("tensor shape " + shape_to_string(shape) +
                                    " has a non-positive dimension");
      }
      n *= d;
    }
    return n;
  }

  size_t flat_index(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != rank()) {
      throw std::out_of_range("index rank mismatch for tensor " + shape_str());
    }
    size_t flat = 0;
    int i = 0;
    for (int v : idx) {
      int d = shape_[static_cast<size_t>(i)];
      if (v < 0 || v >= d) {
        throw std::out_of_range("tensor index out of bounds");
      }
      flat = flat * static_cast<size_t>(d) + static_cast<size_t>(v);
      ++i;
    }
    return flat;
  }

  std::vector<int> shape_;
  std::vector<S> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

// Forward/backward results must stay finite; NaN/Inf is a contract violation.
template <typename S>
void ensure_finite(const TensorT<S>& t, const std::string& what) {
  const S* p = t.data();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(p[i]))) {
      throw std::runtime_error("non-finite value in " + what + " at element " +
                               std::to_string(i));
    }
  }
}

template <typename S>
bool all_finite(const TensorT<S>& t) {
  const S* p = t.data();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(p[i]))) return false;
  }
  return true;
}

}  // namespace linerec

#endif  // LINEREC_TENSOR_HPP_
