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

#ifndef LINEREC_LAYERS_HPP_
#define LINEREC_LAYERS_HPP_

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "linerec/rng.hpp"
#include "linerec/tensor.hpp"

namespace linerec {

enum class Mode { kTrain, kEval };

enum class FlattenMode { kChannelHeight, kHeightWidth };

struct Conv2dSpec {
  int in_ch = 0;
  int out_ch = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int pad = 1;
  bool bias = true;
};

struct BatchNorm2dSpec {
  int channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;
};

struct ReluSpec {};

struct MaxPool2dSpec {
  int window = 2;
  int stride = 2;
};

struct DropoutSpec {
  double rate = 0.0;  // in [0, 1)
};

struct LinearSpec {
  int in_features = 0;
  int out_features = 0;
  bool bias = true;
};

struct FlattenSpec {
  FlattenMode mode = FlattenMode::kChannelHeight;
};

// Basic residual unit: two 3x3 stride-1 convolutions with batchnorm, relu in
// between and after the shortcut add. in_ch != out_ch adds a 1x1 projection
// (with batchnorm) on the shortcut; otherwise the shortcut is identity.
struct ResidualUnitSpec {
  int in_ch = 0;
  int out_ch = 0;
};

using LayerSpec =
    std::variant<Conv2dSpec, BatchNorm2dSpec, ReluSpec, MaxPool2dSpec,
                 DropoutSpec, LinearSpec, FlattenSpec, ResidualUnitSpec>;

std::string layer_spec_kind(const LayerSpec& spec);

// Output shape the spec implies for a given input shape; throws a descriptive
// error (naming the layer and both shapes) on mismatch.
std::vector<int> layer_output_shape(const LayerSpec& spec,
                                    const std::vector<int>& input_shape);

// Named view of a parameter or buffer tensor; grad is null for buffers.
template <typename S>
struct TensorSlot {
  std::string name;
  TensorT<S>* value = nullptr;
  TensorT<S>* grad = nullptr;
};

// One network layer: explicit forward with cached intermediates and an exact
// analytic backward. Train-mode forward populates the cache consumed by
// backward; Eval-mode forward invalidates it. backward overwrites the
// parameter gradients (the network is a static chain, each layer runs once
// per step).
template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual const LayerSpec& spec() const = 0;
  std::string kind() const { return layer_spec_kind(spec()); }

  virtual TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng& rng) = 0;
  virtual TensorT<S> backward(const TensorT<S>& grad_output) = 0;

  virtual void params(const std::string& prefix,
                      std::vector<TensorSlot<S>>& out) {}
  virtual void buffers(const std::string& prefix,
                       std::vector<TensorSlot<S>>& out) {}
  virtual void zero_grad() {}
};

// Builds the layer and He-initializes its parameters (biases and batchnorm
// beta zero, gamma one).
template <typename S>
std::unique_ptr<Layer<S>> make_layer(const LayerSpec& spec, Rng& rng);

// Numerically stable log-softmax along class_dim; exponentials along that
// axis sum to one.
template <typename S>
TensorT<S> log_softmax(const TensorT<S>& logits, int class_dim);

extern template std::unique_ptr<Layer<float>> make_layer<float>(
    const LayerSpec&, Rng&);
extern template std::unique_ptr<Layer<double>> make_layer<double>(
    const LayerSpec&, Rng&);
extern template TensorT<float> log_softmax<float>(const TensorT<float>&, int);
extern template TensorT<double> log_softmax<double>(const TensorT<double>&,
                                                    int);

}  // namespace linerec

#endif  // LINEREC_LAYERS_HPP_
