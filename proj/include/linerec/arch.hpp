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

#ifndef LINEREC_ARCH_HPP_
#define LINEREC_ARCH_HPP_

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "linerec/layers.hpp"

namespace linerec {

// Per-position dropout rates: input of stages 1-4 and input of the final
// linear layer. Default is the 0.0-0.3-0.3-0.3-0.9 schedule.
struct DropoutSchedule {
  std::array<double, 5> rates{0.0, 0.3, 0.3, 0.3, 0.9};
};

enum class ArchFamily { kVgg16Baseline, kResidualVariant };

struct ArchConfig {
  ArchFamily family = ArchFamily::kResidualVariant;
  std::array<int, 4> block_digits{1, 1, 1, 1};  // residual units per stage
  std::array<int, 4> stage_channels{64, 128, 256, 512};
  int input_height = 128;  // must be divisible by 16 (four 2x poolings)
  int vocab_size = 0;      // character classes excluding blank
  DropoutSchedule dropout;
  FlattenMode flatten_mode = FlattenMode::kChannelHeight;

  void validate() const;  // throws listing the violated invariant
  int num_classes() const { return vocab_size + 1; }
};

template <typename S>
struct NetworkT {
  ArchConfig config;
  std::vector<std::pair<std::string, std::unique_ptr<Layer<S>>>> layers;

  // batch_images is Bx1xHxW with H = config.input_height and W a multiple of
  // 16; returns pre-softmax logits TxBx(vocab+1) with T = W/16.
  TensorT<S> forward(const TensorT<S>& batch_images, Mode mode, Rng& rng);

  // Propagates d(loss)/d(logits) back through the chain; overwrites all
  // parameter gradients (call zero_grad first if accumulating semantics are
  // ever needed -- they are not in this trainer).
  TensorT<S> backward(const TensorT<S>& grad_logits);

  std::vector<TensorSlot<S>> params();
  std::vector<TensorSlot<S>> buffers();
  void zero_grad();
};

using Network = NetworkT<float>;
using Network64 = NetworkT<double>;

// The ordered layer plan a config expands to; build_network materializes it.
std::vector<std::pair<std::string, LayerSpec>> plan_network(const ArchConfig& config);

// Horizontal receptive-field halo of the feature extractor in input pixels:
// how far a sequence step's computation reaches beyond its own 16-pixel
// column. Eval-mode forward extends the batch by this much replicated
// padding so a sample's valid-step logits do not depend on how much wider
// the batch is than the sample.
int receptive_halo(const ArchConfig& config);

template <typename S>
NetworkT<S> build_network(const ArchConfig& config, Rng& rng);

// (layer name, output shape) for a 1x1xHxW probe input of the given width.
std::vector<std::pair<std::string, std::vector<int>>> shape_trace(
    const ArchConfig& config, int input_width);

struct ParamCount {
  int64_t total = 0;
  std::vector<std::pair<std::string, int64_t>> per_layer;
};

template <typename S>
ParamCount param_count(NetworkT<S>& net);

extern template struct NetworkT<float>;
extern template struct NetworkT<double>;
extern template NetworkT<float> build_network<float>(const ArchConfig&, Rng&);
extern template NetworkT<double> build_network<double>(const ArchConfig&, Rng&);
extern template ParamCount param_count<float>(NetworkT<float>&);
extern template ParamCount param_count<double>(NetworkT<double>&);

}  // namespace linerec

#endif  // LINEREC_ARCH_HPP_
