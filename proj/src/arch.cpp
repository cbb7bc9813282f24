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

#include "linerec/arch.hpp"

#include <algorithm>
#include <stdexcept>

namespace linerec {

void ArchConfig::validate() const {
  if (input_height <= 0 || input_height % 16 != 0) {
    throw std::invalid_argument(
        "ArchConfig: input_height must be a positive multiple of 16 (four 2x "
        "poolings), got " + std::to_string(input_height));
  }
  if (vocab_size < 1) {
    throw std::invalid_argument("ArchConfig: vocab_size must be >= 1, got " +
                                std::to_string(vocab_size));
  }
  for (int ch : stage_channels) {
    if (ch <= 0) {
      throw std::invalid_argument("ArchConfig: stage_channels must be positive");
    }
  }
  if (family == ArchFamily::kResidualVariant) {
    for (int d : block_digits) {
      if (d <= 0) {
        throw std::invalid_argument(
            "ArchConfig: block_digits must be positive integers");
      }
    }
  }
  for (double r : dropout.rates) {
    if (r < 0.0 || r >= 1.0) {
      throw std::invalid_argument("ArchConfig: dropout rates must be in [0, 1)");
    }
  }
}

std::vector<std::pair<std::string, LayerSpec>> plan_network(const ArchConfig& config) {
  config.validate();
  std::vector<std::pair<std::string, LayerSpec>> plan;
  const auto& ch = config.stage_channels;
  const auto& rates = config.dropout.rates;

  auto conv_bn_relu = [&plan](const std::string& name, int in_ch, int out_ch) {
    plan.emplace_back(name + ".conv", Conv2dSpec{in_ch, out_ch, 3, 3, 1, 1, false});
    plan.emplace_back(name + ".bn", BatchNorm2dSpec{out_ch});
    plan.emplace_back(name + ".relu", ReluSpec{});
  };

  if (config.family == ArchFamily::kVgg16Baseline) {
    // VGG-16's convolution stack grouped into four same-channel stages
    // ([2,2,3,6] convs at the configured channels) with one pooling each, so
    // both families share T = W/16.
    static constexpr std::array<int, 4> kConvCounts{2, 2, 3, 6};
    int prev = 1;
    for (int s = 0; s < 4; ++s) {
      const std::string stage = "stage" + std::to_string(s + 1);
      plan.emplace_back(stage + ".drop", DropoutSpec{rates[static_cast<size_t>(s)]});
      for (int j = 0; j < kConvCounts[static_cast<size_t>(s)]; ++j) {
        conv_bn_relu(stage + ".block" + std::to_string(j + 1), prev, ch[static_cast<size_t>(s)]);
        prev = ch[static_cast<size_t>(s)];
      }
      plan.emplace_back(stage + ".pool", MaxPool2dSpec{});
    }
  } else {
    // Two-conv stem at the first stage's channel count, then four residual
    // stages: dropout, the configured number of stride-1 basic units, one
    // extra conv+bn+relu, maxpool.
    conv_bn_relu("stem.block1", 1, ch[0]);
    conv_bn_relu("stem.block2", ch[0], ch[0]);
    int prev = ch[0];
    for (int s = 0; s < 4; ++s) {
      const std::string stage = "stage" + std::to_string(s + 1);
      plan.emplace_back(stage + ".drop", DropoutSpec{rates[static_cast<size_t>(s)]});
      for (int u = 0; u < config.block_digits[static_cast<size_t>(s)]; ++u) {
        plan.emplace_back(stage + ".unit" + std::to_string(u + 1),
                          ResidualUnitSpec{prev, ch[static_cast<size_t>(s)]});
        prev = ch[static_cast<size_t>(s)];
      }
      conv_bn_relu(stage + ".extra", prev, ch[static_cast<size_t>(s)]);
      plan.emplace_back(stage + ".pool", MaxPool2dSpec{});
    }
  }

  // Each pooling is immediately followed by a dropout slot; the fifth rate
  // lands here, in front of the classifier.
  plan.emplace_back("head.drop", DropoutSpec{rates[4]});
  plan.emplace_back("head.flatten", FlattenSpec{config.flatten_mode});
  const int final_h = config.input_height / 16;
  const int in_features = config.flatten_mode == FlattenMode::kChannelHeight
                              ? ch[3] * final_h
                              : ch[3];
  plan.emplace_back("head.fc", LinearSpec{in_features, config.num_classes(), true});
  return plan;
}

int receptive_halo(const ArchConfig& config) {
  int halo = 0;
  int scale = 1;
  for (const auto& [name, spec] : plan_network(config)) {
    if (const auto* conv = std::get_if<Conv2dSpec>(&spec)) {
      halo += (conv->kernel_w / 2) * scale;
    } else if (std::holds_alternative<ResidualUnitSpec>(spec)) {
      halo += 2 * scale;  // two 3x3 convolutions; the 1x1 projection adds none
    } else if (const auto* pool = std::get_if<MaxPool2dSpec>(&spec)) {
      scale *= pool->stride;
    }
  }
  return halo;
}

template <typename S>
NetworkT<S> build_network(const ArchConfig& config, Rng& rng) {
  NetworkT<S> net;
  net.config = config;
  for (auto& [name, spec] : plan_network(config)) {
    net.layers.emplace_back(name, make_layer<S>(spec, rng));
  }
  return net;
}

template <typename S>
TensorT<S> NetworkT<S>::forward(const TensorT<S>& batch_images, Mode mode, Rng& rng) {
  if (batch_images.rank() != 4 || batch_images.dim(1) != 1) {
    throw std::invalid_argument("network forward: expected Bx1xHxW input, got " +
                                batch_images.shape_str());
  }
  if (batch_images.dim(2) != config.input_height) {
    throw std::invalid_argument("network forward: input height " +
                                std::to_string(batch_images.dim(2)) +
                                " does not match configured height " +
                                std::to_string(config.input_height));
  }
  if (batch_images.dim(3) % 16 != 0) {
    throw std::invalid_argument("network forward: input width " +
                                std::to_string(batch_images.dim(3)) +
                                " is not a multiple of 16");
  }
  TensorT<S> x = batch_images;
  const int steps = batch_images.dim(3) / 16;
  bool extended_margin = false;

  // In Eval mode the batch is extended with replicated edge columns past the
  // receptive halo, so the logits of a sample's valid steps are the same
  // whether it sits in a narrow or a wide batch; the extra steps are sliced
  // off below. Train mode runs on the batch as given.
  if (mode == Mode::kEval && config.flatten_mode == FlattenMode::kChannelHeight) {
    extended_margin = true;
    const int margin = (receptive_halo(config) + 16 + 15) / 16 * 16;
    const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
    TensorT<S> extended({B, 1, H, W + margin});
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const S* src = x.data() + (static_cast<int64_t>(b) * H + h) * W;
        S* dst = extended.data() + (static_cast<int64_t>(b) * H + h) * (W + margin);
        std::copy(src, src + W, dst);
        std::fill(dst + W, dst + W + margin, src[W - 1]);
      }
    }
    x = std::move(extended);
  }

  for (auto& [name, layer] : layers) {
    try {
      x = layer->forward(x, mode, rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("layer " + name + ": " + e.what());
    }
  }

  if (extended_margin) {
    TensorT<S> sliced({steps, x.dim(1), x.dim(2)});
    std::copy(x.data(), x.data() + sliced.numel(), sliced.data());
    x = std::move(sliced);
  }
  ensure_finite(x, "network logits");
  return x;
}

template <typename S>
TensorT<S> NetworkT<S>::backward(const TensorT<S>& grad_logits) {
  TensorT<S> g = grad_logits;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    try {
      g = it->second->backward(g);
    } catch (const std::exception& e) {
      throw std::runtime_error("layer " + it->first + ": " + e.what());
    }
  }
  return g;
}

template <typename S>
std::vector<TensorSlot<S>> NetworkT<S>::params() {
  std::vector<TensorSlot<S>> out;
  for (auto& [name, layer] : layers) layer->params(name + ".", out);
  return out;
}

template <typename S>
std::vector<TensorSlot<S>> NetworkT<S>::buffers() {
  std::vector<TensorSlot<S>> out;
  for (auto& [name, layer] : layers) layer->buffers(name + ".", out);
  return out;
}

template <typename S>
void NetworkT<S>::zero_grad() {
  for (auto& [name, layer] : layers) layer->zero_grad();
}

std::vector<std::pair<std::string, std::vector<int>>> shape_trace(
    const ArchConfig& config, int input_width) {
  if (input_width <= 0 || input_width % 16 != 0) {
    throw std::invalid_argument("shape_trace: input width must be a positive "
                                "multiple of 16, got " + std::to_string(input_width));
  }
  std::vector<std::pair<std::string, std::vector<int>>> trace;
  std::vector<int> shape{1, 1, config.input_height, input_width};
  for (auto& [name, spec] : plan_network(config)) {
    shape = layer_output_shape(spec, shape);
    trace.emplace_back(name, shape);
  }
  return trace;
}

template <typename S>
ParamCount param_count(NetworkT<S>& net) {
  ParamCount pc;
  for (auto& [name, layer] : net.layers) {
    std::vector<TensorSlot<S>> slots;
    layer->params(name + ".", slots);
    int64_t layer_total = 0;
    for (auto& slot : slots) layer_total += slot.value->numel();
    pc.per_layer.emplace_back(name, layer_total);
    pc.total += layer_total;
  }
  return pc;
}

template struct NetworkT<float>;
template struct NetworkT<double>;
template NetworkT<float> build_network<float>(const ArchConfig&, Rng&);
template NetworkT<double> build_network<double>(const ArchConfig&, Rng&);
template ParamCount param_count<float>(NetworkT<float>&);
template ParamCount param_count<double>(NetworkT<double>&);

}  // namespace linerec
