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

#include "linerec/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "linerec/kernels.hpp"

namespace linerec {

namespace {

void throw_shape(const std::string& kind, const std::string& expected,
                 const std::vector<int>& got) {
  throw std::invalid_argument(kind + ": expected input " + expected +
                              ", got " + Tensor::shape_to_string(got));
}

template <typename S>
void check_input(const std::string& kind, const TensorT<S>& input) {
  if (!all_finite(input)) {
    throw std::runtime_error(kind + ": non-finite input");
  }
}

int64_t product(const std::vector<int>& dims, size_t from, size_t to) {
  int64_t p = 1;
  for (size_t i = from; i < to; ++i) p *= dims[i];
  return p;
}

template <typename S>
TensorT<S> he_normal(std::vector<int> shape, int fan_in, Rng& rng) {
  TensorT<S> t(std::move(shape));
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  S* p = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) {
    p[i] = static_cast<S>(rng.normal(0.0, stddev));
  }
  return t;
}

template <typename S>
class Conv2dLayer final : public Layer<S> {
 public:
  Conv2dLayer(const Conv2dSpec& spec, Rng& rng) : spec_(spec) {
    if (spec.in_ch <= 0 || spec.out_ch <= 0 || spec.kernel_h <= 0 ||
        spec.kernel_w <= 0 || spec.stride <= 0 || spec.pad < 0) {
      throw std::invalid_argument("Conv2d: invalid dimensions");
    }
    weight_ = he_normal<S>({spec.out_ch, spec.in_ch, spec.kernel_h, spec.kernel_w},
                           spec.in_ch * spec.kernel_h * spec.kernel_w, rng);
    grad_weight_ = TensorT<S>(weight_.shape());
    if (spec.bias) {
      bias_ = TensorT<S>({spec.out_ch});
      grad_bias_ = TensorT<S>({spec.out_ch});
    }
  }

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng&) override {
    if (input.rank() != 4 || input.dim(1) != spec_.in_ch) {
      throw_shape("Conv2d", "[BxCin=" + std::to_string(spec_.in_ch) + "xHxW]",
                  input.shape());
    }
    check_input("Conv2d", input);
    const int B = input.dim(0), H = input.dim(2), W = input.dim(3);
    const int OH = kernels::conv_out_dim(H, spec_.kernel_h, spec_.stride, spec_.pad);
    const int OW = kernels::conv_out_dim(W, spec_.kernel_w, spec_.stride, spec_.pad);
    TensorT<S> out({B, spec_.out_ch, OH, OW});
    kernels::conv2d_forward(input.data(), B, spec_.in_ch, H, W, weight_.data(),
                            spec_.bias ? bias_.data() : nullptr, spec_.out_ch,
                            spec_.kernel_h, spec_.kernel_w, spec_.stride,
                            spec_.pad, out.data(), OH, OW);
    if (mode == Mode::kTrain) {
      cached_input_ = input;
      out_shape_ = out.shape();
      cache_valid_ = true;
    } else {
      cache_valid_ = false;
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("Conv2d: backward without a Train-mode forward");
    }
    if (grad_out.shape() != out_shape_) {
      throw_shape("Conv2d backward", TensorT<S>::shape_to_string(out_shape_),
                  grad_out.shape());
    }
    const int B = cached_input_.dim(0), H = cached_input_.dim(2), W = cached_input_.dim(3);
    const int OH = grad_out.dim(2), OW = grad_out.dim(3);
    TensorT<S> gin(cached_input_.shape());
    kernels::conv2d_grad_input(grad_out.data(), B, spec_.in_ch, H, W,
                               weight_.data(), spec_.out_ch, spec_.kernel_h,
                               spec_.kernel_w, spec_.stride, spec_.pad,
                               gin.data(), OH, OW);
    kernels::conv2d_grad_weight(cached_input_.data(), grad_out.data(), B,
                                spec_.in_ch, H, W, spec_.out_ch, spec_.kernel_h,
                                spec_.kernel_w, spec_.stride, spec_.pad,
                                grad_weight_.data(),
                                spec_.bias ? grad_bias_.data() : nullptr, OH, OW);
    return gin;
  }

  void params(const std::string& prefix, std::vector<TensorSlot<S>>& out) override {
    out.push_back({prefix + "weight", &weight_, &grad_weight_});
    if (spec_.bias) out.push_back({prefix + "bias", &bias_, &grad_bias_});
  }

  void zero_grad() override {
    grad_weight_.fill(S(0));
    if (spec_.bias) grad_bias_.fill(S(0));
  }

 private:
  Conv2dSpec spec_;
  LayerSpec holder_{spec_};
  TensorT<S> weight_, bias_, grad_weight_, grad_bias_;
  TensorT<S> cached_input_;
  std::vector<int> out_shape_;
  bool cache_valid_ = false;
};

template <typename S>
class BatchNorm2dLayer final : public Layer<S> {
 public:
  BatchNorm2dLayer(const BatchNorm2dSpec& spec) : spec_(spec) {
    if (spec.channels <= 0) throw std::invalid_argument("BatchNorm2d: channels must be positive");
    gamma_ = TensorT<S>({spec.channels});
    gamma_.fill(S(1));
    beta_ = TensorT<S>({spec.channels});
    grad_gamma_ = TensorT<S>({spec.channels});
    grad_beta_ = TensorT<S>({spec.channels});
    running_mean_ = TensorT<S>({spec.channels});
    running_var_ = TensorT<S>({spec.channels});
    running_var_.fill(S(1));
  }

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng&) override {
    if (input.rank() != 4 || input.dim(1) != spec_.channels) {
      throw_shape("BatchNorm2d", "[BxC=" + std::to_string(spec_.channels) + "xHxW]",
                  input.shape());
    }
    check_input("BatchNorm2d", input);
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    TensorT<S> out(input.shape());
    if (mode == Mode::kTrain) {
      xhat_ = TensorT<S>(input.shape());
      mean_ = TensorT<S>({C});
      var_ = TensorT<S>({C});
      inv_std_ = TensorT<S>({C});
      kernels::batchnorm_train_forward(input.data(), B, C, H, W, gamma_.data(),
                                       beta_.data(), static_cast<S>(spec_.eps),
                                       out.data(), xhat_.data(), mean_.data(),
                                       var_.data(), inv_std_.data());
      const int64_t n = static_cast<int64_t>(B) * H * W;
      const S unbias = n > 1 ? static_cast<S>(n) / static_cast<S>(n - 1) : S(1);
      const S m = static_cast<S>(spec_.momentum);
      for (int c = 0; c < C; ++c) {
        running_mean_.data()[c] = (S(1) - m) * running_mean_.data()[c] + m * mean_.data()[c];
        running_var_.data()[c] = (S(1) - m) * running_var_.data()[c] + m * var_.data()[c] * unbias;
      }
      cache_valid_ = true;
    } else {
      kernels::batchnorm_eval_forward(input.data(), B, C, H, W, gamma_.data(),
                                      beta_.data(), running_mean_.data(),
                                      running_var_.data(),
                                      static_cast<S>(spec_.eps), out.data());
      cache_valid_ = false;
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("BatchNorm2d: backward without a Train-mode forward");
    }
    if (!grad_out.same_shape(xhat_)) {
      throw_shape("BatchNorm2d backward", xhat_.shape_str(), grad_out.shape());
    }
    const int B = grad_out.dim(0), C = grad_out.dim(1), H = grad_out.dim(2), W = grad_out.dim(3);
    TensorT<S> gin(grad_out.shape());
    kernels::batchnorm_backward(grad_out.data(), xhat_.data(), inv_std_.data(),
                                gamma_.data(), B, C, H, W, gin.data(),
                                grad_gamma_.data(), grad_beta_.data());
    return gin;
  }

  void params(const std::string& prefix, std::vector<TensorSlot<S>>& out) override {
    out.push_back({prefix + "gamma", &gamma_, &grad_gamma_});
    out.push_back({prefix + "beta", &beta_, &grad_beta_});
  }

  void buffers(const std::string& prefix, std::vector<TensorSlot<S>>& out) override {
    out.push_back({prefix + "running_mean", &running_mean_, nullptr});
    out.push_back({prefix + "running_var", &running_var_, nullptr});
  }

  void zero_grad() override {
    grad_gamma_.fill(S(0));
    grad_beta_.fill(S(0));
  }

 private:
  BatchNorm2dSpec spec_;
  LayerSpec holder_{spec_};
  TensorT<S> gamma_, beta_, grad_gamma_, grad_beta_;
  TensorT<S> running_mean_, running_var_;
  TensorT<S> xhat_, mean_, var_, inv_std_;
  bool cache_valid_ = false;
};

template <typename S>
class ReluLayer final : public Layer<S> {
 public:
  ReluLayer() = default;

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng&) override {
    check_input("ReLU", input);
    TensorT<S> out(input.shape());
    if (mode == Mode::kTrain) {
      mask_.assign(static_cast<size_t>(input.numel()), 0);
      kernels::relu_forward(input.data(), input.numel(), out.data(), mask_.data());
      shape_ = input.shape();
      cache_valid_ = true;
    } else {
      kernels::relu_forward(input.data(), input.numel(), out.data(),
                            static_cast<uint8_t*>(nullptr));
      cache_valid_ = false;
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("ReLU: backward without a Train-mode forward");
    }
    if (grad_out.shape() != shape_) {
      throw_shape("ReLU backward", TensorT<S>::shape_to_string(shape_),
                  grad_out.shape());
    }
    TensorT<S> gin(shape_);
    kernels::relu_backward(grad_out.data(), mask_.data(), gin.numel(), gin.data());
    return gin;
  }

 private:
  LayerSpec holder_{ReluSpec{}};
  std::vector<uint8_t> mask_;  // input > 0; subgradient at 0 is 0
  std::vector<int> shape_;
  bool cache_valid_ = false;
};

template <typename S>
class MaxPool2dLayer final : public Layer<S> {
 public:
  explicit MaxPool2dLayer(const MaxPool2dSpec& spec) : spec_(spec) {
    if (spec.window <= 0 || spec.stride <= 0) {
      throw std::invalid_argument("MaxPool2d: invalid window/stride");
    }
  }

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng&) override {
    if (input.rank() != 4 || input.dim(2) < spec_.window || input.dim(3) < spec_.window) {
      throw_shape("MaxPool2d", "[BxCxHxW] withH,W >= window", input.shape());
    }
    check_input("MaxPool2d", input);
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int OH = (H - spec_.window) / spec_.stride + 1;
    const int OW = (W - spec_.window) / spec_.stride + 1;
    TensorT<S> out({B, C, OH, OW});
    argmax_.assign(static_cast<size_t>(out.numel()), 0);
    kernels::maxpool_forward(input.data(), B, C, H, W, spec_.window,
                             spec_.stride, out.data(), argmax_.data(), OH, OW);
    in_shape_ = input.shape();
    out_shape_ = out.shape();
    cache_valid_ = mode == Mode::kTrain;
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("MaxPool2d: backward without a Train-mode forward");
    }
    if (grad_out.shape() != out_shape_) {
      throw_shape("MaxPool2d backward", TensorT<S>::shape_to_string(out_shape_),
                  grad_out.shape());
    }
    TensorT<S> gin(in_shape_);
    kernels::maxpool_backward(grad_out.data(), grad_out.dim(0), grad_out.dim(1),
                              grad_out.dim(2), grad_out.dim(3), argmax_.data(),
                              gin.data(), in_shape_[2], in_shape_[3]);
    return gin;
  }

 private:
  MaxPool2dSpec spec_;
  LayerSpec holder_{spec_};
  std::vector<int32_t> argmax_;
  std::vector<int> in_shape_;
  std::vector<int> out_shape_;
  bool cache_valid_ = false;
};

template <typename S>
class DropoutLayer final : public Layer<S> {
 public:
  explicit DropoutLayer(const DropoutSpec& spec) : spec_(spec) {
    if (spec.rate < 0.0 || spec.rate >= 1.0) {
      throw std::invalid_argument("Dropout: rate must be in [0, 1)");
    }
  }

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng& rng) override {
    check_input("Dropout", input);
    if (mode == Mode::kEval || spec_.rate == 0.0) {
      cache_valid_ = mode == Mode::kTrain;
      identity_ = true;
      shape_ = input.shape();
      return input;
    }
    // Inverted dropout: kept entries are scaled by 1/(1-rate) so Eval is an
    // identity. The mask is drawn serially from the passed stream.
    mask_ = TensorT<S>(input.shape());
    const S scale = static_cast<S>(1.0 / (1.0 - spec_.rate));
    S* m = mask_.data();
    for (int64_t i = 0; i < mask_.numel(); ++i) {
      m[i] = rng.uniform() < spec_.rate ? S(0) : scale;
    }
    TensorT<S> out(input.shape());
    kernels::scale_mask_apply(input.data(), mask_.data(), input.numel(), out.data());
    identity_ = false;
    shape_ = input.shape();
    cache_valid_ = true;
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("Dropout: backward without a Train-mode forward");
    }
    if (grad_out.shape() != shape_) {
      throw_shape("Dropout backward", TensorT<S>::shape_to_string(shape_),
                  grad_out.shape());
    }
    if (identity_) return grad_out;
    TensorT<S> gin(shape_);
    kernels::scale_mask_apply(grad_out.data(), mask_.data(), gin.numel(), gin.data());
    return gin;
  }

 private:
  DropoutSpec spec_;
  LayerSpec holder_{spec_};
  TensorT<S> mask_;
  std::vector<int> shape_;
  bool identity_ = false;
  bool cache_valid_ = false;
};

template <typename S>
class LinearLayer final : public Layer<S> {
 public:
  LinearLayer(const LinearSpec& spec, Rng& rng) : spec_(spec) {
    if (spec.in_features <= 0 || spec.out_features <= 0) {
      throw std::invalid_argument("Linear: invalid feature counts");
    }
    weight_ = he_normal<S>({spec.out_features, spec.in_features}, spec.in_features, rng);
    grad_weight_ = TensorT<S>(weight_.shape());
    if (spec.bias) {
      bias_ = TensorT<S>({spec.out_features});
      grad_bias_ = TensorT<S>({spec.out_features});
    }
  }

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng&) override {
    if (input.rank() < 2 || input.dim(input.rank() - 1) != spec_.in_features) {
      throw_shape("Linear", "[...x" + std::to_string(spec_.in_features) + "]",
                  input.shape());
    }
    check_input("Linear", input);
    const int rows = static_cast<int>(input.numel() / spec_.in_features);
    std::vector<int> out_shape = input.shape();
    out_shape.back() = spec_.out_features;
    TensorT<S> out(out_shape);
    kernels::linear_forward(input.data(), rows, spec_.in_features, weight_.data(),
                            spec_.bias ? bias_.data() : nullptr,
                            spec_.out_features, out.data());
    if (mode == Mode::kTrain) {
      cached_input_ = input;
      out_shape_ = out.shape();
      cache_valid_ = true;
    } else {
      cache_valid_ = false;
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("Linear: backward without a Train-mode forward");
    }
    if (grad_out.shape() != out_shape_) {
      throw_shape("Linear backward", TensorT<S>::shape_to_string(out_shape_),
                  grad_out.shape());
    }
    const int rows = static_cast<int>(cached_input_.numel() / spec_.in_features);
    TensorT<S> gin(cached_input_.shape());
    kernels::linear_grad_input(grad_out.data(), weight_.data(), rows,
                               spec_.in_features, spec_.out_features, gin.data());
    kernels::linear_grad_weight(grad_out.data(), cached_input_.data(), rows,
                                spec_.in_features, spec_.out_features,
                                grad_weight_.data(),
                                spec_.bias ? grad_bias_.data() : nullptr);
    return gin;
  }

  void params(const std::string& prefix, std::vector<TensorSlot<S>>& out) override {
    out.push_back({prefix + "weight", &weight_, &grad_weight_});
    if (spec_.bias) out.push_back({prefix + "bias", &bias_, &grad_bias_});
  }

  void zero_grad() override {
    grad_weight_.fill(S(0));
    if (spec_.bias) grad_bias_.fill(S(0));
  }

 private:
  LinearSpec spec_;
  LayerSpec holder_{spec_};
  TensorT<S> weight_, bias_, grad_weight_, grad_bias_;
  TensorT<S> cached_input_;
  std::vector<int> out_shape_;
  bool cache_valid_ = false;
};

// C&H: BxCxHxW -> WxBx(C*H); one sequence step per pixel column.
// H&W: BxCxHxW -> (H*W)xBxC.
template <typename S>
class FlattenLayer final : public Layer<S> {
 public:
  explicit FlattenLayer(const FlattenSpec& spec) : spec_(spec) {}

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng&) override {
    if (input.rank() != 4) throw_shape("Flatten", "[BxCxHxW]", input.shape());
    check_input("Flatten", input);
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    TensorT<S> out = spec_.mode == FlattenMode::kChannelHeight
                         ? TensorT<S>({W, B, C * H})
                         : TensorT<S>({H * W, B, C});
    const S* src = input.data();
    S* dst = out.data();
    if (spec_.mode == FlattenMode::kChannelHeight) {
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          for (int h = 0; h < H; ++h) {
            const S* row = src + ((static_cast<int64_t>(b) * C + c) * H + h) * W;
            const int64_t f = static_cast<int64_t>(c) * H + h;
            for (int w = 0; w < W; ++w) {
              dst[(static_cast<int64_t>(w) * B + b) * C * H + f] = row[w];
            }
          }
        }
      }
    } else {
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          for (int h = 0; h < H; ++h) {
            const S* row = src + ((static_cast<int64_t>(b) * C + c) * H + h) * W;
            for (int w = 0; w < W; ++w) {
              dst[((static_cast<int64_t>(h) * W + w) * B + b) * C + c] = row[w];
            }
          }
        }
      }
    }
    in_shape_ = input.shape();
    cache_valid_ = mode == Mode::kTrain;
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    if (!cache_valid_) {
      throw std::runtime_error("Flatten: backward without a Train-mode forward");
    }
    if (grad_out.shape() != layer_output_shape(holder_, in_shape_)) {
      throw_shape("Flatten backward",
                  TensorT<S>::shape_to_string(layer_output_shape(holder_, in_shape_)),
                  grad_out.shape());
    }
    const int B = in_shape_[0], C = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
    TensorT<S> gin(in_shape_);
    const S* src = grad_out.data();
    S* dst = gin.data();
    if (spec_.mode == FlattenMode::kChannelHeight) {
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          for (int h = 0; h < H; ++h) {
            S* row = dst + ((static_cast<int64_t>(b) * C + c) * H + h) * W;
            const int64_t f = static_cast<int64_t>(c) * H + h;
            for (int w = 0; w < W; ++w) {
              row[w] = src[(static_cast<int64_t>(w) * B + b) * C * H + f];
            }
          }
        }
      }
    } else {
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          for (int h = 0; h < H; ++h) {
            S* row = dst + ((static_cast<int64_t>(b) * C + c) * H + h) * W;
            for (int w = 0; w < W; ++w) {
              row[w] = src[((static_cast<int64_t>(h) * W + w) * B + b) * C + c];
            }
          }
        }
      }
    }
    return gin;
  }

 private:
  FlattenSpec spec_;
  LayerSpec holder_{spec_};
  std::vector<int> in_shape_;
  bool cache_valid_ = false;
};

template <typename S>
class ResidualUnitLayer final : public Layer<S> {
 public:
  ResidualUnitLayer(const ResidualUnitSpec& spec, Rng& rng) : spec_(spec) {
    if (spec.in_ch <= 0 || spec.out_ch <= 0) {
      throw std::invalid_argument("ResidualUnit: invalid channel counts");
    }
    conv1_ = std::make_unique<Conv2dLayer<S>>(
        Conv2dSpec{spec.in_ch, spec.out_ch, 3, 3, 1, 1, false}, rng);
    bn1_ = std::make_unique<BatchNorm2dLayer<S>>(BatchNorm2dSpec{spec.out_ch});
    conv2_ = std::make_unique<Conv2dLayer<S>>(
        Conv2dSpec{spec.out_ch, spec.out_ch, 3, 3, 1, 1, false}, rng);
    bn2_ = std::make_unique<BatchNorm2dLayer<S>>(BatchNorm2dSpec{spec.out_ch});
    if (spec.in_ch != spec.out_ch) {
      proj_ = std::make_unique<Conv2dLayer<S>>(
          Conv2dSpec{spec.in_ch, spec.out_ch, 1, 1, 1, 0, false}, rng);
      proj_bn_ = std::make_unique<BatchNorm2dLayer<S>>(BatchNorm2dSpec{spec.out_ch});
    }
    relu1_ = std::make_unique<ReluLayer<S>>();
    relu2_ = std::make_unique<ReluLayer<S>>();
  }

  const LayerSpec& spec() const override { return holder_; }

  TensorT<S> forward(const TensorT<S>& input, Mode mode, Rng& rng) override {
    TensorT<S> a = conv1_->forward(input, mode, rng);
    a = bn1_->forward(a, mode, rng);
    a = relu1_->forward(a, mode, rng);
    a = conv2_->forward(a, mode, rng);
    a = bn2_->forward(a, mode, rng);
    TensorT<S> s = proj_ ? proj_bn_->forward(proj_->forward(input, mode, rng), mode, rng)
                         : input;
    TensorT<S> sum(a.shape());
    kernels::add(a.data(), s.data(), a.numel(), sum.data());
    return relu2_->forward(sum, mode, rng);
  }

  TensorT<S> backward(const TensorT<S>& grad_out) override {
    TensorT<S> g = relu2_->backward(grad_out);
    TensorT<S> gm = bn2_->backward(g);
    gm = conv2_->backward(gm);
    gm = relu1_->backward(gm);
    gm = bn1_->backward(gm);
    gm = conv1_->backward(gm);
    TensorT<S> gs = proj_ ? proj_->backward(proj_bn_->backward(g)) : g;
    TensorT<S> gin(gm.shape());
    kernels::add(gm.data(), gs.data(), gm.numel(), gin.data());
    return gin;
  }

  void params(const std::string& prefix, std::vector<TensorSlot<S>>& out) override {
    conv1_->params(prefix + "conv1.", out);
    bn1_->params(prefix + "bn1.", out);
    conv2_->params(prefix + "conv2.", out);
    bn2_->params(prefix + "bn2.", out);
    if (proj_) {
      proj_->params(prefix + "proj.", out);
      proj_bn_->params(prefix + "proj_bn.", out);
    }
  }

  void buffers(const std::string& prefix, std::vector<TensorSlot<S>>& out) override {
    bn1_->buffers(prefix + "bn1.", out);
    bn2_->buffers(prefix + "bn2.", out);
    if (proj_) proj_bn_->buffers(prefix + "proj_bn.", out);
  }

  void zero_grad() override {
    conv1_->zero_grad();
    bn1_->zero_grad();
    conv2_->zero_grad();
    bn2_->zero_grad();
    if (proj_) {
      proj_->zero_grad();
      proj_bn_->zero_grad();
    }
  }

 private:
  ResidualUnitSpec spec_;
  LayerSpec holder_{spec_};
  std::unique_ptr<Conv2dLayer<S>> conv1_, conv2_, proj_;
  std::unique_ptr<BatchNorm2dLayer<S>> bn1_, bn2_, proj_bn_;
  std::unique_ptr<ReluLayer<S>> relu1_, relu2_;
};

}  // namespace

std::string layer_spec_kind(const LayerSpec& spec) {
  struct Visitor {
    std::string operator()(const Conv2dSpec& s) const {
      return "Conv2d(" + std::to_string(s.in_ch) + "->" + std::to_string(s.out_ch) +
             "," + std::to_string(s.kernel_h) + "x" + std::to_string(s.kernel_w) + ")";
    }
    std::string operator()(const BatchNorm2dSpec& s) const {
      return "BatchNorm2d(" + std::to_string(s.channels) + ")";
    }
    std::string operator()(const ReluSpec&) const { return "ReLU"; }
    std::string operator()(const MaxPool2dSpec& s) const {
      return "MaxPool2d(" + std::to_string(s.window) + "," + std::to_string(s.stride) + ")";
    }
    std::string operator()(const DropoutSpec& s) const {
      return "Dropout(" + std::to_string(s.rate) + ")";
    }
    std::string operator()(const LinearSpec& s) const {
      return "Linear(" + std::to_string(s.in_features) + "->" +
             std::to_string(s.out_features) + ")";
    }
    std::string operator()(const FlattenSpec& s) const {
      return s.mode == FlattenMode::kChannelHeight ? "Flatten(C&H)" : "Flatten(H&W)";
    }
    std::string operator()(const ResidualUnitSpec& s) const {
      return "ResidualUnit(" + std::to_string(s.in_ch) + "->" +
             std::to_string(s.out_ch) + ")";
    }
  };
  return std::visit(Visitor{}, spec);
}

std::vector<int> layer_output_shape(const LayerSpec& spec,
                                    const std::vector<int>& in) {
  auto expect4 = [&](const std::string& kind) {
    if (in.size() != 4) throw_shape(kind, "[BxCxHxW]", in);
  };
  struct Out {
    const std::vector<int>& in;
    std::vector<int> operator()(const Conv2dSpec& s) const {
      if (in.size() != 4 || in[1] != s.in_ch) {
        throw_shape(layer_spec_kind(LayerSpec{s}), "[BxCinxHxW]", in);
      }
      return {in[0], s.out_ch,
              kernels::conv_out_dim(in[2], s.kernel_h, s.stride, s.pad),
              kernels::conv_out_dim(in[3], s.kernel_w, s.stride, s.pad)};
    }
    std::vector<int> operator()(const BatchNorm2dSpec& s) const {
      if (in.size() != 4 || in[1] != s.channels) {
        throw_shape(layer_spec_kind(LayerSpec{s}), "[BxCxHxW]", in);
      }
      return in;
    }
    std::vector<int> operator()(const ReluSpec&) const { return in; }
    std::vector<int> operator()(const MaxPool2dSpec& s) const {
      if (in.size() != 4 || in[2] < s.window || in[3] < s.window) {
        throw_shape("MaxPool2d", "[BxCxHxW], H,W >= window", in);
      }
      return {in[0], in[1], (in[2] - s.window) / s.stride + 1,
              (in[3] - s.window) / s.stride + 1};
    }
    std::vector<int> operator()(const DropoutSpec&) const { return in; }
    std::vector<int> operator()(const LinearSpec& s) const {
      if (in.empty() || in.back() != s.in_features) {
        throw_shape(layer_spec_kind(LayerSpec{s}), "[...xIn]", in);
      }
      std::vector<int> out = in;
      out.back() = s.out_features;
      return out;
    }
    std::vector<int> operator()(const FlattenSpec& s) const {
      if (in.size() != 4) throw_shape("Flatten", "[BxCxHxW]", in);
      if (s.mode == FlattenMode::kChannelHeight) {
        return {in[3], in[0], in[1] * in[2]};
      }
      return {in[2] * in[3], in[0], in[1]};
    }
    std::vector<int> operator()(const ResidualUnitSpec& s) const {
      if (in.size() != 4 || in[1] != s.in_ch) {
        throw_shape(layer_spec_kind(LayerSpec{s}), "[BxCinxHxW]", in);
      }
      return {in[0], s.out_ch, in[2], in[3]};
    }
  };
  (void)expect4;
  return std::visit(Out{in}, spec);
}

template <typename S>
std::unique_ptr<Layer<S>> make_layer(const LayerSpec& spec, Rng& rng) {
  struct Factory {
    Rng& rng;
    std::unique_ptr<Layer<S>> operator()(const Conv2dSpec& s) const {
      return std::make_unique<Conv2dLayer<S>>(s, rng);
    }
    std::unique_ptr<Layer<S>> operator()(const BatchNorm2dSpec& s) const {
      return std::make_unique<BatchNorm2dLayer<S>>(s);
    }
    std::unique_ptr<Layer<S>> operator()(const ReluSpec&) const {
      return std::make_unique<ReluLayer<S>>();
    }
    std::unique_ptr<Layer<S>> operator()(const MaxPool2dSpec& s) const {
      return std::make_unique<MaxPool2dLayer<S>>(s);
    }
    std::unique_ptr<Layer<S>> operator()(const DropoutSpec& s) const {
      return std::make_unique<DropoutLayer<S>>(s);
    }
    std::unique_ptr<Layer<S>> operator()(const LinearSpec& s) const {
      return std::make_unique<LinearLayer<S>>(s, rng);
    }
    std::unique_ptr<Layer<S>> operator()(const FlattenSpec& s) const {
      return std::make_unique<FlattenLayer<S>>(s);
    }
    std::unique_ptr<Layer<S>> operator()(const ResidualUnitSpec& s) const {
      return std::make_unique<ResidualUnitLayer<S>>(s, rng);
    }
  };
  return std::visit(Factory{rng}, spec);
}

template <typename S>
TensorT<S> log_softmax(const TensorT<S>& logits, int class_dim) {
  if (class_dim < 0 || class_dim >= logits.rank()) {
    throw std::invalid_argument("log_softmax: class_dim out of range");
  }
  const int C = logits.dim(class_dim);
  TensorT<S> out(logits.shape());
  if (class_dim == logits.rank() - 1) {
    kernels::log_softmax_rows(logits.data(), logits.numel() / C, C, out.data());
    return out;
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < class_dim; ++i) outer *= logits.dim(i);
  for (int i = class_dim + 1; i < logits.rank(); ++i) inner *= logits.dim(i);
  const S* src = logits.data();
  S* dst = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t base = o * C * inner + i;
      S mx = src[base];
      for (int c = 1; c < C; ++c) mx = std::max(mx, src[base + c * inner]);
      S sum = 0;
      for (int c = 0; c < C; ++c) sum += std::exp(src[base + c * inner] - mx);
      const S lse = mx + std::log(sum);
      for (int c = 0; c < C; ++c) dst[base + c * inner] = src[base + c * inner] - lse;
    }
  }
  return out;
}

template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&, Rng&);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&, Rng&);
template TensorT<float> log_softmax<float>(const TensorT<float>&, int);
template TensorT<double> log_softmax<double>(const TensorT<double>&, int);

}  // namespace linerec
