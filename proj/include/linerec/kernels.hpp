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

#ifndef LINEREC_KERNELS_HPP_
#define LINEREC_KERNELS_HPP_

#include <cstdint>

namespace linerec {
namespace kernels {

// OpenMP-parallel compute kernels. Every kernel computes each output element
// with a fixed serial reduction order owned by a single thread, so results are
// bit-identical for any thread count. Layouts are row-major: activations
// B x C x H x W, conv weights Co x Ci x KH x KW, linear weights Out x In.
//
// A naive single-threaded mirror of each kernel lives in linerec::refkernels
// and is used by the tests and the kernel benchmark.

void set_threads(int n);
int max_threads();

int conv_out_dim(int in, int kernel, int stride, int pad);

template <typename S>
void conv2d_forward(const S* in, int B, int Ci, int H, int W, const S* weight,
                    const S* bias, int Co, int KH, int KW, int stride, int pad,
                    S* out, int OH, int OW);

template <typename S>
void conv2d_grad_input(const S* gout, int B, int Ci, int H, int W,
                       const S* weight, int Co, int KH, int KW, int stride,
                       int pad, S* gin, int OH, int OW);

template <typename S>
void conv2d_grad_weight(const S* in, const S* gout, int B, int Ci, int H,
                        int W, int Co, int KH, int KW, int stride, int pad,
                        S* gweight, S* gbias, int OH, int OW);

template <typename S>
void maxpool_forward(const S* in, int B, int C, int H, int W, int window,
                     int stride, S* out, int32_t* argmax, int OH, int OW);

template <typename S>
void maxpool_backward(const S* gout, int B, int C, int OH, int OW,
                      const int32_t* argmax, S* gin, int H, int W);

template <typename S>
void relu_forward(const S* in, int64_t n, S* out, uint8_t* mask);

template <typename S>
void relu_backward(const S* gout, const uint8_t* mask, int64_t n, S* gin);

// Train-mode batchnorm: per-channel biased batch statistics; also emits the
// normalized activations and 1/sqrt(var+eps) for the backward pass.
template <typename S>
void batchnorm_train_forward(const S* in, int B, int C, int H, int W,
                             const S* gamma, const S* beta, S eps, S* out,
                             S* xhat, S* mean, S* var, S* inv_std);

template <typename S>
void batchnorm_eval_forward(const S* in, int B, int C, int H, int W,
                            const S* gamma, const S* beta,
                            const S* running_mean, const S* running_var, S eps,
                            S* out);

template <typename S>
void batchnorm_backward(const S* gout, const S* xhat, const S* inv_std,
                        const S* gamma, int B, int C, int H, int W, S* gin,
                        S* ggamma, S* gbeta);

// y[n][o] = sum_i x[n][i] * w[o][i] + b[o]
template <typename S>
void linear_forward(const S* x, int N, int In, const S* w, const S* b, int Out,
                    S* y);

template <typename S>
void linear_grad_input(const S* gy, const S* w, int N, int In, int Out, S* gx);

template <typename S>
void linear_grad_weight(const S* gy, const S* x, int N, int In, int Out, S* gw,
                        S* gb);

template <typename S>
void scale_mask_apply(const S* in, const S* mask, int64_t n, S* out);

template <typename S>
void add(const S* a, const S* b, int64_t n, S* out);

// Row-wise log-softmax with max-subtraction; in and out may alias.
template <typename S>
void log_softmax_rows(const S* in, int64_t rows, int C, S* out);

}  // namespace kernels
}  // namespace linerec

#endif  // LINEREC_KERNELS_HPP_
