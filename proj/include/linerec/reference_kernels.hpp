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

#ifndef LINEREC_REFERENCE_KERNELS_HPP_
#define LINEREC_REFERENCE_KERNELS_HPP_

#include <cstdint>

namespace linerec {
namespace refkernels {

// Plain single-threaded textbook implementations mirroring linerec::kernels.
// Kept deliberately naive; the unit tests and tools/bench_kernels compare the
// production OpenMP kernels against these.

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
void batchnorm_train_forward(const S* in, int B, int C, int H, int W,
                             const S* gamma, const S* beta, S eps, S* out,
                             S* xhat, S* mean, S* var, S* inv_std);

template <typename S>
void batchnorm_backward(const S* gout, const S* xhat, const S* inv_std,
                        const S* gamma, int B, int C, int H, int W, S* gin,
                        S* ggamma, S* gbeta);

template <typename S>
void linear_forward(const S* x, int N, int In, const S* w, const S* b, int Out,
                    S* y);

template <typename S>
void linear_grad_input(const S* gy, const S* w, int N, int In, int Out, S* gx);

template <typename S>
void linear_grad_weight(const S* gy, const S* x, int N, int In, int Out, S* gw,
                        S* gb);

}  // namespace refkernels
}  // namespace linerec

#endif  // LINEREC_REFERENCE_KERNELS_HPP_
