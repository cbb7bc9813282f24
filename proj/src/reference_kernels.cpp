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

#include "linerec/reference_kernels.hpp"

#include <algorithm>
#include <cmath>

namespace linerec {
namespace refkernels {

template <typename S>
void conv2d_forward(const S* in, int B, int Ci, int H, int W, const S* weight,
                    const S* bias, int Co, int KH, int KW, int stride, int pad,
                    S* out, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int oc = 0; oc < Co; ++oc) {
      for (int oh = 0; oh < OH; ++oh) {
        for (int ow = 0; ow < OW; ++ow) {
          S acc = 0;
          for (int ic = 0; ic < Ci; ++ic) {
            for (int kh = 0; kh < KH; ++kh) {
              for (int kw = 0; kw < KW; ++kw) {
                const int ih = oh * stride + kh - pad;
                const int iw = ow * stride + kw - pad;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += weight[((static_cast<int64_t>(oc) * Ci + ic) * KH + kh) * KW + kw] *
                       in[((static_cast<int64_t>(b) * Ci + ic) * H + ih) * W + iw];
              }
            }
          }
          if (bias != nullptr) acc += bias[oc];
          out[((static_cast<int64_t>(b) * Co + oc) * OH + oh) * OW + ow] = acc;
        }
      }
    }
  }
}

template <typename S>
void conv2d_grad_input(const S* gout, int B, int Ci, int H, int W,
                       const S* weight, int Co, int KH, int KW, int stride,
                       int pad, S* gin, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int ic = 0; ic < Ci; ++ic) {
      for (int ih = 0; ih < H; ++ih) {
        for (int iw = 0; iw < W; ++iw) {
          S acc = 0;
          for (int oc = 0; oc < Co; ++oc) {
            for (int kh = 0; kh < KH; ++kh) {
              for (int kw = 0; kw < KW; ++kw) {
                const int num_h = ih + pad - kh;
                const int num_w = iw + pad - kw;
                if (num_h < 0 || num_h % stride != 0) continue;
                if (num_w < 0 || num_w % stride != 0) continue;
                const int oh = num_h / stride;
                const int ow = num_w / stride;
                if (oh >= OH || ow >= OW) continue;
                acc += weight[((static_cast<int64_t>(oc) * Ci + ic) * KH + kh) * KW + kw] *
                       gout[((static_cast<int64_t>(b) * Co + oc) * OH + oh) * OW + ow];
              }
            }
          }
          gin[((static_cast<int64_t>(b) * Ci + ic) * H + ih) * W + iw] = acc;
        }
      }
    }
  }
}

template <typename S>
void conv2d_grad_weight(const S* in, const S* gout, int B, int Ci, int H,
                        int W, int Co, int KH, int KW, int stride, int pad,
                        S* gweight, S* gbias, int OH, int OW) {
  for (int oc = 0; oc < Co; ++oc) {
    for (int ic = 0; ic < Ci; ++ic) {
      for (int kh = 0; kh < KH; ++kh) {
        for (int kw = 0; kw < KW; ++kw) {
          S acc = 0;
          for (int b = 0; b < B; ++b) {
            for (int oh = 0; oh < OH; ++oh) {
              for (int ow = 0; ow < OW; ++ow) {
                const int ih = oh * stride + kh - pad;
                const int iw = ow * stride + kw - pad;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += gout[((static_cast<int64_t>(b) * Co + oc) * OH + oh) * OW + ow] *
                       in[((static_cast<int64_t>(b) * Ci + ic) * H + ih) * W + iw];
              }
            }
          }
          gweight[((static_cast<int64_t>(oc) * Ci + ic) * KH + kh) * KW + kw] = acc;
        }
      }
    }
  }
  if (gbias != nullptr) {
    for (int oc = 0; oc < Co; ++oc) {
      S acc = 0;
      for (int b = 0; b < B; ++b) {
        for (int64_t i = 0; i < static_cast<int64_t>(OH) * OW; ++i) {
          acc += gout[(static_cast<int64_t>(b) * Co + oc) * OH * OW + i];
        }
      }
      gbias[oc] = acc;
    }
  }
}

template <typename S>
void maxpool_forward(const S* in, int B, int C, int H, int W, int window,
                     int stride, S* out, int32_t* argmax, int OH, int OW) {
  for (int plane = 0; plane < B * C; ++plane) {
    const S* iplane = in + static_cast<int64_t>(plane) * H * W;
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        S best = iplane[static_cast<int64_t>(oh * stride) * W + ow * stride];
        int32_t besti = oh * stride * W + ow * stride;
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            const int32_t idx = (oh * stride + dy) * W + (ow * stride + dx);
            if (iplane[idx] > best) {
              best = iplane[idx];
              besti = idx;
            }
          }
        }
        out[static_cast<int64_t>(plane) * OH * OW + static_cast<int64_t>(oh) * OW + ow] = best;
        argmax[static_cast<int64_t>(plane) * OH * OW + static_cast<int64_t>(oh) * OW + ow] = besti;
      }
    }
  }
}

template <typename S>
void batchnorm_train_forward(const S* in, int B, int C, int H, int W,
                             const S* gamma, const S* beta, S eps, S* out,
                             S* xhat, S* mean, S* var, S* inv_std) {
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t n = static_cast<int64_t>(B) * plane;
  for (int c = 0; c < C; ++c) {
    S sum = 0;
    for (int b = 0; b < B; ++b) {
      const S* p = in + (static_cast<int64_t>(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) sum += p[i];
    }
    const S m = sum / static_cast<S>(n);
    S sq = 0;
    for (int b = 0; b < B; ++b) {
      const S* p = in + (static_cast<int64_t>(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) sq += (p[i] - m) * (p[i] - m);
    }
    mean[c] = m;
    var[c] = sq / static_cast<S>(n);
    inv_std[c] = S(1) / std::sqrt(var[c] + eps);
    for (int b = 0; b < B; ++b) {
      const int64_t base = (static_cast<int64_t>(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        xhat[base + i] = (in[base + i] - m) * inv_std[c];
        out[base + i] = gamma[c] * xhat[base + i] + beta[c];
      }
    }
  }
}

template <typename S>
void batchnorm_backward(const S* gout, const S* xhat, const S* inv_std,
                        const S* gamma, int B, int C, int H, int W, S* gin,
                        S* ggamma, S* gbeta) {
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t n = static_cast<int64_t>(B) * plane;
  for (int c = 0; c < C; ++c) {
    S sum_g = 0, sum_gx = 0;
    for (int b = 0; b < B; ++b) {
      const int64_t base = (static_cast<int64_t>(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        sum_g += gout[base + i];
        sum_gx += gout[base + i] * xhat[base + i];
      }
    }
    gbeta[c] = sum_g;
    ggamma[c] = sum_gx;
    for (int b = 0; b < B; ++b) {
      const int64_t base = (static_cast<int64_t>(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        gin[base + i] = gamma[c] * inv_std[c] *
                        (gout[base + i] - sum_g / static_cast<S>(n) -
                         xhat[base + i] * sum_gx / static_cast<S>(n));
      }
    }
  }
}

template <typename S>
void linear_forward(const S* x, int N, int In, const S* w, const S* b, int Out,
                    S* y) {
  for (int nrow = 0; nrow < N; ++nrow) {
    for (int o = 0; o < Out; ++o) {
      S acc = 0;
      for (int i = 0; i < In; ++i) {
        acc += x[static_cast<int64_t>(nrow) * In + i] * w[static_cast<int64_t>(o) * In + i];
      }
      y[static_cast<int64_t>(nrow) * Out + o] = acc + (b != nullptr ? b[o] : S(0));
    }
  }
}

template <typename S>
void linear_grad_input(const S* gy, const S* w, int N, int In, int Out,
                       S* gx) {
  for (int nrow = 0; nrow < N; ++nrow) {
    for (int i = 0; i < In; ++i) {
      S acc = 0;
      for (int o = 0; o < Out; ++o) {
        acc += gy[static_cast<int64_t>(nrow) * Out + o] * w[static_cast<int64_t>(o) * In + i];
      }
      gx[static_cast<int64_t>(nrow) * In + i] = acc;
    }
  }
}

template <typename S>
void linear_grad_weight(const S* gy, const S* x, int N, int In, int Out, S* gw,
                        S* gb) {
  for (int o = 0; o < Out; ++o) {
    for (int i = 0; i < In; ++i) {
      S acc = 0;
      for (int nrow = 0; nrow < N; ++nrow) {
        acc += gy[static_cast<int64_t>(nrow) * Out + o] * x[static_cast<int64_t>(nrow) * In + i];
      }
      gw[static_cast<int64_t>(o) * In + i] = acc;
    }
    if (gb != nullptr) {
      S acc = 0;
      for (int nrow = 0; nrow < N; ++nrow) acc += gy[static_cast<int64_t>(nrow) * Out + o];
      gb[o] = acc;
    }
  }
}

#define LINEREC_REF_INSTANTIATE(S)                                             \
  template void conv2d_forward<S>(const S*, int, int, int, int, const S*,     \
                                  const S*, int, int, int, int, int, S*, int, \
                                  int);                                       \
  template void conv2d_grad_input<S>(const S*, int, int, int, int, const S*, \
                                     int, int, int, int, int, S*, int, int); \
  template void conv2d_grad_weight<S>(const S*, const S*, int, int, int, int, \
                                      int, int, int, int, int, S*, S*, int,  \
                                      int);                                   \
  template void maxpool_forward<S>(const S*, int, int, int, int, int, int,   \
                                   S*, int32_t*, int, int);                   \
  template void batchnorm_train_forward<S>(const S*, int, int, int, int,     \
                                           const S*, const S*, S, S*, S*, S*, \
                                           S*, S*);                           \
  template void batchnorm_backward<S>(const S*, const S*, const S*, const S*, \
                                      int, int, int, int, S*, S*, S*);        \
  template void linear_forward<S>(const S*, int, int, const S*, const S*,    \
                                  int, S*);                                   \
  template void linear_grad_input<S>(const S*, const S*, int, int, int, S*);  \
  template void linear_grad_weight<S>(const S*, const S*, int, int, int, S*,  \
                                      S*);

LINEREC_REF_INSTANTIATE(float)
LINEREC_REF_INSTANTIATE(double)

#undef LINEREC_REF_INSTANTIATE

}  // namespace refkernels
}  // namespace linerec
