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

#include "linerec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace linerec {
namespace kernels {

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int conv_out_dim(int in, int kernel, int stride, int pad) {
  const int out = (in + 2 * pad - kernel) / stride + 1;
  if (out <= 0) {
    throw std::invalid_argument("convolution output dimension is empty");
  }
  return out;
}

namespace {

// Each output element is accumulated by exactly one thread in (ic, kh, kw)
// order, so results do not depend on the thread count. Output channels are
// processed in pairs so every input row load feeds two FMA streams.
template <typename S>
void conv2d_forward_stride1(const S* in, int B, int Ci, int H, int W,
                            const S* weight, int Co, int KH, int KW, int pad,
                            S* out, int OH, int OW) {
  const int pairs = (Co + 1) / 2;
#pragma omp parallel for schedule(static)
  for (int task = 0; task < B * pairs; ++task) {
    const int b = task / pairs;
    const int oc0 = (task % pairs) * 2;
    const bool two = oc0 + 1 < Co;
    S* oplane0 = out + (static_cast<int64_t>(b) * Co + oc0) * OH * OW;
    S* oplane1 = two ? oplane0 + static_cast<int64_t>(OH) * OW : nullptr;
    std::fill(oplane0, oplane0 + static_cast<int64_t>(OH) * OW, S(0));
    if (two) std::fill(oplane1, oplane1 + static_cast<int64_t>(OH) * OW, S(0));
    // Row tiles keep the active output slice cache-resident across the
    // (ic, kh, kw) accumulation passes.
    constexpr int kRowTile = 8;
    for (int oh_base = 0; oh_base < OH; oh_base += kRowTile) {
      const int oh_end = std::min(OH, oh_base + kRowTile);
      for (int ic = 0; ic < Ci; ++ic) {
        const S* iplane = in + (static_cast<int64_t>(b) * Ci + ic) * H * W;
        const S* wbase0 = weight + ((static_cast<int64_t>(oc0) * Ci + ic) * KH) * KW;
        const S* wbase1 = two ? wbase0 + static_cast<int64_t>(Ci) * KH * KW : nullptr;
        for (int kh = 0; kh < KH; ++kh) {
          for (int kw = 0; kw < KW; ++kw) {
            const S wv0 = wbase0[kh * KW + kw];
            const S wv1 = two ? wbase1[kh * KW + kw] : S(0);
            const int oh0 = std::max(oh_base, pad - kh);
            const int oh1 = std::min(oh_end, H + pad - kh);
            const int ow0 = std::max(0, pad - kw);
            const int ow1 = std::min(OW, W + pad - kw);
            for (int oh = oh0; oh < oh1; ++oh) {
              const S* irow = iplane + static_cast<int64_t>(oh + kh - pad) * W + (kw - pad);
              S* orow0 = oplane0 + static_cast<int64_t>(oh) * OW;
              if (two) {
                S* orow1 = oplane1 + static_cast<int64_t>(oh) * OW;
#pragma omp simd
                for (int ow = ow0; ow < ow1; ++ow) {
                  const S v = irow[ow];
                  orow0[ow] += wv0 * v;
                  orow1[ow] += wv1 * v;
                }
              } else {
#pragma omp simd
                for (int ow = ow0; ow < ow1; ++ow) {
                  orow0[ow] += wv0 * irow[ow];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename S>
void conv2d_forward_generic(const S* in, int B, int Ci, int H, int W,
                            const S* weight, int Co, int KH, int KW, int stride,
                            int pad, S* out, int OH, int OW) {
#pragma omp parallel for schedule(static)
  for (int plane = 0; plane < B * Co; ++plane) {
    const int b = plane / Co;
    const int oc = plane % Co;
    S* oplane = out + (static_cast<int64_t>(b) * Co + oc) * OH * OW;
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        S acc = 0;
        for (int ic = 0; ic < Ci; ++ic) {
          const S* iplane = in + (static_cast<int64_t>(b) * Ci + ic) * H * W;
          const S* wbase = weight + ((static_cast<int64_t>(oc) * Ci + ic) * KH) * KW;
          for (int kh = 0; kh < KH; ++kh) {
            const int ih = oh * stride + kh - pad;
            if (ih < 0 || ih >= H) continue;
            for (int kw = 0; kw < KW; ++kw) {
              const int iw = ow * stride + kw - pad;
              if (iw < 0 || iw >= W) continue;
              acc += wbase[kh * KW + kw] * iplane[static_cast<int64_t>(ih) * W + iw];
            }
          }
        }
        oplane[static_cast<int64_t>(oh) * OW + ow] = acc;
      }
    }
  }
}

}  // namespace

template <typename S>
void conv2d_forward(const S* in, int B, int Ci, int H, int W, const S* weight,
                    const S* bias, int Co, int KH, int KW, int stride, int pad,
                    S* out, int OH, int OW) {
  if (stride == 1) {
    conv2d_forward_stride1(in, B, Ci, H, W, weight, Co, KH, KW, pad, out, OH, OW);
  } else {
    conv2d_forward_generic(in, B, Ci, H, W, weight, Co, KH, KW, stride, pad, out, OH, OW);
  }
  if (bias != nullptr) {
#pragma omp parallel for schedule(static)
    for (int plane = 0; plane < B * Co; ++plane) {
      const int oc = plane % Co;
      S* oplane = out + static_cast<int64_t>(plane) * OH * OW;
      const S bv = bias[oc];
      for (int64_t i = 0; i < static_cast<int64_t>(OH) * OW; ++i) oplane[i] += bv;
    }
  }
}

template <typename S>
void conv2d_grad_input(const S* gout, int B, int Ci, int H, int W,
                       const S* weight, int Co, int KH, int KW, int stride,
                       int pad, S* gin, int OH, int OW) {
  if (stride == 1) {
    const int pairs = (Ci + 1) / 2;
#pragma omp parallel for schedule(static)
    for (int task = 0; task < B * pairs; ++task) {
      const int b = task / pairs;
      const int ic0 = (task % pairs) * 2;
      const bool two = ic0 + 1 < Ci;
      S* gplane0 = gin + (static_cast<int64_t>(b) * Ci + ic0) * H * W;
      S* gplane1 = two ? gplane0 + static_cast<int64_t>(H) * W : nullptr;
      std::fill(gplane0, gplane0 + static_cast<int64_t>(H) * W, S(0));
      if (two) std::fill(gplane1, gplane1 + static_cast<int64_t>(H) * W, S(0));
      constexpr int kRowTile = 8;
      for (int ih_base = 0; ih_base < H; ih_base += kRowTile) {
        const int ih_end = std::min(H, ih_base + kRowTile);
        for (int oc = 0; oc < Co; ++oc) {
          const S* goplane = gout + (static_cast<int64_t>(b) * Co + oc) * OH * OW;
          const S* wbase0 = weight + ((static_cast<int64_t>(oc) * Ci + ic0) * KH) * KW;
          const S* wbase1 = two ? wbase0 + static_cast<int64_t>(KH) * KW : nullptr;
          for (int kh = 0; kh < KH; ++kh) {
            for (int kw = 0; kw < KW; ++kw) {
              const S wv0 = wbase0[kh * KW + kw];
              const S wv1 = two ? wbase1[kh * KW + kw] : S(0);
              // ih maps to oh = ih + pad - kh; keep both in range.
              const int ih0 = std::max(ih_base, kh - pad);
              const int ih1 = std::min(ih_end, OH + kh - pad);
              const int iw0 = std::max(0, kw - pad);
              const int iw1 = std::min(W, OW + kw - pad);
              for (int ih = ih0; ih < ih1; ++ih) {
                const S* grow = goplane + static_cast<int64_t>(ih + pad - kh) * OW + (pad - kw);
                S* irow0 = gplane0 + static_cast<int64_t>(ih) * W;
                if (two) {
                  S* irow1 = gplane1 + static_cast<int64_t>(ih) * W;
#pragma omp simd
                  for (int iw = iw0; iw < iw1; ++iw) {
                    const S g = grow[iw];
                    irow0[iw] += wv0 * g;
                    irow1[iw] += wv1 * g;
                  }
                } else {
#pragma omp simd
                  for (int iw = iw0; iw < iw1; ++iw) {
                    irow0[iw] += wv0 * grow[iw];
                  }
                }
              }
            }
          }
        }
      }
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int plane = 0; plane < B * Ci; ++plane) {
      const int b = plane / Ci;
      const int ic = plane % Ci;
      S* gplane = gin + static_cast<int64_t>(plane) * H * W;
      for (int ih = 0; ih < H; ++ih) {
        for (int iw = 0; iw < W; ++iw) {
          S acc = 0;
          for (int oc = 0; oc < Co; ++oc) {
            const S* goplane = gout + (static_cast<int64_t>(b) * Co + oc) * OH * OW;
            const S* wbase = weight + ((static_cast<int64_t>(oc) * Ci + ic) * KH) * KW;
            for (int kh = 0; kh < KH; ++kh) {
              const int num = ih + pad - kh;
              if (num < 0 || num % stride != 0) continue;
              const int oh = num / stride;
              if (oh >= OH) continue;
              for (int kw = 0; kw < KW; ++kw) {
                const int numw = iw + pad - kw;
                if (numw < 0 || numw % stride != 0) continue;
                const int ow = numw / stride;
                if (ow >= OW) continue;
                acc += wbase[kh * KW + kw] * goplane[static_cast<int64_t>(oh) * OW + ow];
              }
            }
          }
          gplane[static_cast<int64_t>(ih) * W + iw] = acc;
        }
      }
    }
  }
}

template <typename S>
void conv2d_grad_weight(const S* in, const S* gout, int B, int Ci, int H,
                        int W, int Co, int KH, int KW, int stride, int pad,
                        S* gweight, S* gbias, int OH, int OW) {
  // Lane-array accumulators keep the dot products vectorized and defer the
  // horizontal reduction to one per weight element.
  constexpr int kLanes = 16;
#pragma omp parallel for schedule(static)
  for (int pair = 0; pair < Co * Ci; ++pair) {
    const int oc = pair / Ci;
    const int ic = pair % Ci;
    S* wbase = gweight + static_cast<int64_t>(pair) * KH * KW;
    for (int kh = 0; kh < KH; ++kh) {
      for (int kw = 0; kw < KW; ++kw) {
        S lanes[kLanes] = {};
        S tail = 0;
        for (int b = 0; b < B; ++b) {
          const S* iplane = in + (static_cast<int64_t>(b) * Ci + ic) * H * W;
          const S* goplane = gout + (static_cast<int64_t>(b) * Co + oc) * OH * OW;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * stride + kh - pad;
            if (ih < 0 || ih >= H) continue;
            if (stride == 1) {
              const int ow0 = std::max(0, pad - kw);
              const int ow1 = std::min(OW, W + pad - kw);
              const S* irow = iplane + static_cast<int64_t>(ih) * W + (kw - pad);
              const S* grow = goplane + static_cast<int64_t>(oh) * OW;
              int ow = ow0;
              for (; ow + kLanes <= ow1; ow += kLanes) {
#pragma omp simd
                for (int l = 0; l < kLanes; ++l) {
                  lanes[l] += grow[ow + l] * irow[ow + l];
                }
              }
              for (; ow < ow1; ++ow) tail += grow[ow] * irow[ow];
            } else {
              for (int ow = 0; ow < OW; ++ow) {
                const int iw = ow * stride + kw - pad;
                if (iw < 0 || iw >= W) continue;
                tail += goplane[static_cast<int64_t>(oh) * OW + ow] *
                        iplane[static_cast<int64_t>(ih) * W + iw];
              }
            }
          }
        }
        S acc = tail;
        for (int l = 0; l < kLanes; ++l) acc += lanes[l];
        wbase[kh * KW + kw] = acc;
      }
    }
  }
  if (gbias != nullptr) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < Co; ++oc) {
      S acc = 0;
      for (int b = 0; b < B; ++b) {
        const S* goplane = gout + (static_cast<int64_t>(b) * Co + oc) * OH * OW;
        S planeacc = 0;
#pragma omp simd reduction(+ : planeacc)
        for (int64_t i = 0; i < static_cast<int64_t>(OH) * OW; ++i) {
          planeacc += goplane[i];
        }
        acc += planeacc;
      }
      gbias[oc] = acc;
    }
  }
}

template <typename S>
void maxpool_forward(const S* in, int B, int C, int H, int W, int window,
                     int stride, S* out, int32_t* argmax, int OH, int OW) {
#pragma omp parallel for schedule(static)
  for (int plane = 0; plane < B * C; ++plane) {
    const S* iplane = in + static_cast<int64_t>(plane) * H * W;
    S* oplane = out + static_cast<int64_t>(plane) * OH * OW;
    int32_t* aplane = argmax + static_cast<int64_t>(plane) * OH * OW;
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        const int ih0 = oh * stride;
        const int iw0 = ow * stride;
        // Ties break to the first element in row-major window order.
        S best = iplane[static_cast<int64_t>(ih0) * W + iw0];
        int32_t besti = ih0 * W + iw0;
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            const int32_t idx = (ih0 + dy) * W + (iw0 + dx);
            const S v = iplane[idx];
            if (v > best) {
              best = v;
              besti = idx;
            }
          }
        }
        oplane[static_cast<int64_t>(oh) * OW + ow] = best;
        aplane[static_cast<int64_t>(oh) * OW + ow] = besti;
      }
    }
  }
}

template <typename S>
void maxpool_backward(const S* gout, int B, int C, int OH, int OW,
                      const int32_t* argmax, S* gin, int H, int W) {
#pragma omp parallel for schedule(static)
  for (int plane = 0; plane < B * C; ++plane) {
    const S* goplane = gout + static_cast<int64_t>(plane) * OH * OW;
    const int32_t* aplane = argmax + static_cast<int64_t>(plane) * OH * OW;
    S* gplane = gin + static_cast<int64_t>(plane) * H * W;
    std::fill(gplane, gplane + static_cast<int64_t>(H) * W, S(0));
    for (int64_t i = 0; i < static_cast<int64_t>(OH) * OW; ++i) {
      gplane[aplane[i]] += goplane[i];
    }
  }
}

template <typename S>
void relu_forward(const S* in, int64_t n, S* out, uint8_t* mask) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const bool pos = in[i] > S(0);
    out[i] = pos ? in[i] : S(0);
    if (mask != nullptr) mask[i] = pos ? 1 : 0;
  }
}

template <typename S>
void relu_backward(const S* gout, const uint8_t* mask, int64_t n, S* gin) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    gin[i] = mask[i] ? gout[i] : S(0);
  }
}

template <typename S>
void batchnorm_train_forward(const S* in, int B, int C, int H, int W,
                             const S* gamma, const S* beta, S eps, S* out,
                             S* xhat, S* mean, S* var, S* inv_std) {
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t n = static_cast<int64_t>(B) * plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    S sum = 0;
    for (int b = 0; b < B; ++b) {
      const S* p = in + (static_cast<int64_t>(b) * C + c) * plane;
      S s = 0;
#pragma omp simd reduction(+ : s)
      for (int64_t i = 0; i < plane; ++i) s += p[i];
      sum += s;
    }
    const S m = sum / static_cast<S>(n);
    S sq = 0;
    for (int b = 0; b < B; ++b) {
      const S* p = in + (static_cast<int64_t>(b) * C + c) * plane;
      S s = 0;
#pragma omp simd reduction(+ : s)
      for (int64_t i = 0; i < plane; ++i) {
        const S d = p[i] - m;
        s += d * d;
      }
      sq += s;
    }
    mean[c] = m;
    var[c] = sq / static_cast<S>(n);
    inv_std[c] = S(1) / std::sqrt(var[c] + eps);
  }
#pragma omp parallel for schedule(static)
  for (int bc = 0; bc < B * C; ++bc) {
    const int c = bc % C;
    const S* p = in + static_cast<int64_t>(bc) * plane;
    S* xh = xhat + static_cast<int64_t>(bc) * plane;
    S* o = out + static_cast<int64_t>(bc) * plane;
    const S m = mean[c];
    const S is = inv_std[c];
    const S g = gamma[c];
    const S bta = beta[c];
    for (int64_t i = 0; i < plane; ++i) {
      const S z = (p[i] - m) * is;
      xh[i] = z;
      o[i] = g * z + bta;
    }
  }
}

template <typename S>
void batchnorm_eval_forward(const S* in, int B, int C, int H, int W,
                            const S* gamma, const S* beta,
                            const S* running_mean, const S* running_var, S eps,
                            S* out) {
  const int64_t plane = static_cast<int64_t>(H) * W;
#pragma omp parallel for schedule(static)
  for (int bc = 0; bc < B * C; ++bc) {
    const int c = bc % C;
    const S scale = gamma[c] / std::sqrt(running_var[c] + eps);
    const S shift = beta[c] - running_mean[c] * scale;
    const S* p = in + static_cast<int64_t>(bc) * plane;
    S* o = out + static_cast<int64_t>(bc) * plane;
    for (int64_t i = 0; i < plane; ++i) o[i] = p[i] * scale + shift;
  }
}

template <typename S>
void batchnorm_backward(const S* gout, const S* xhat, const S* inv_std,
                        const S* gamma, int B, int C, int H, int W, S* gin,
                        S* ggamma, S* gbeta) {
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t n = static_cast<int64_t>(B) * plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    S sum_g = 0;
    S sum_gx = 0;
    for (int b = 0; b < B; ++b) {
      const int64_t base = (static_cast<int64_t>(b) * C + c) * plane;
      const S* g = gout + base;
      const S* xh = xhat + base;
      S s1 = 0, s2 = 0;
#pragma omp simd reduction(+ : s1, s2)
      for (int64_t i = 0; i < plane; ++i) {
        s1 += g[i];
        s2 += g[i] * xh[i];
      }
      sum_g += s1;
      sum_gx += s2;
    }
    gbeta[c] = sum_g;
    ggamma[c] = sum_gx;
  }
#pragma omp parallel for schedule(static)
  for (int bc = 0; bc < B * C; ++bc) {
    const int c = bc % C;
    const int64_t base = static_cast<int64_t>(bc) * plane;
    const S* g = gout + base;
    const S* xh = xhat + base;
    S* gi = gin + base;
    const S k = gamma[c] * inv_std[c];
    const S mg = gbeta[c] / static_cast<S>(n);
    const S mgx = ggamma[c] / static_cast<S>(n);
    for (int64_t i = 0; i < plane; ++i) {
      gi[i] = k * (g[i] - mg - xh[i] * mgx);
    }
  }
}

template <typename S>
void linear_forward(const S* x, int N, int In, const S* w, const S* b, int Out,
                    S* y) {
#pragma omp parallel for schedule(static)
  for (int nrow = 0; nrow < N; ++nrow) {
    const S* xr = x + static_cast<int64_t>(nrow) * In;
    S* yr = y + static_cast<int64_t>(nrow) * Out;
    for (int o = 0; o < Out; ++o) {
      const S* wr = w + static_cast<int64_t>(o) * In;
      S acc = 0;
#pragma omp simd reduction(+ : acc)
      for (int i = 0; i < In; ++i) acc += xr[i] * wr[i];
      yr[o] = acc + (b != nullptr ? b[o] : S(0));
    }
  }
}

template <typename S>
void linear_grad_input(const S* gy, const S* w, int N, int In, int Out,
                       S* gx) {
#pragma omp parallel for schedule(static)
  for (int nrow = 0; nrow < N; ++nrow) {
    const S* gr = gy + static_cast<int64_t>(nrow) * Out;
    S* gxr = gx + static_cast<int64_t>(nrow) * In;
    std::fill(gxr, gxr + In, S(0));
    for (int o = 0; o < Out; ++o) {
      const S g = gr[o];
      const S* wr = w + static_cast<int64_t>(o) * In;
      for (int i = 0; i < In; ++i) gxr[i] += g * wr[i];
    }
  }
}

template <typename S>
void linear_grad_weight(const S* gy, const S* x, int N, int In, int Out, S* gw,
                        S* gb) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < Out; ++o) {
    S* gwr = gw + static_cast<int64_t>(o) * In;
    std::fill(gwr, gwr + In, S(0));
    S gbacc = 0;
    for (int nrow = 0; nrow < N; ++nrow) {
      const S g = gy[static_cast<int64_t>(nrow) * Out + o];
      const S* xr = x + static_cast<int64_t>(nrow) * In;
      for (int i = 0; i < In; ++i) gwr[i] += g * xr[i];
      gbacc += g;
    }
    if (gb != nullptr) gb[o] = gbacc;
  }
}

template <typename S>
void scale_mask_apply(const S* in, const S* mask, int64_t n, S* out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) out[i] = in[i] * mask[i];
}

template <typename S>
void add(const S* a, const S* b, int64_t n, S* out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename S>
void log_softmax_rows(const S* in, int64_t rows, int C, S* out) {
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const S* x = in + r * C;
    S* y = out + r * C;
    S mx = x[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, x[c]);
    S sum = 0;
    for (int c = 0; c < C; ++c) sum += std::exp(x[c] - mx);
    const S lse = mx + std::log(sum);
    for (int c = 0; c < C; ++c) y[c] = x[c] - lse;
  }
}

#define LINEREC_INSTANTIATE(S)                                                 \
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
  template void maxpool_backward<S>(const S*, int, int, int, int,            \
                                    const int32_t*, S*, int, int);            \
  template void relu_forward<S>(const S*, int64_t, S*, uint8_t*);             \
  template void relu_backward<S>(const S*, const uint8_t*, int64_t, S*);      \
  template void batchnorm_train_forward<S>(const S*, int, int, int, int,     \
                                           const S*, const S*, S, S*, S*, S*, \
                                           S*, S*);                           \
  template void batchnorm_eval_forward<S>(const S*, int, int, int, int,      \
                                          const S*, const S*, const S*,       \
                                          const S*, S, S*);                   \
  template void batchnorm_backward<S>(const S*, const S*, const S*, const S*, \
                                      int, int, int, int, S*, S*, S*);        \
  template void linear_forward<S>(const S*, int, int, const S*, const S*,    \
                                  int, S*);                                   \
  template void linear_grad_input<S>(const S*, const S*, int, int, int, S*);  \
  template void linear_grad_weight<S>(const S*, const S*, int, int, int, S*,  \
                                      S*);                                    \
  template void scale_mask_apply<S>(const S*, const S*, int64_t, S*);         \
  template void add<S>(const S*, const S*, int64_t, S*);                      \
  template void log_softmax_rows<S>(const S*, int64_t, int, S*);

LINEREC_INSTANTIATE(float)
LINEREC_INSTANTIATE(double)

#undef LINEREC_INSTANTIATE

}  // namespace kernels
}  // namespace linerec
