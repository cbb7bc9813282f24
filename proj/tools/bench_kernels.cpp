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

// Times the production OpenMP kernels against the naive serial references at
// training-shaped workloads, at 1 and N threads.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "linerec/kernels.hpp"
#include "linerec/reference_kernels.hpp"
#include "linerec/rng.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}

std::vector<float> random_vec(size_t n, linerec::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

struct Case {
  std::string name;
  double flops;  // per call, for the throughput column
  std::function<void()> reference;
  std::function<void()> production;
};

void report(const Case& c, int reps, int threads) {
  const double t_ref = time_of(c.reference, reps);
  linerec::kernels::set_threads(1);
  const double t_one = time_of(c.production, reps);
  linerec::kernels::set_threads(threads);
  const double t_n = time_of(c.production, reps);
  std::printf("%-26s %9.3f ms %9.3f ms %9.3f ms %8.2fx %9.2f GFLOP/s\n",
              c.name.c_str(), t_ref * 1e3, t_one * 1e3, t_n * 1e3, t_ref / t_n,
              c.flops / t_n / 1e9);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = linerec::kernels::max_threads();
  int reps = 10;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--threads" && i + 1 < argc) threads = std::atoi(argv[++i]);
    else if (arg == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    else {
      std::printf("usage: %s [--threads N] [--reps N]\n", argv[0]);
      return 2;
    }
  }

  linerec::Rng rng(42);

  // Shapes sampled from the middle of the recognizer: batch 4, stage-2-like
  // feature maps.
  const int B = 4, Ci = 32, Co = 32, H = 32, W = 128, K = 3, pad = 1;
  const int OH = H, OW = W;
  const auto in = random_vec(static_cast<size_t>(B) * Ci * H * W, rng);
  const auto wt = random_vec(static_cast<size_t>(Co) * Ci * K * K, rng);
  const auto gout = random_vec(static_cast<size_t>(B) * Co * OH * OW, rng);
  std::vector<float> out(static_cast<size_t>(B) * Co * OH * OW);
  std::vector<float> gin(in.size());
  std::vector<float> gw(wt.size());
  std::vector<float> gb(static_cast<size_t>(Co));
  const double conv_flops = 2.0 * B * Co * Ci * K * K * OH * OW;

  const int Lin_N = 512, Lin_I = 256, Lin_O = 64;
  const auto lx = random_vec(static_cast<size_t>(Lin_N) * Lin_I, rng);
  const auto lw = random_vec(static_cast<size_t>(Lin_O) * Lin_I, rng);
  const auto lb = random_vec(static_cast<size_t>(Lin_O), rng);
  std::vector<float> ly(static_cast<size_t>(Lin_N) * Lin_O);

  std::vector<float> bn_out(in.size()), bn_xhat(in.size());
  std::vector<float> bn_gamma(static_cast<size_t>(Ci), 1.0f), bn_beta(static_cast<size_t>(Ci), 0.0f);
  std::vector<float> bn_mean(static_cast<size_t>(Ci)), bn_var(static_cast<size_t>(Ci)),
      bn_istd(static_cast<size_t>(Ci));

  std::vector<Case> cases;
  cases.push_back({"conv2d_forward", conv_flops,
                   [&] {
                     linerec::refkernels::conv2d_forward(in.data(), B, Ci, H, W, wt.data(),
                                                         static_cast<const float*>(nullptr),
                                                         Co, K, K, 1, pad,
                                                         out.data(), OH, OW);
                   },
                   [&] {
                     linerec::kernels::conv2d_forward(in.data(), B, Ci, H, W, wt.data(),
                                                      static_cast<const float*>(nullptr),
                                                      Co, K, K, 1, pad,
                                                      out.data(), OH, OW);
                   }});
  cases.push_back({"conv2d_grad_input", conv_flops,
                   [&] {
                     linerec::refkernels::conv2d_grad_input(gout.data(), B, Ci, H, W,
                                                            wt.data(), Co, K, K, 1, pad,
                                                            gin.data(), OH, OW);
                   },
                   [&] {
                     linerec::kernels::conv2d_grad_input(gout.data(), B, Ci, H, W,
                                                         wt.data(), Co, K, K, 1, pad,
                                                         gin.data(), OH, OW);
                   }});
  cases.push_back({"conv2d_grad_weight", conv_flops,
                   [&] {
                     linerec::refkernels::conv2d_grad_weight(in.data(), gout.data(), B, Ci,
                                                             H, W, Co, K, K, 1, pad,
                                                             gw.data(), gb.data(), OH, OW);
                   },
                   [&] {
                     linerec::kernels::conv2d_grad_weight(in.data(), gout.data(), B, Ci,
                                                          H, W, Co, K, K, 1, pad,
                                                          gw.data(), gb.data(), OH, OW);
                   }});
  cases.push_back({"batchnorm_train_forward", 8.0 * in.size(),
                   [&] {
                     linerec::refkernels::batchnorm_train_forward(
                         in.data(), B, Ci, H, W, bn_gamma.data(), bn_beta.data(), 1e-5f,
                         bn_out.data(), bn_xhat.data(), bn_mean.data(), bn_var.data(),
                         bn_istd.data());
                   },
                   [&] {
                     linerec::kernels::batchnorm_train_forward(
                         in.data(), B, Ci, H, W, bn_gamma.data(), bn_beta.data(), 1e-5f,
                         bn_out.data(), bn_xhat.data(), bn_mean.data(), bn_var.data(),
                         bn_istd.data());
                   }});
  cases.push_back({"linear_forward", 2.0 * Lin_N * Lin_I * Lin_O,
                   [&] {
                     linerec::refkernels::linear_forward(lx.data(), Lin_N, Lin_I, lw.data(),
                                                         lb.data(), Lin_O, ly.data());
                   },
                   [&] {
                     linerec::kernels::linear_forward(lx.data(), Lin_N, Lin_I, lw.data(),
                                                      lb.data(), Lin_O, ly.data());
                   }});

  std::printf("kernel                        reference    omp x1    omp x%-3d  speedup   throughput\n",
              threads);
  std::printf("------------------------------------------------------------------------------------\n");
  for (const Case& c : cases) report(c, reps, threads);
  return 0;
}
