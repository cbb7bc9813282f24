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

#include "linerec/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "linerec/layers.hpp"

namespace linerec {

namespace {

template <typename S>
constexpr S kLogZero = -std::numeric_limits<S>::infinity();

// log(exp(a) + exp(b)) without ever subtracting from the -inf sentinel.
template <typename S>
S log_sum_exp(S a, S b) {
  if (a == kLogZero<S>) return b;
  if (b == kLogZero<S>) return a;
  const S m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Minimum number of time steps the labels need: one per label plus one
// separating blank per adjacent equal pair.
int min_steps(const std::vector<int>& labels) {
  int steps = static_cast<int>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++steps;
  }
  return steps;
}

}  // namespace

template <typename S>
void CtcProblem<S>::validate() const {
  if (log_probs.rank() != 2) {
    throw std::invalid_argument("CtcProblem: log_probs must be TxC, got " +
                                log_probs.shape_str());
  }
  const int T = log_probs.dim(0);
  const int C = log_probs.dim(1);
  if (C < 2) {
    throw std::invalid_argument("CtcProblem: need at least blank plus one class");
  }
  if (valid_len < 1 || valid_len > T) {
    throw std::invalid_argument("CtcProblem: valid_len " + std::to_string(valid_len) +
                                " outside [1, " + std::to_string(T) + "]");
  }
  for (int label : labels) {
    if (label == kBlank) {
      throw std::invalid_argument("CtcProblem: blank (class 0) in labels");
    }
    if (label < 1 || label >= C) {
      throw std::invalid_argument("CtcProblem: label " + std::to_string(label) +
                                  " outside [1, " + std::to_string(C - 1) + "]");
    }
  }
}

template <typename S>
S ctc_loss(const CtcProblem<S>& problem, CtcWorkspace<S>* workspace) {
  problem.validate();
  const int T = problem.valid_len;
  const int C = problem.log_probs.dim(1);
  const int L = static_cast<int>(problem.labels.size());
  const int U = 2 * L + 1;
  const S* lp = problem.log_probs.data();
  auto prob = [&](int t, int cls) { return lp[static_cast<int64_t>(t) * C + cls]; };

  std::vector<int> ext(static_cast<size_t>(U), kBlank);
  for (int i = 0; i < L; ++i) ext[static_cast<size_t>(2 * i + 1)] = problem.labels[static_cast<size_t>(i)];

  TensorT<S> log_alpha({U, T});
  TensorT<S> log_beta({U, T});
  log_alpha.fill(kLogZero<S>);
  log_beta.fill(kLogZero<S>);
  auto alpha = [&](int u, int t) -> S& { return log_alpha.data()[static_cast<int64_t>(u) * T + t]; };
  auto beta = [&](int u, int t) -> S& { return log_beta.data()[static_cast<int64_t>(u) * T + t]; };

  // Both alpha and beta include the emission at their own time step, so the
  // total likelihood at any t is sum_u alpha*beta/p_t(label(u)).
  alpha(0, 0) = prob(0, kBlank);
  if (U > 1) alpha(1, 0) = prob(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int u = 0; u < U; ++u) {
      S acc = alpha(u, t - 1);
      if (u > 0) acc = log_sum_exp(acc, alpha(u - 1, t - 1));
      if (u > 1 && ext[static_cast<size_t>(u)] != kBlank &&
          ext[static_cast<size_t>(u)] != ext[static_cast<size_t>(u - 2)]) {
        acc = log_sum_exp(acc, alpha(u - 2, t - 1));
      }
      if (acc != kLogZero<S>) alpha(u, t) = acc + prob(t, ext[static_cast<size_t>(u)]);
    }
  }

  beta(U - 1, T - 1) = prob(T - 1, ext[static_cast<size_t>(U - 1)]);
  if (U > 1) beta(U - 2, T - 1) = prob(T - 1, ext[static_cast<size_t>(U - 2)]);
  for (int t = T - 2; t >= 0; --t) {
    for (int u = 0; u < U; ++u) {
      S acc = beta(u, t + 1);
      if (u + 1 < U) acc = log_sum_exp(acc, beta(u + 1, t + 1));
      if (u + 2 < U && ext[static_cast<size_t>(u + 2)] != kBlank &&
          ext[static_cast<size_t>(u + 2)] != ext[static_cast<size_t>(u)]) {
        acc = log_sum_exp(acc, beta(u + 2, t + 1));
      }
      if (acc != kLogZero<S>) beta(u, t) = acc + prob(t, ext[static_cast<size_t>(u)]);
    }
  }

  S log_like = alpha(U - 1, T - 1);
  if (U > 1) log_like = log_sum_exp(log_like, alpha(U - 2, T - 1));

  if (workspace != nullptr) {
    workspace->log_alpha = std::move(log_alpha);
    workspace->log_beta = std::move(log_beta);
    workspace->extended = std::move(ext);
    workspace->log_likelihood = log_like;
  }
  return log_like == kLogZero<S> ? std::numeric_limits<S>::infinity() : -log_like;
}

template <typename S>
TensorT<S> ctc_grad(const CtcProblem<S>& problem, const CtcWorkspace<S>& ws) {
  if (ws.log_likelihood == kLogZero<S>) {
    throw std::runtime_error("ctc_grad: infeasible alignment has no gradient");
  }
  const int T_total = problem.log_probs.dim(0);
  const int T = problem.valid_len;
  const int C = problem.log_probs.dim(1);
  const int U = static_cast<int>(ws.extended.size());
  const S* lp = problem.log_probs.data();
  const S* la = ws.log_alpha.data();
  const S* lb = ws.log_beta.data();

  TensorT<S> grad({T_total, C});
  for (int t = 0; t < T; ++t) {
    // Posterior occupancy per class: logsumexp of alpha+beta over positions
    // carrying that class, with one emission factor divided back out.
    std::vector<S> occupancy(static_cast<size_t>(C), kLogZero<S>);
    for (int u = 0; u < U; ++u) {
      const S ab = la[static_cast<int64_t>(u) * T + t] + lb[static_cast<int64_t>(u) * T + t];
      if (ab == kLogZero<S>) continue;
      S& slot = occupancy[static_cast<size_t>(ws.extended[static_cast<size_t>(u)])];
      slot = log_sum_exp(slot, ab);
    }
    S* grow = grad.data() + static_cast<int64_t>(t) * C;
    for (int c = 0; c < C; ++c) {
      const S lpc = lp[static_cast<int64_t>(t) * C + c];
      const S softmax = std::exp(lpc);
      const S post = occupancy[static_cast<size_t>(c)] == kLogZero<S>
                         ? S(0)
                         : std::exp(occupancy[static_cast<size_t>(c)] -
                                    ws.log_likelihood - lpc);
      grow[c] = softmax - post;
    }
  }
  return grad;
}

template <typename S>
S ctc_brute_force(const CtcProblem<S>& problem) {
  problem.validate();
  const int T = problem.valid_len;
  const int C = problem.log_probs.dim(1);
  double paths = 1;
  for (int t = 0; t < T; ++t) {
    paths *= C;
    if (paths > 1e6) {
      throw std::invalid_argument("ctc_brute_force: C^valid_len exceeds 1e6");
    }
  }
  const S* lp = problem.log_probs.data();

  std::vector<int> path(static_cast<size_t>(T), 0);
  double total = 0.0;
  while (true) {
    const std::vector<int> collapsed = collapse_path(path);
    if (collapsed == problem.labels) {
      double log_p = 0.0;
      for (int t = 0; t < T; ++t) {
        log_p += static_cast<double>(lp[static_cast<int64_t>(t) * C + path[static_cast<size_t>(t)]]);
      }
      total += std::exp(log_p);
    }
    int t = T - 1;
    while (t >= 0 && path[static_cast<size_t>(t)] == C - 1) {
      path[static_cast<size_t>(t)] = 0;
      --t;
    }
    if (t < 0) break;
    ++path[static_cast<size_t>(t)];
  }
  if (total <= 0.0) return std::numeric_limits<S>::infinity();
  return static_cast<S>(-std::log(total));
}

std::vector<int> collapse_path(std::span<const int> path) {
  std::vector<int> out;
  int prev = -1;
  for (int cls : path) {
    if (cls != prev && cls != kBlank) out.push_back(cls);
    prev = cls;
  }
  return out;
}

template <typename S>
std::vector<int> greedy_decode(const TensorT<S>& logits, int valid_len) {
  if (logits.rank() != 2) {
    throw std::invalid_argument("greedy_decode: logits must be TxC");
  }
  if (valid_len < 0 || valid_len > logits.dim(0)) {
    throw std::invalid_argument("greedy_decode: valid_len out of range");
  }
  const int C = logits.dim(1);
  const S* p = logits.data();
  std::vector<int> path(static_cast<size_t>(valid_len));
  for (int t = 0; t < valid_len; ++t) {
    const S* row = p + static_cast<int64_t>(t) * C;
    int best = 0;
    for (int c = 1; c < C; ++c) {
      if (row[c] > row[best]) best = c;  // ties keep the lower class
    }
    path[static_cast<size_t>(t)] = best;
  }
  return collapse_path(path);
}

BatchCtcResult ctc_batch_loss(const Tensor& logits,
                              const std::vector<std::vector<int>>& labels,
                              const std::vector<int>& seq_lens) {
  if (logits.rank() != 3) {
    throw std::invalid_argument("ctc_batch_loss: logits must be TxBxC");
  }
  const int T = logits.dim(0);
  const int B = logits.dim(1);
  const int C = logits.dim(2);
  if (static_cast<int>(labels.size()) != B || static_cast<int>(seq_lens.size()) != B) {
    throw std::invalid_argument("ctc_batch_loss: batch size mismatch");
  }

  BatchCtcResult result;
  result.per_sample_nll.assign(static_cast<size_t>(B), 0.0);
  result.grad_logits = Tensor({T, B, C});
  std::vector<Tensor> sample_grads(static_cast<size_t>(B));

  // Samples are independent; results are combined in sample order. Exceptions
  // cannot leave the parallel region, so they are collected and rethrown.
  std::string first_error;
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    try {
      CtcProblem<float> problem;
      problem.log_probs = TensorT<float>({T, C});
      for (int t = 0; t < T; ++t) {
        const float* src = logits.data() + (static_cast<int64_t>(t) * B + b) * C;
        float* dst = problem.log_probs.data() + static_cast<int64_t>(t) * C;
        std::copy(src, src + C, dst);
      }
      problem.log_probs = log_softmax(problem.log_probs, 1);
      problem.labels = labels[static_cast<size_t>(b)];
      problem.valid_len = seq_lens[static_cast<size_t>(b)];
      CtcWorkspace<float> ws;
      const float nll = ctc_loss(problem, &ws);
      result.per_sample_nll[static_cast<size_t>(b)] = nll;
      if (std::isfinite(nll)) {
        sample_grads[static_cast<size_t>(b)] = ctc_grad(problem, ws);
      }
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) {
        first_error = "sample " + std::to_string(b) + ": " + e.what();
      }
    }
  }
  if (!first_error.empty()) {
    throw std::runtime_error("ctc_batch_loss: " + first_error);
  }

  for (int b = 0; b < B; ++b) {
    if (std::isfinite(result.per_sample_nll[static_cast<size_t>(b)])) {
      result.mean_nll += result.per_sample_nll[static_cast<size_t>(b)];
      ++result.finite_count;
    } else {
      ++result.infeasible_count;
    }
  }
  if (result.finite_count == 0) {
    result.mean_nll = 0.0;
    return result;
  }
  result.mean_nll /= result.finite_count;

  const float scale = 1.0f / static_cast<float>(result.finite_count);
  for (int b = 0; b < B; ++b) {
    const Tensor& g = sample_grads[static_cast<size_t>(b)];
    if (g.empty()) continue;
    for (int t = 0; t < T; ++t) {
      const float* src = g.data() + static_cast<int64_t>(t) * C;
      float* dst = result.grad_logits.data() + (static_cast<int64_t>(t) * B + b) * C;
      for (int c = 0; c < C; ++c) dst[c] = src[c] * scale;
    }
  }
  return result;
}

template struct CtcProblem<float>;
template struct CtcProblem<double>;
template float ctc_loss<float>(const CtcProblem<float>&, CtcWorkspace<float>*);
template double ctc_loss<double>(const CtcProblem<double>&, CtcWorkspace<double>*);
template TensorT<float> ctc_grad<float>(const CtcProblem<float>&, const CtcWorkspace<float>&);
template TensorT<double> ctc_grad<double>(const CtcProblem<double>&, const CtcWorkspace<double>&);
template float ctc_brute_force<float>(const CtcProblem<float>&);
template double ctc_brute_force<double>(const CtcProblem<double>&);
template std::vector<int> greedy_decode<float>(const TensorT<float>&, int);
template std::vector<int> greedy_decode<double>(const TensorT<double>&, int);

}  // namespace linerec
