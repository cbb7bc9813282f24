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

#ifndef LINEREC_CTC_HPP_
#define LINEREC_CTC_HPP_

#include <span>
#include <vector>

#include "linerec/tensor.hpp"

namespace linerec {

// Blank is class 0 throughout; label classes are 1-based.
inline constexpr int kBlank = 0;

// One (log-probability matrix, label sequence) pair. log_probs is TxC
// log-softmax output; only the first valid_len rows are read.
template <typename S>
struct CtcProblem {
  TensorT<S> log_probs;
  std::vector<int> labels;
  int valid_len = 0;

  void validate() const;  // throws on blank/out-of-range labels, bad valid_len
};

template <typename S>
struct CtcWorkspace {
  TensorT<S> log_alpha;        // (2L+1) x T forward variables, log domain
  TensorT<S> log_beta;         // (2L+1) x T backward variables, log domain
  std::vector<int> extended;   // blank-interleaved label sequence
  S log_likelihood = 0;        // log p(labels | log_probs)
};

// Negative log-likelihood over all alignments that collapse to the labels.
// Infeasible label sequences (valid_len < L + adjacent-repeat count) yield
// +infinity, not an error, so batch training can skip such samples.
template <typename S>
S ctc_loss(const CtcProblem<S>& problem, CtcWorkspace<S>* workspace);

// d(nll)/d(logits) for the pre-softmax logits behind log_probs:
// softmax - posterior label occupancy. Rows at and beyond valid_len are zero;
// every valid row sums to zero. Requires a finite loss.
template <typename S>
TensorT<S> ctc_grad(const CtcProblem<S>& problem,
                    const CtcWorkspace<S>& workspace);

// Exhaustive oracle: sums path probabilities over all C^valid_len alignments.
// Enforces C^valid_len <= 1e6; test use only.
template <typename S>
S ctc_brute_force(const CtcProblem<S>& problem);

// Collapse a path: merge consecutive duplicates, then delete blanks.
std::vector<int> collapse_path(std::span<const int> path);

// Per-step argmax over the first valid_len rows (ties to the lower class),
// then CTC collapse. Accepts raw logits; argmax is shift-invariant.
template <typename S>
std::vector<int> greedy_decode(const TensorT<S>& logits, int valid_len);

// Mean CTC loss and logits gradient over a TxBxC batch. Samples with
// infeasible labels are excluded from the mean and counted; the gradient of
// an all-infeasible batch is zero.
struct BatchCtcResult {
  double mean_nll = 0.0;
  int finite_count = 0;
  int infeasible_count = 0;
  std::vector<double> per_sample_nll;
  Tensor grad_logits;
};

BatchCtcResult ctc_batch_loss(const Tensor& logits,
                              const std::vector<std::vector<int>>& labels,
                              const std::vector<int>& seq_lens);

extern template struct CtcProblem<float>;
extern template struct CtcProblem<double>;
extern template float ctc_loss<float>(const CtcProblem<float>&, CtcWorkspace<float>*);
extern template double ctc_loss<double>(const CtcProblem<double>&, CtcWorkspace<double>*);
extern template TensorT<float> ctc_grad<float>(const CtcProblem<float>&, const CtcWorkspace<float>&);
extern template TensorT<double> ctc_grad<double>(const CtcProblem<double>&, const CtcWorkspace<double>&);
extern template float ctc_brute_force<float>(const CtcProblem<float>&);
extern template double ctc_brute_force<double>(const CtcProblem<double>&);
extern template std::vector<int> greedy_decode<float>(const TensorT<float>&, int);
extern template std::vector<int> greedy_decode<double>(const TensorT<double>&, int);

}  // namespace linerec

#endif  // LINEREC_CTC_HPP_
