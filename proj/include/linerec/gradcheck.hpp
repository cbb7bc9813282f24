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

#ifndef LINEREC_GRADCHECK_HPP_
#define LINEREC_GRADCHECK_HPP_

#include <string>
#include <vector>

#include "linerec/arch.hpp"
#include "linerec/layers.hpp"

namespace linerec {

struct GradCheckEntry {
  std::string tensor;  // "input" or a parameter name
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  bool pass = true;

  std::string summary() const;
};

// Compares the analytic backward of one layer against central finite
// differences (step 1e-6) of a random linear functional of its output, on a
// random 64-bit input of the given shape. Per-tensor error is the max
// absolute difference normalized by the larger of the two gradients'
// max-magnitudes. Failures are reported, not thrown.
GradCheckReport grad_check(const LayerSpec& spec,
                           const std::vector<int>& input_shape,
                           double tolerance, uint64_t seed = 1234);

// Same comparison for every parameter of a full 64-bit network under the
// batch-mean CTC loss on one fixed batch.
GradCheckReport grad_check_network(NetworkT<double>& net,
                                   const TensorT<double>& images,
                                   const std::vector<std::vector<int>>& labels,
                                   const std::vector<int>& seq_lens,
                                   double tolerance, uint64_t seed = 1234);

// Mean CTC negative log-likelihood of a 64-bit network on one batch, plus the
// analytic logits gradient; shared by grad_check_network and its tests.
double network_ctc_loss(NetworkT<double>& net, const TensorT<double>& images,
                        const std::vector<std::vector<int>>& labels,
                        const std::vector<int>& seq_lens, Rng rng_at_forward,
                        TensorT<double>* grad_logits);

}  // namespace linerec

#endif  // LINEREC_GRADCHECK_HPP_
