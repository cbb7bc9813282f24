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

#include "linerec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "linerec/ctc.hpp"

namespace linerec {

namespace {

constexpr double kFdStep = 1e-6;

// Distinct, well-separated values with |v| >= 0.1 so the finite-difference
// step cannot cross a relu kink or flip a pooling argmax.
TensorT<double> separated_input(const std::vector<int>& shape, Rng& rng) {
  TensorT<double> t(shape);
  const int64_t n = t.numel();
  std::vector<int64_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int64_t i = n - 1; i > 0; --i) {
    std::swap(perm[static_cast<size_t>(i)],
              perm[static_cast<size_t>(rng.uniform_int(static_cast<int>(i + 1)))]);
  }
  for (int64_t i = 0; i < n; ++i) {
    const double mag = 0.1 + 0.8 * (static_cast<double>(perm[static_cast<size_t>(i)]) + 0.5) /
                                 static_cast<double>(n);
    t.data()[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

double dot(const TensorT<double>& a, const TensorT<double>& b) {
  double s = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double tensor_rel_err(const TensorT<double>& analytic, const TensorT<double>& fd) {
  double max_diff = 0.0;
  double max_mag = 0.0;
  for (int64_t i = 0; i < analytic.numel(); ++i) {
    max_diff = std::max(max_diff, std::abs(analytic.data()[i] - fd.data()[i]));
    max_mag = std::max({max_mag, std::abs(analytic.data()[i]), std::abs(fd.data()[i])});
  }
  return max_diff / std::max(max_mag, 1e-8);
}

void push_entry(GradCheckReport& report, const std::string& name,
                double rel_err, double tolerance) {
  GradCheckEntry entry{name, rel_err, rel_err < tolerance};
  report.worst = std::max(report.worst, rel_err);
  report.pass = report.pass && entry.pass;
  report.entries.push_back(std::move(entry));
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.pass ? "  ok   " : "  FAIL ") << e.tensor << "  rel_err=" << e.max_rel_err << "\n";
  }
  return os.str();
}

GradCheckReport grad_check(const LayerSpec& spec,
                           const std::vector<int>& input_shape,
                           double tolerance, uint64_t seed) {
  Rng init_rng(seed);
  auto layer = make_layer<double>(spec, init_rng);
  Rng data_rng(seed ^ 0x5eedULL);
  TensorT<double> input = separated_input(input_shape, data_rng);

  // Loss is a fixed random linear functional of the output.
  const Rng forward_rng_snapshot = data_rng.split(7);
  auto run_forward = [&](const TensorT<double>& x) {
    Rng r = forward_rng_snapshot;
    return layer->forward(x, Mode::kTrain, r);
  };

  TensorT<double> out = run_forward(input);
  TensorT<double> weights(out.shape());
  Rng weight_rng = data_rng.split(11);
  for (int64_t i = 0; i < weights.numel(); ++i) {
    weights.data()[i] = weight_rng.uniform(-1.0, 1.0);
  }
  auto loss_of = [&](const TensorT<double>& x) { return dot(run_forward(x), weights); };

  // Analytic gradients: one fresh forward (so the cache matches), then
  // backward of the functional's weights.
  run_forward(input);
  layer->zero_grad();
  TensorT<double> grad_input = layer->backward(weights);
  std::vector<TensorSlot<double>> slots;
  layer->params("", slots);

  GradCheckReport report;

  auto fd_against = [&](TensorT<double>& target, const TensorT<double>& analytic,
                        const std::string& name) {
    TensorT<double> fd(target.shape());
    for (int64_t i = 0; i < target.numel(); ++i) {
      const double saved = target.data()[i];
      target.data()[i] = saved + kFdStep;
      const double up = loss_of(input);
      target.data()[i] = saved - kFdStep;
      const double down = loss_of(input);
      target.data()[i] = saved;
      fd.data()[i] = (up - down) / (2.0 * kFdStep);
    }
    push_entry(report, name, tensor_rel_err(analytic, fd), tolerance);
  };

  fd_against(input, grad_input, "input");
  for (auto& slot : slots) {
    fd_against(*slot.value, *slot.grad, slot.name.empty() ? "param" : slot.name);
  }
  return report;
}

double network_ctc_loss(NetworkT<double>& net, const TensorT<double>& images,
                        const std::vector<std::vector<int>>& labels,
                        const std::vector<int>& seq_lens, Rng rng_at_forward,
                        TensorT<double>* grad_logits) {
  TensorT<double> logits = net.forward(images, Mode::kTrain, rng_at_forward);
  const int T = logits.dim(0);
  const int B = logits.dim(1);
  const int C = logits.dim(2);

  if (grad_logits != nullptr) *grad_logits = TensorT<double>({T, B, C});
  double total = 0.0;
  int finite = 0;
  std::vector<TensorT<double>> grads(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    CtcProblem<double> problem;
    problem.log_probs = TensorT<double>({T, C});
    for (int t = 0; t < T; ++t) {
      const double* src = logits.data() + (static_cast<int64_t>(t) * B + b) * C;
      std::copy(src, src + C, problem.log_probs.data() + static_cast<int64_t>(t) * C);
    }
    problem.log_probs = log_softmax(problem.log_probs, 1);
    problem.labels = labels[static_cast<size_t>(b)];
    problem.valid_len = seq_lens[static_cast<size_t>(b)];
    CtcWorkspace<double> ws;
    const double nll = ctc_loss(problem, &ws);
    if (std::isfinite(nll)) {
      total += nll;
      ++finite;
      if (grad_logits != nullptr) grads[static_cast<size_t>(b)] = ctc_grad(problem, ws);
    }
  }
  if (finite == 0) return std::numeric_limits<double>::infinity();
  if (grad_logits != nullptr) {
    const double scale = 1.0 / finite;
    for (int b = 0; b < B; ++b) {
      if (grads[static_cast<size_t>(b)].empty()) continue;
      for (int t = 0; t < T; ++t) {
        const double* src = grads[static_cast<size_t>(b)].data() + static_cast<int64_t>(t) * C;
        double* dst = grad_logits->data() + (static_cast<int64_t>(t) * B + b) * C;
        for (int c = 0; c < C; ++c) dst[c] = src[c] * scale;
      }
    }
  }
  return total / finite;
}

GradCheckReport grad_check_network(NetworkT<double>& net,
                                   const TensorT<double>& images,
                                   const std::vector<std::vector<int>>& labels,
                                   const std::vector<int>& seq_lens,
                                   double tolerance, uint64_t seed) {
  const Rng forward_rng = Rng(seed).split(3);

  TensorT<double> grad_logits;
  network_ctc_loss(net, images, labels, seq_lens, forward_rng, &grad_logits);
  net.zero_grad();
  net.backward(grad_logits);

  // Copy out analytic grads before finite differences overwrite the caches.
  std::vector<TensorSlot<double>> slots = net.params();
  std::vector<TensorT<double>> analytic;
  analytic.reserve(slots.size());
  for (auto& slot : slots) analytic.push_back(*slot.grad);

  GradCheckReport report;
  for (size_t s = 0; s < slots.size(); ++s) {
    TensorT<double>& value = *slots[s].value;
    TensorT<double> fd(value.shape());
    for (int64_t i = 0; i < value.numel(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + kFdStep;
      const double up = network_ctc_loss(net, images, labels, seq_lens, forward_rng, nullptr);
      value.data()[i] = saved - kFdStep;
      const double down = network_ctc_loss(net, images, labels, seq_lens, forward_rng, nullptr);
      value.data()[i] = saved;
      fd.data()[i] = (up - down) / (2.0 * kFdStep);
    }
    push_entry(report, slots[s].name, tensor_rel_err(analytic[s], fd), tolerance);
  }
  return report;
}

}  // namespace linerec
